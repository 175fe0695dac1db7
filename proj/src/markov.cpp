#include "ergostab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "ergostab/error.hpp"

namespace ergostab {

LossPartition LossPartition::uniform(double lower, double upper, std::size_t bins) {
  if (bins < 2) throw ParameterError("LossPartition: need at least 2 bins");
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw ParameterError("LossPartition: need finite bounds with upper > lower");
  }
  return LossPartition{lower, upper, bins};
}

LossPartition LossPartition::fit(std::span<const double> series, std::size_t runup,
                                 std::size_t bins, double margin) {
  if (series.size() <= runup) {
    throw InsufficientDataError("LossPartition::fit: no samples after the runup");
  }
  const auto window = series.subspan(runup);
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  const double range = *hi - *lo;
  if (range > 0.0) {
    return uniform(*lo - margin * range, *hi + margin * range, bins);
  }
  const double half = std::max(std::abs(*lo), 1.0) * std::max(margin, 1e-6);
  return uniform(*lo - half, *lo + half, bins);
}

std::vector<double> LossPartition::edges() const {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(bins);
  }
  return e;
}

LossPartition::Bin LossPartition::locate(double value) const {
  const bool clamped = value < lower || value > upper;
  const double u = (value - lower) / (upper - lower) * static_cast<double>(bins);
  std::size_t idx = 0;
  if (u >= static_cast<double>(bins)) {
    idx = bins - 1;
  } else if (u > 0.0) {
    idx = static_cast<std::size_t>(u);
  }
  return {idx, clamped};
}

namespace {

void normalize_rows(TransitionMatrix& T) {
  const auto K = T.counts.rows();
  T.probabilities.resize(K, K);
  T.empty_rows.assign(static_cast<std::size_t>(K), 0);
  for (Eigen::Index i = 0; i < K; ++i) {
    const double total = T.counts.row(i).sum() + static_cast<double>(K) * T.smoothing;
    if (total > 0.0) {
      T.probabilities.row(i) = (T.counts.row(i).array() + T.smoothing) / total;
    } else {
      T.probabilities.row(i).setConstant(1.0 / static_cast<double>(K));
      T.empty_rows[static_cast<std::size_t>(i)] = 1;
    }
  }
}

void check_stochastic(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() == 0) {
    throw ParameterError("transition matrix must be square and non-empty");
  }
  if (!P.allFinite() || P.minCoeff() < -1e-12) {
    throw ParameterError("transition matrix has negative or non-finite entries");
  }
  const Eigen::VectorXd sums = P.rowwise().sum();
  if ((sums.array() - 1.0).abs().maxCoeff() > 1e-9) {
    throw ParameterError("transition matrix rows must sum to 1");
  }
}

Eigen::VectorXd normalize_distribution(Eigen::VectorXd v) {
  const double total = v.sum();
  if (std::abs(total) > 1e-300) {
    v /= total;
  } else {
    v = v.cwiseAbs();
    v /= v.sum();
  }
  return v;
}

// Stationary distribution of the lazy chain (P + I) / 2, which shares pi with P
// but is aperiodic.
Eigen::VectorXd power_stationary(const Eigen::MatrixXd& P) {
  const auto K = P.rows();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(K, 1.0 / static_cast<double>(K));
  for (int it = 0; it < 200000; ++it) {
    const Eigen::RowVectorXd next = 0.5 * (pi + pi * P);
    const double change = (next - pi).lpNorm<1>();
    pi = next / next.sum();
    if (change < 1e-14) break;
  }
  return pi.transpose();
}

// |lambda_2| from the growth rate of mean-zero row vectors under P.
double power_second_modulus(const Eigen::MatrixXd& P) {
  const auto K = P.rows();
  Eigen::RowVectorXd x(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    x(i) = std::sin(1.0 + 2.3 * static_cast<double>(i)) + 0.1 * static_cast<double>(i % 7);
  }
  const int burn = 1000;
  const int measure = 1000;
  double log_growth = 0.0;
  for (int it = 0; it < burn + measure; ++it) {
    x.array() -= x.mean();
    const double before = x.norm();
    if (before == 0.0) return 0.0;
    x /= before;
    x = x * P;
    x.array() -= x.mean();
    if (it >= burn) {
      const double after = x.norm();
      if (after == 0.0) return 0.0;
      log_growth += std::log(after);
    }
  }
  return std::min(1.0, std::exp(log_growth / measure));
}

}  // namespace

TransitionMatrix ulam_transition(std::span<const double> series, std::size_t runup,
                                 const LossPartition& partition, double smoothing) {
  if (partition.bins < 2) throw ParameterError("ulam_transition: degenerate partition");
  if (!(smoothing >= 0.0)) throw ParameterError("ulam_transition: smoothing must be >= 0");
  if (series.size() < runup + 2) {
    throw InsufficientDataError("ulam_transition: need at least two post-runup samples");
  }
  TransitionMatrix T;
  T.partition = partition;
  T.smoothing = smoothing;
  const auto K = static_cast<Eigen::Index>(partition.bins);
  T.counts = Eigen::MatrixXd::Zero(K, K);
  auto prev = partition.locate(series[runup]);
  T.clamped += prev.clamped ? 1 : 0;
  for (std::size_t t = runup + 1; t < series.size(); ++t) {
    const auto next = partition.locate(series[t]);
    T.clamped += next.clamped ? 1 : 0;
    T.counts(static_cast<Eigen::Index>(prev.index), static_cast<Eigen::Index>(next.index)) += 1.0;
    ++T.transitions;
    prev = next;
  }
  normalize_rows(T);
  return T;
}

TransitionMatrix transition_from_matrix(const Eigen::MatrixXd& probabilities) {
  check_stochastic(probabilities);
  TransitionMatrix T;
  T.probabilities = probabilities;
  T.counts = Eigen::MatrixXd::Zero(probabilities.rows(), probabilities.cols());
  T.empty_rows.assign(static_cast<std::size_t>(probabilities.rows()), 0);
  T.partition = LossPartition{0.0, 1.0, static_cast<std::size_t>(probabilities.rows())};
  return T;
}

SpectralReport spectral_gap(const Eigen::MatrixXd& P) {
  check_stochastic(P);
  SpectralReport r;
  const auto K = P.rows();
  if (K > kDenseSpectrumLimit) {
    r.dense = false;
    r.stationary = power_stationary(P);
    r.lambda1 = 1.0;
    r.lambda2 = power_second_modulus(P);
    r.moduli = {r.lambda1, r.lambda2};
    r.gap = std::clamp(1.0 - r.lambda2, 0.0, 1.0);
    return r;
  }

  // Eigenvalues of P^T equal those of P; its eigenvectors are left vectors of P.
  Eigen::EigenSolver<Eigen::MatrixXd> es(P.transpose(), true);
  if (es.info() != Eigen::Success) throw SingularityError("spectral_gap: eigen-solve failed");
  const Eigen::VectorXcd theta = es.eigenvalues();
  r.moduli.resize(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < K; ++i) r.moduli[static_cast<std::size_t>(i)] = std::abs(theta(i));
  std::sort(r.moduli.begin(), r.moduli.end(), std::greater<>());
  r.lambda1 = r.moduli[0];
  r.lambda2 = K > 1 ? r.moduli[1] : 0.0;
  r.gap = std::clamp(1.0 - r.lambda2, 0.0, 1.0);

  Eigen::Index lead = 0;
  double best = std::abs(theta(0) - 1.0);
  for (Eigen::Index i = 1; i < K; ++i) {
    const double d = std::abs(theta(i) - 1.0);
    if (d < best) {
      best = d;
      lead = i;
    }
  }
  r.stationary = normalize_distribution(es.eigenvectors().col(lead).real());
  return r;
}

std::complex<double> KoopmanMode::evaluate(const Eigen::VectorXd& w) const {
  return left_vector.cwiseProduct(w.cast<std::complex<double>>()).sum() + offset;
}

std::vector<KoopmanMode> koopman_spectrum_linear(const Eigen::MatrixXd& A,
                                                 const Eigen::VectorXd& b,
                                                 double unit_tol) {
  if (A.rows() != A.cols() || b.size() != A.rows()) {
    throw DimensionError("koopman_spectrum_linear: A must be square and match b");
  }
  std::vector<KoopmanMode> modes;
  const Eigen::Index n = A.rows();
  modes.reserve(static_cast<std::size_t>(n));
  const bool symmetric = (A - A.transpose()).norm() <= 1e-12 * std::max(A.norm(), 1.0);

  auto finish = [&](std::complex<double> theta, Eigen::VectorXcd v) {
    KoopmanMode m;
    m.eigenvalue = theta;
    m.left_vector = std::move(v);
    const std::complex<double> vb = m.left_vector.cwiseProduct(b.cast<std::complex<double>>()).sum();
    if (std::abs(theta - 1.0) <= unit_tol * std::max(1.0, std::abs(theta))) {
      m.defined = false;
      m.offset = 0.0;
    } else {
      m.offset = vb / (theta - 1.0);
    }
    modes.push_back(std::move(m));
  };

  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      finish(es.eigenvalues()(i), es.eigenvectors().col(i).cast<std::complex<double>>());
    }
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A.transpose(), true);
    if (es.info() != Eigen::Success) {
      throw SingularityError("koopman_spectrum_linear: eigen-solve failed");
    }
    for (Eigen::Index i = 0; i < n; ++i) finish(es.eigenvalues()(i), es.eigenvectors().col(i));
    std::stable_sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
      return std::abs(a.eigenvalue) > std::abs(b.eigenvalue);
    });
  }
  return modes;
}

std::vector<double> tv_convergence_curve(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& initial,
                                         std::size_t steps) {
  return tv_convergence_curve(P, initial, spectral_gap(P).stationary, steps);
}

std::vector<double> tv_convergence_curve(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& initial,
                                         const Eigen::VectorXd& stationary,
                                         std::size_t steps) {
  check_stochastic(P);
  if (initial.size() != P.rows() || stationary.size() != P.rows()) {
    throw DimensionError("tv_convergence_curve: distribution size mismatch");
  }
  if (initial.minCoeff() < 0.0 || std::abs(initial.sum() - 1.0) > 1e-9) {
    throw ParameterError("tv_convergence_curve: initial must be a probability vector");
  }
  std::vector<double> out;
  out.reserve(steps + 1);
  Eigen::RowVectorXd mu = initial.transpose();
  for (std::size_t t = 0; t <= steps; ++t) {
    out.push_back(0.5 * (mu.transpose() - stationary).lpNorm<1>());
    mu = mu * P;
  }
  return out;
}

}  // namespace ergostab

#include "ergostab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "ergostab/ergodic.hpp"
#include "ergostab/error.hpp"
#include "ergostab/parallel.hpp"

namespace ergostab {

namespace {

PerturbedPair replace_at(const SyntheticDataset& dataset, std::size_t k,
                         const LabelledPoint& point) {
  if (k >= dataset.samples.size()) {
    throw ParameterError("stochastic_perturbation: index " + std::to_string(k) +
                         " out of range for n = " + std::to_string(dataset.samples.size()));
  }
  PerturbedPair out;
  out.base = dataset;
  out.perturbed = dataset;
  out.index = k;
  out.replacement = point.sample;
  out.perturbed.samples[k] = point.sample;
  if (k < out.perturbed.clean_labels.size()) out.perturbed.clean_labels[k] = point.clean_label;
  if (k < out.perturbed.corrupted.size()) out.perturbed.corrupted[k] = point.corrupted ? 1 : 0;
  return out;
}

bool sample_less(const Sample& a, const Sample& b) {
  if (a.y != b.y) return a.y < b.y;
  return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(),
                                      b.x.data() + b.x.size());
}

std::optional<std::size_t> differing_index(const TrainingPair& pair) {
  if (pair.base.size() != pair.perturbed.size()) {
    throw DimensionError("sas_lower_bound: S and S' must have the same size");
  }
  std::optional<std::size_t> k;
  for (std::size_t i = 0; i < pair.base.size(); ++i) {
    if (pair.base[i] == pair.perturbed[i]) continue;
    if (k) throw ParameterError("sas_lower_bound: S and S' differ in more than one sample");
    k = i;
  }
  return k;
}

double probe_statistic(const Landscape& landscape, Statistic statistic, const Sample& z,
                       const WeightVector& w) {
  return statistic == Statistic::Loss ? landscape.loss(z, w) : landscape.error(z, w);
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& K, double& theta_min,
                                Eigen::VectorXd& spectrum) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  spectrum = es.eigenvalues();
  theta_min = spectrum(0);
  const double scale = std::max(spectrum(spectrum.size() - 1), 1.0);
  const double tol = 16.0 * static_cast<double>(K.rows()) *
                     std::numeric_limits<double>::epsilon() * scale;
  if (!(theta_min > tol)) {
    throw SingularityError("weyl_stability_bound: NTK is numerically singular");
  }
  return es.eigenvectors() * spectrum.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

double spectral_norm_symmetric(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(what) + " must be finite and non-negative");
  }
}

}  // namespace

PerturbedPair stochastic_perturbation(const SyntheticDataset& dataset, std::size_t k,
                                      RngStream& rng) {
  if (k >= dataset.samples.size()) return replace_at(dataset, k, {});
  return replace_at(dataset, k, draw_point(dataset.teacher, dataset.p, rng));
}

PerturbedPair stochastic_perturbation(const SyntheticDataset& dataset, std::size_t k,
                                      Sample replacement) {
  LabelledPoint point;
  point.sample = std::move(replacement);
  point.clean_label = point.sample.y;
  if (k < dataset.samples.size() && point.sample == dataset.samples[k]) {
    if (k < dataset.clean_labels.size()) point.clean_label = dataset.clean_labels[k];
    point.corrupted = k < dataset.corrupted.size() && dataset.corrupted[k] != 0;
  }
  return replace_at(dataset, k, point);
}

Statistic parse_statistic(std::string_view name) {
  if (name == "loss") return Statistic::Loss;
  if (name == "error") return Statistic::Error;
  throw ParameterError("unknown statistic '" + std::string(name) + "' (loss|error)");
}

std::string_view to_string(Statistic statistic) {
  return statistic == Statistic::Loss ? "loss" : "error";
}

StabilityReport sas_lower_bound(const Landscape& landscape,
                                std::span<const TrainingPair> pairs,
                                const TrainingSet& probes, const OptimizerConfig& config,
                                const SasProtocol& protocol, std::uint64_t master_seed,
                                const WeightSampler& init, std::size_t workers) {
  if (protocol.window == 0) throw ParameterError("sas_lower_bound: window must be > 0");
  if (protocol.inits_per_side == 0) {
    throw ParameterError("sas_lower_bound: inits_per_side must be >= 1");
  }
  if (probes.empty() && !protocol.include_swapped_points) {
    throw ParameterError("sas_lower_bound: empty probe set");
  }

  StabilityReport report;
  report.protocol = protocol;
  report.optimizer = config;
  report.master_seed = master_seed;
  report.shared_probes = probes.size();
  report.pairs.resize(pairs.size());

  // Validate shapes up front so that worker threads only see numeric failures.
  std::vector<TrainingSet> pair_probes(pairs.size(), probes);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto k = differing_index(pairs[p]);
    config.validate(pairs[p].base.size());
    if (protocol.include_swapped_points && k) {
      Sample a = pairs[p].base[*k];
      Sample b = pairs[p].perturbed[*k];
      if (sample_less(b, a)) std::swap(a, b);
      pair_probes[p].push_back(std::move(a));
      pair_probes[p].push_back(std::move(b));
    }
    if (pair_probes[p].empty()) throw ParameterError("sas_lower_bound: empty probe set");
  }

  const OrbitSchedule schedule{protocol.runup, protocol.window, 0};

  parallel_for(pairs.size(), workers, [&](std::size_t p) {
    PairStability& out = report.pairs[p];
    out.pair_id = p;
    out.probes = pair_probes[p];
    const std::size_t probe_count = out.probes.size();

    std::vector<Observable> observables;
    observables.reserve(probe_count);
    for (std::size_t q = 0; q < probe_count; ++q) {
      const Sample* z = &out.probes[q];
      observables.push_back({"probe_" + std::to_string(q),
                             [&landscape, z, stat = protocol.statistic](const WeightVector& w) {
                               return probe_statistic(landscape, stat, *z, w);
                             }});
    }

    out.base_averages.assign(probe_count, 0.0);
    out.perturbed_averages.assign(probe_count, 0.0);
    const RngStream pair_rng(master_seed, p);
    for (std::size_t j = 0; j < protocol.inits_per_side && out.valid; ++j) {
      RngStream init_rng = pair_rng.derive(2 * j);
      const RngStream batch_rng = pair_rng.derive(2 * j + 1);
      const WeightVector w0 = init(init_rng);
      const OrbitRecord a = run_orbit(w0, landscape, pairs[p].base, config, schedule,
                                      observables, batch_rng);
      const OrbitRecord b = run_orbit(w0, landscape, pairs[p].perturbed, config, schedule,
                                      observables, batch_rng);
      if (a.diverged || b.diverged) {
        out.valid = false;
        break;
      }
      for (std::size_t q = 0; q < probe_count; ++q) {
        out.base_averages[q] += time_average(a.series[q].values, 0).value;
        out.perturbed_averages[q] += time_average(b.series[q].values, 0).value;
      }
    }
    if (!out.valid) {
      out.base_averages.clear();
      out.perturbed_averages.clear();
      return;
    }

    const double pooled = static_cast<double>(protocol.inits_per_side);
    out.diffs.resize(probe_count);
    for (std::size_t q = 0; q < probe_count; ++q) {
      out.base_averages[q] /= pooled;
      out.perturbed_averages[q] /= pooled;
      out.diffs[q] = std::abs(out.base_averages[q] - out.perturbed_averages[q]);
    }
    out.max_diff = *std::max_element(out.diffs.begin(), out.diffs.end());
    out.mean_diff = std::accumulate(out.diffs.begin(), out.diffs.end(), 0.0) /
                    static_cast<double>(probe_count);
    if (probe_count > 1) {
      double ss = 0.0;
      for (double d : out.diffs) ss += (d - out.mean_diff) * (d - out.mean_diff);
      const double var = ss / static_cast<double>(probe_count - 1);
      out.sem = std::sqrt(var / static_cast<double>(probe_count));
    }
  });

  for (const auto& pair : report.pairs) {
    if (!pair.valid) continue;
    ++report.valid_pairs;
    report.beta_hat = std::max(report.beta_hat, pair.max_diff);
  }
  return report;
}

EmpiricalRisks empirical_risks(std::span<const double> train_averages, std::size_t n,
                               std::span<const double> heldout_averages) {
  if (n == 0 || train_averages.size() != n) {
    throw InsufficientDataError("empirical_risks: need one statistic per training sample");
  }
  if (heldout_averages.empty()) {
    throw InsufficientDataError("empirical_risks: held-out set is empty");
  }
  EmpiricalRisks r;
  r.empirical = std::accumulate(train_averages.begin(), train_averages.end(), 0.0) /
                static_cast<double>(n);
  r.population = std::accumulate(heldout_averages.begin(), heldout_averages.end(), 0.0) /
                 static_cast<double>(heldout_averages.size());
  r.gap = std::abs(r.population - r.empirical);
  return r;
}

BoundReport theorem1_bound(double empirical_risk, double beta, std::size_t n, double L,
                           double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("theorem1_bound: delta must lie in (0, 1)");
  require_nonnegative(beta, "theorem1_bound: beta");
  require_nonnegative(L, "theorem1_bound: L");
  if (n == 0) throw ParameterError("theorem1_bound: n must be >= 1");
  BoundReport r;
  r.empirical_risk = empirical_risk;
  r.beta = beta;
  r.L = L;
  r.n = n;
  r.delta = delta;
  const double nd = static_cast<double>(n);
  r.stability_term = beta;
  r.concentration_term = 2.0 * (nd * beta + L) * std::sqrt(std::log(2.0 / delta) / (2.0 * nd));
  r.bound = empirical_risk + r.stability_term + r.concentration_term;
  return r;
}

double theorem2_bound(double L_D, double lambda, std::size_t n, std::size_t m, double eta,
                      double C) {
  require_nonnegative(L_D, "theorem2_bound: L_D");
  require_nonnegative(eta, "theorem2_bound: eta");
  require_nonnegative(C, "theorem2_bound: C");
  if (!(lambda >= 0.0)) throw ParameterError("theorem2_bound: lambda must be >= 0");
  if (lambda >= 1.0) {
    throw DivergenceError("theorem2_bound: lambda >= 1, uniform ergodicity violated");
  }
  if (n == 0) throw ParameterError("theorem2_bound: n must be >= 1");
  const double nd = static_cast<double>(n);
  return C * static_cast<double>(m) * L_D * eta / (nd * nd * (1.0 - lambda));
}

WeylReport weyl_stability_bound(const LinearizedModel& base,
                                const LinearizedModel& perturbed) {
  base.validate();
  perturbed.validate();
  if (base.samples() != perturbed.samples()) {
    throw DimensionError("weyl_stability_bound: sample counts differ");
  }
  const Eigen::MatrixXd K = base.ntk();
  const Eigen::MatrixXd Kp = perturbed.ntk();
  WeylReport r;
  double theta_a = 0.0;
  double theta_b = 0.0;
  Eigen::VectorXd spec_a;
  Eigen::VectorXd spec_b;
  const Eigen::MatrixXd Kinv = checked_inverse(K, theta_a, spec_a);
  const Eigen::MatrixXd Kpinv = checked_inverse(Kp, theta_b, spec_b);
  r.inverse_theta_min_base = 1.0 / theta_a;
  r.inverse_theta_min_perturbed = 1.0 / theta_b;
  const Eigen::MatrixXd dinv = Kinv - Kpinv;
  r.inverse_difference_norm = spectral_norm_symmetric(0.5 * (dinv + dinv.transpose()));
  const Eigen::MatrixXd dK = Kp - K;
  r.kernel_difference_norm = spectral_norm_symmetric(0.5 * (dK + dK.transpose()));
  r.eigen_shifts.resize(static_cast<std::size_t>(spec_a.size()));
  r.residuals.resize(r.eigen_shifts.size());
  r.max_slack = -r.kernel_difference_norm;
  for (Eigen::Index i = 0; i < spec_a.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    r.eigen_shifts[u] = std::abs(spec_b(i) - spec_a(i));
    r.residuals[u] = r.eigen_shifts[u] - r.kernel_difference_norm;
    r.max_slack = std::max(r.max_slack, r.residuals[u]);
  }
  return r;
}

double weyl_slack(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || A.rows() != B.rows() || A.cols() != B.cols()) {
    throw DimensionError("weyl_slack: matrices must be square and of equal size");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(B, Eigen::EigenvaluesOnly);
  const double shift = (eb.eigenvalues() - ea.eigenvalues()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd E = B - A;
  return shift - spectral_norm_symmetric(0.5 * (E + E.transpose()));
}

double ntk_stability_transfer(double beta_linear, double C_Lip, double epsilon) {
  require_nonnegative(beta_linear, "ntk_stability_transfer: beta");
  require_nonnegative(C_Lip, "ntk_stability_transfer: C_Lip");
  require_nonnegative(epsilon, "ntk_stability_transfer: epsilon");
  return beta_linear + 2.0 * C_Lip * epsilon;
}

}  // namespace ergostab

#include <doctest.h>

#include <cmath>
#include <vector>

#include "ergostab/error.hpp"
#include "ergostab/linear_models.hpp"
#include "ergostab/markov.hpp"
#include "ergostab/rng.hpp"

using namespace ergostab;

namespace {

Eigen::MatrixXd two_state() {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  return P;
}

std::vector<double> simulate_chain(const Eigen::MatrixXd& P, std::size_t steps,
                                   std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> out;
  Eigen::Index s = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    out.push_back(static_cast<double>(s));
    const double u = rng.uniform();
    double acc = 0.0;
    Eigen::Index next = P.cols() - 1;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      acc += P(s, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    s = next;
  }
  return out;
}

}  // namespace

TEST_CASE("partitions") {
  CHECK_THROWS_AS(LossPartition::uniform(0, 1, 1), ParameterError);
  CHECK_THROWS_AS(LossPartition::uniform(1, 1, 4), ParameterError);
  const auto p = LossPartition::uniform(0.0, 1.0, 4);
  CHECK(p.edges() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(p.locate(0.3).index == 1);
  CHECK(p.locate(1.0).index == 3);
  CHECK(p.locate(-2.0).clamped);
  CHECK(p.locate(-2.0).index == 0);
  CHECK(p.locate(5.0).index == 3);

  const std::vector<double> s{1.0, 2.0, 3.0};
  const auto f = LossPartition::fit(s, 0, 8, 0.05);
  CHECK(f.lower == doctest::Approx(0.9));
  CHECK(f.upper == doctest::Approx(3.1));
  const auto d = LossPartition::fit(std::vector<double>(5, 2.0), 0, 8);
  CHECK(d.lower < 2.0);
  CHECK(d.upper > 2.0);
}

TEST_CASE("ulam fixtures") {
  const std::vector<double> c(50, 0.3);
  const auto part = LossPartition::uniform(0.0, 1.0, 4);
  const TransitionMatrix m = ulam_transition(c, 0, part);
  CHECK(m.probabilities(1, 1) == 1.0);
  CHECK(m.transitions == 49);
  CHECK(m.empty_rows == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(m.probabilities(0, 3) == 0.25);

  std::vector<double> alt;
  for (int i = 0; i < 50; ++i) alt.push_back(i % 2 ? 0.9 : 0.1);
  const TransitionMatrix a = ulam_transition(alt, 0, part);
  CHECK(a.probabilities(0, 3) == 1.0);
  CHECK(a.probabilities(3, 0) == 1.0);
  CHECK(a.probabilities(0, 0) == 0.0);

  CHECK_THROWS_AS(ulam_transition(std::vector<double>{1.0}, 0, part), InsufficientDataError);
}

TEST_CASE("ulam recovers a two-state chain") {
  const auto series = simulate_chain(two_state(), 100000, 3);
  const auto part = LossPartition::uniform(-0.5, 1.5, 2);
  const TransitionMatrix m = ulam_transition(series, 0, part);
  CHECK((m.probabilities - two_state()).cwiseAbs().maxCoeff() < 0.02);
  CHECK(std::abs(spectral_gap(m.probabilities).lambda2 - 0.7) < 0.05);
}

TEST_CASE("smoothing preserves row stochasticity") {
  RngStream rng(4, 0);
  std::vector<double> s(300);
  for (auto& v : s) v = rng.uniform();
  const auto part = LossPartition::uniform(0.0, 1.0, 16);
  for (double a : {0.0, 0.01, 1.0, 50.0}) {
    const TransitionMatrix m = ulam_transition(s, 5, part, a);
    CHECK((m.probabilities.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(m.probabilities.minCoeff() >= 0.0);
  }
}

TEST_CASE("spectral gap fixtures") {
  const SpectralReport r = spectral_gap(two_state());
  CHECK(r.lambda1 == doctest::Approx(1.0));
  CHECK(r.lambda2 == doctest::Approx(0.7));
  CHECK(r.gap == doctest::Approx(0.3));
  CHECK(r.stationary(0) == doctest::Approx(2.0 / 3.0));

  const SpectralReport id = spectral_gap(Eigen::MatrixXd::Identity(3, 3));
  CHECK(id.lambda2 == doctest::Approx(1.0));
  CHECK(id.gap == doctest::Approx(0.0));

  Eigen::MatrixXd rank1(3, 3);
  rank1.rowwise() = Eigen::RowVector3d(0.2, 0.5, 0.3);
  const SpectralReport r1 = spectral_gap(rank1);
  CHECK(r1.lambda2 == doctest::Approx(0.0));
  CHECK(r1.gap == doctest::Approx(1.0));

  Eigen::MatrixXd bad = two_state();
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(spectral_gap(bad), ParameterError);
  CHECK_THROWS_AS(transition_from_matrix(bad), ParameterError);
}

TEST_CASE("power iteration agrees with the dense path") {
  // Block-lazy chain with known second eigenvalue: P = a I + (1 - a) 1 pi^T.
  const Eigen::Index K = 600;
  const double a = 0.6;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(K, 1.0 / K);
  Eigen::MatrixXd P = a * Eigen::MatrixXd::Identity(K, K) +
                      (1 - a) * Eigen::VectorXd::Ones(K) * pi.transpose();
  const SpectralReport r = spectral_gap(P);
  CHECK_FALSE(r.dense);
  CHECK(std::abs(r.lambda2 - a) < 1e-3);
  CHECK((r.stationary - pi).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("koopman modes of affine maps") {
  const Eigen::MatrixXd A = 0.9 * Eigen::MatrixXd::Identity(2, 2);
  const auto modes = koopman_spectrum_linear(A, Eigen::Vector2d::Zero());
  REQUIRE(modes.size() == 2);
  for (const auto& m : modes) {
    CHECK(std::abs(m.eigenvalue - 0.9) < 1e-14);
    CHECK(std::abs(m.offset) < 1e-14);
  }

  RngStream rng(6, 0);
  Eigen::MatrixXd M(5, 5);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.normal();
  Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  S /= 1.25 * S.operatorNorm();
  Eigen::VectorXd b(5);
  for (Eigen::Index i = 0; i < 5; ++i) b(i) = rng.normal();
  for (const auto& mode : koopman_spectrum_linear(S, b)) {
    REQUIRE(mode.defined);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd w(5);
      for (Eigen::Index i = 0; i < 5; ++i) w(i) = rng.normal();
      const auto f = mode.evaluate(w);
      const auto fn = mode.evaluate(S * w + b);
      CHECK(std::abs(fn - mode.eigenvalue * f) / (1 + std::abs(f)) < 1e-8);
    }
  }

  const auto unit = koopman_spectrum_linear(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 0));
  for (const auto& m : unit) CHECK_FALSE(m.defined);
}

TEST_CASE("koopman modes of linearized dynamics") {
  RngStream rng(7, 0);
  Eigen::MatrixXd phi(4, 6);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = rng.normal();
  auto model = LinearizedModel::with_zero_reference(phi, Eigen::Vector4d(1, 0, -1, 2), 0.0);
  model.eta = 0.5 / model.ntk().eigenvalues().real().maxCoeff();
  const AffineDynamics dyn = linearized_dynamics(model);
  std::size_t undefined = 0;
  for (const auto& mode : koopman_spectrum_linear(dyn.A, dyn.b, 1e-9)) {
    if (!mode.defined) {
      ++undefined;
      continue;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(6);
    w(0) = 1.0;
    CHECK(std::abs(mode.evaluate(dyn.apply(w)) - mode.eigenvalue * mode.evaluate(w)) < 1e-8);
  }
  CHECK(undefined == 2);  // null space of Phi
}

TEST_CASE("tv convergence") {
  const Eigen::MatrixXd P = two_state();
  const Eigen::Vector2d pi(2.0 / 3.0, 1.0 / 3.0);
  for (double v : tv_convergence_curve(P, pi, 20)) CHECK(v < 1e-12);

  const auto curve = tv_convergence_curve(P, Eigen::Vector2d(1, 0), 30);
  CHECK(curve.front() == doctest::Approx(1.0 / 3.0));
  for (std::size_t t = 1; t < curve.size(); ++t) {
    CHECK(curve[t] <= curve[t - 1] + 1e-15);
    CHECK(curve[t] / curve[t - 1] == doctest::Approx(0.7).epsilon(1e-9));
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const auto flat = tv_convergence_curve(I, Eigen::Vector2d(1, 0), Eigen::Vector2d(0.5, 0.5), 10);
  for (double v : flat) CHECK(v == doctest::Approx(0.5));
}

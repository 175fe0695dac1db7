#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "ergostab/dynamics.hpp"
#include "ergostab/error.hpp"
#include "ergostab/linear_models.hpp"
#include "ergostab/quadratic_map.hpp"
#include "ergostab/rng.hpp"
#include "ergostab/toynet.hpp"

using namespace ergostab;

namespace {

// l(w) = w^2 / 2 as least squares on the single sample (x, y) = (1, 0).
struct HalfSquare {
  LinearRegressionLoss loss{1};
  TrainingSet data;
  HalfSquare() {
    Sample z;
    z.x = Eigen::VectorXd::Constant(1, 1.0);
    z.y = 0.0;
    data.push_back(z);
  }
};

WeightVector scalar(double v) { return WeightVector::Constant(1, v); }

}  // namespace

TEST_CASE("rng streams are counter addressable") {
  RngStream a(42, 3);
  RngStream b(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(42, 3, 50);
  RngStream d(42, 3);
  for (int i = 0; i < 50; ++i) d.next_u64();
  CHECK(c.next_u64() == d.next_u64());
  CHECK(RngStream(42, 4).next_u64() != RngStream(42, 3).next_u64());
  CHECK(RngStream(43, 3).next_u64() != RngStream(42, 3).next_u64());

  const RngStream parent(1, 2);
  CHECK(parent.derive(0).next_u64() == RngStream(1, 2).derive(0).next_u64());
  CHECK(parent.derive(0).next_u64() != parent.derive(1).next_u64());
  CHECK(parent.counter() == 0);
}

TEST_CASE("rng distributions") {
  RngStream r(9, 0);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("optimizer validation") {
  CHECK_THROWS_AS(OptimizerConfig::gd(0.0, 4).validate(4), ParameterError);
  CHECK_THROWS_AS(OptimizerConfig::gd(0.1, 4, 1.0).validate(4), ParameterError);
  CHECK_THROWS_AS(OptimizerConfig::sgd(0.1, 5).validate(4), ParameterError);
  OptimizerConfig bad = OptimizerConfig::gd(0.1, 4);
  bad.batch_size = 2;
  CHECK_THROWS_AS(bad.validate(4), ParameterError);
  CHECK_NOTHROW(OptimizerConfig::sgd(0.1, 2, 0.9).validate(4));
}

TEST_CASE("single step on a quadratic") {
  HalfSquare q;
  const auto cfg = OptimizerConfig::gd(0.5, 1);
  const StepResult r = step(scalar(1.0), scalar(0.0), q.loss, q.data, cfg, BatchDraw::full(1));
  CHECK(r.weights(0) == 0.5);

  // Critical point: no motion.
  const StepResult c = step(scalar(0.0), scalar(0.0), q.loss, q.data, cfg, BatchDraw::full(1));
  CHECK(c.weights(0) == 0.0);

  // eta = 0: w' = w, v' = momentum v.
  OptimizerConfig frozen = OptimizerConfig::gd(0.5, 1, 0.7);
  frozen.eta = 0.0;
  const StepResult f = step(scalar(2.0), scalar(0.3), q.loss, q.data, frozen, BatchDraw::full(1));
  CHECK(f.weights(0) == doctest::Approx(2.0 + 0.7 * 0.3));
  CHECK(f.velocity(0) == doctest::Approx(0.7 * 0.3));

  // Heavy ball: v' = m v - eta g, w' = w + v'.
  const auto hb = OptimizerConfig::gd(0.5, 1, 0.9);
  const StepResult h = step(scalar(1.0), scalar(0.2), q.loss, q.data, hb, BatchDraw::full(1));
  CHECK(h.velocity(0) == doctest::Approx(0.9 * 0.2 - 0.5));
  CHECK(h.weights(0) == doctest::Approx(1.0 + 0.9 * 0.2 - 0.5));
}

TEST_CASE("step reports divergence") {
  const QuadraticMapLoss l(4.0);
  TrainingSet data(1);
  OptimizerConfig cfg = OptimizerConfig::gd(1e12, 1);
  cfg.divergence_radius = 1e6;
  CHECK_THROWS_AS(step(scalar(0.9), scalar(0.0), l, data, cfg, BatchDraw::full(1)),
                  DivergenceError);
}

TEST_CASE("batch draws") {
  RngStream rng(1, 0);
  const BatchDraw all = draw_batch(6, 6, rng);
  CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(draw_batch(5, 0, rng), ParameterError);
  CHECK_THROWS_AS(draw_batch(5, 6, rng), ParameterError);
  for (int i = 0; i < 1000; ++i) {
    const BatchDraw b = draw_batch(20, 5, rng);
    REQUIRE(b.indices.size() == 5);
    const std::set<std::size_t> s(b.indices.begin(), b.indices.end());
    CHECK(s.size() == 5);
    CHECK(std::is_sorted(b.indices.begin(), b.indices.end()));
    CHECK(b.indices.back() < 20);
  }
}

TEST_CASE("batch inclusion frequency is m/n") {
  RngStream rng(2, 0);
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    const BatchDraw b = draw_batch(20, 5, rng);
    hits += std::binary_search(b.indices.begin(), b.indices.end(), std::size_t{7});
  }
  const double sigma = std::sqrt(0.25 * 0.75 / draws);
  CHECK(std::abs(hits / double(draws) - 0.25) < 3 * sigma);
}

TEST_CASE("run_orbit on the quadratic") {
  HalfSquare q;
  const auto cfg = OptimizerConfig::gd(0.5, 1);
  const Observable obs = weight_observable(0);
  const OrbitRecord r =
      run_orbit(scalar(1.0), q.loss, q.data, cfg, {0, 3, 0}, {&obs, 1}, RngStream(0, 0));
  CHECK(r.observable("weight") == std::vector<double>{0.5, 0.25, 0.125});
  CHECK_FALSE(r.diverged);
  CHECK_THROWS_AS(r.observable("nope"), ParameterError);

  const OrbitRecord empty =
      run_orbit(scalar(1.0), q.loss, q.data, cfg, {0, 0, 0}, {&obs, 1}, RngStream(0, 0));
  CHECK(empty.observable("weight").empty());
  CHECK_FALSE(empty.diverged);

  const OrbitRecord snaps =
      run_orbit(scalar(1.0), q.loss, q.data, cfg, {2, 6, 2}, {&obs, 1}, RngStream(0, 0));
  CHECK(snaps.observable("weight").size() == 6);
  CHECK(snaps.weight_snapshots.size() == 3);
  CHECK(snaps.observable("weight").front() == 0.125);
}

TEST_CASE("run_orbit flags divergence and truncates") {
  const QuadraticMapLoss l(4.0);
  TrainingSet data(1);
  OptimizerConfig cfg = OptimizerConfig::gd(1e9, 1);
  cfg.divergence_radius = 1e6;
  const Observable obs = weight_observable(0);
  const OrbitRecord r =
      run_orbit(scalar(0.9), l, data, cfg, {0, 10, 0}, {&obs, 1}, RngStream(0, 0));
  CHECK(r.diverged);
  REQUIRE(r.diverged_step);
  CHECK(*r.diverged_step == 0);
  CHECK(r.observable("weight").empty());
}

TEST_CASE("ensembles are reproducible and worker independent") {
  const ToyNetLandscape net(3, 4, Activation::Tanh, LossKind::Squared);
  RngStream rng(4, 0);
  TrainingSet data;
  for (int i = 0; i < 16; ++i) {
    Sample z;
    z.x = Eigen::VectorXd(3);
    for (int j = 0; j < 3; ++j) z.x(j) = rng.normal();
    z.y = std::sin(z.x(0));
    data.push_back(z);
  }
  std::vector<WeightVector> inits;
  for (int i = 0; i < 6; ++i) inits.push_back(net.initial_weights(rng));
  inits.push_back(inits.front());
  const Observable obs = mean_loss_observable("train_loss", net, data);
  const auto cfg = OptimizerConfig::sgd(0.05, 4, 0.5);
  const OrbitSchedule sched{10, 50, 0};
  const auto one = run_ensemble(inits, net, data, cfg, sched, {&obs, 1}, 77, 1);
  const auto again = run_ensemble(inits, net, data, cfg, sched, {&obs, 1}, 77, 1);
  const auto eight = run_ensemble(inits, net, data, cfg, sched, {&obs, 1}, 77, 8);
  REQUIRE(one.size() == inits.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].observable("train_loss") == again[i].observable("train_loss"));
    CHECK(one[i].observable("train_loss") == eight[i].observable("train_loss"));
  }

  // Identical inits under deterministic GD give identical records.
  const auto gd = OptimizerConfig::gd(0.05, data.size());
  const auto det = run_ensemble(inits, net, data, gd, sched, {&obs, 1}, 1, 1);
  CHECK(det.front().observable("train_loss") == det.back().observable("train_loss"));
}

#include "ergostab/dynamics.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "ergostab/error.hpp"
#include "ergostab/parallel.hpp"

namespace ergostab {

std::size_t default_worker_count() {
  if (const char* env = std::getenv("ERGOSTAB_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) {
      return static_cast<std::size_t>(value);
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

double sample_distance(const Sample& a, const Sample& b) {
  if (a.x.size() != b.x.size()) {
    throw DimensionError("sample_distance: input dimensions differ");
  }
  const double dy = a.y - b.y;
  return std::sqrt((a.x - b.x).squaredNorm() + dy * dy);
}

void OptimizerConfig::validate(std::size_t n) const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ParameterError("optimizer: eta must be a finite positive number");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ParameterError("optimizer: momentum must lie in [0, 1)");
  }
  if (!(divergence_radius > 0.0)) {
    throw ParameterError("optimizer: divergence_radius must be positive");
  }
  if (batch_size < 1 || batch_size > n) {
    std::ostringstream msg;
    msg << "optimizer: batch_size " << batch_size << " outside [1, " << n << "]";
    throw ParameterError(msg.str());
  }
  if (mode == OptimizerMode::GD && batch_size != n) {
    throw ParameterError("optimizer: GD mode requires batch_size == n");
  }
}

OptimizerConfig OptimizerConfig::gd(double eta, std::size_t n, double momentum) {
  OptimizerConfig c;
  c.eta = eta;
  c.momentum = momentum;
  c.batch_size = n;
  c.mode = OptimizerMode::GD;
  return c;
}

OptimizerConfig OptimizerConfig::sgd(double eta, std::size_t batch_size,
                                     double momentum) {
  OptimizerConfig c;
  c.eta = eta;
  c.momentum = momentum;
  c.batch_size = batch_size;
  c.mode = OptimizerMode::SGD;
  return c;
}

BatchDraw BatchDraw::full(std::size_t n) {
  BatchDraw b;
  b.indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.indices[i] = i;
  return b;
}

BatchDraw draw_batch(std::size_t n, std::size_t m, RngStream& rng) {
  if (m < 1 || m > n) {
    std::ostringstream msg;
    msg << "draw_batch: need 1 <= m <= n, got m=" << m << ", n=" << n;
    throw ParameterError(msg.str());
  }
  if (m == n) return BatchDraw::full(n);
  // Floyd's sampling: each m-subset is produced with probability 1/C(n, m).
  std::vector<char> taken(n, 0);
  for (std::size_t j = n - m; j < n; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    if (taken[t]) {
      taken[j] = 1;
    } else {
      taken[t] = 1;
    }
  }
  BatchDraw b;
  b.indices.reserve(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) b.indices.push_back(i);
  }
  return b;
}

namespace {

void check_batch(const BatchDraw& batch, std::size_t n) {
  if (batch.indices.empty()) throw ParameterError("step: empty batch");
  for (std::size_t i : batch.indices) {
    if (i >= n) throw ParameterError("step: batch index out of range");
  }
}

// In-place heavy-ball update; `grad` is scratch space of the right size.
void step_into(WeightVector& w, WeightVector& v, WeightVector& grad,
               const Landscape& landscape, const TrainingSet& trainset,
               const OptimizerConfig& config, const BatchDraw& batch) {
  grad.setZero();
  const double scale = 1.0 / static_cast<double>(batch.indices.size());
  for (std::size_t i : batch.indices) {
    landscape.accumulate_gradient(trainset[i], w, scale, grad);
  }
  v = config.momentum * v - config.eta * grad;
  w += v;
  if (!w.allFinite() || w.norm() > config.divergence_radius) {
    throw DivergenceError("step: iterate left the divergence radius");
  }
}

}  // namespace

StepResult step(const WeightVector& w, const WeightVector& velocity,
                const Landscape& landscape, const TrainingSet& trainset,
                const OptimizerConfig& config, const BatchDraw& batch) {
  if (velocity.size() != w.size() ||
      static_cast<std::size_t>(w.size()) != landscape.dimension()) {
    throw DimensionError("step: weight/velocity/landscape dimensions differ");
  }
  check_batch(batch, trainset.size());
  StepResult out{w, velocity};
  WeightVector grad(w.size());
  step_into(out.weights, out.velocity, grad, landscape, trainset, config, batch);
  return out;
}

Observable weight_observable(std::size_t index, std::string name) {
  return {std::move(name), [index](const WeightVector& w) {
            return w(static_cast<Eigen::Index>(index));
          }};
}

Observable loss_observable(std::string name, const Landscape& landscape,
                           Sample probe) {
  return {std::move(name),
          [&landscape, probe = std::move(probe)](const WeightVector& w) {
            return landscape.loss(probe, w);
          }};
}

Observable mean_loss_observable(std::string name, const Landscape& landscape,
                                const TrainingSet& samples) {
  return {std::move(name), [&landscape, &samples](const WeightVector& w) {
            double total = 0.0;
            for (const auto& z : samples) total += landscape.loss(z, w);
            return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
          }};
}

Observable mean_error_observable(std::string name, const Landscape& landscape,
                                 const TrainingSet& samples) {
  return {std::move(name), [&landscape, &samples](const WeightVector& w) {
            double total = 0.0;
            for (const auto& z : samples) total += landscape.error(z, w);
            return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
          }};
}

const std::vector<double>& OrbitRecord::observable(std::string_view name) const {
  for (const auto& s : series) {
    if (s.name == name) return s.values;
  }
  throw ParameterError("orbit record has no observable named '" +
                       std::string(name) + "'");
}

OrbitRecord run_orbit(const WeightVector& w0, const Landscape& landscape,
                      const TrainingSet& trainset, const OptimizerConfig& config,
                      const OrbitSchedule& schedule,
                      std::span<const Observable> observables, RngStream rng) {
  config.validate(trainset.size());
  if (static_cast<std::size_t>(w0.size()) != landscape.dimension()) {
    throw DimensionError("run_orbit: initial weights do not match the landscape");
  }

  OrbitRecord record;
  record.runup = schedule.runup;
  record.length = schedule.length;
  record.stride = schedule.stride;
  record.series.reserve(observables.size());
  for (const auto& obs : observables) {
    record.series.push_back({obs.name, {}});
    record.series.back().values.reserve(schedule.length);
  }

  WeightVector w = w0;
  WeightVector v = WeightVector::Zero(w0.size());
  WeightVector grad(w0.size());
  const BatchDraw full = BatchDraw::full(trainset.size());
  const std::size_t total = schedule.runup + schedule.length;

  for (std::size_t t = 0; t < total; ++t) {
    try {
      if (config.mode == OptimizerMode::GD) {
        step_into(w, v, grad, landscape, trainset, config, full);
      } else {
        const BatchDraw batch = draw_batch(trainset.size(), config.batch_size, rng);
        step_into(w, v, grad, landscape, trainset, config, batch);
      }
    } catch (const DivergenceError&) {
      record.diverged = true;
      record.diverged_step = t;
      break;
    }
    if (t < schedule.runup) continue;
    const std::size_t k = t - schedule.runup;
    for (std::size_t j = 0; j < observables.size(); ++j) {
      record.series[j].values.push_back(observables[j].evaluate(w));
    }
    if (schedule.stride > 0 && k % schedule.stride == 0) {
      record.weight_snapshots.push_back(w);
    }
  }
  record.final_weights = std::move(w);
  return record;
}

std::vector<OrbitRecord> run_ensemble(std::span<const WeightVector> inits,
                                      const Landscape& landscape,
                                      const TrainingSet& trainset,
                                      const OptimizerConfig& config,
                                      const OrbitSchedule& schedule,
                                      std::span<const Observable> observables,
                                      std::uint64_t master_seed,
                                      std::size_t workers) {
  if (inits.empty()) throw ParameterError("run_ensemble: no initial conditions");
  config.validate(trainset.size());
  std::vector<OrbitRecord> records(inits.size());
  parallel_for(inits.size(), workers, [&](std::size_t i) {
    records[i] = run_orbit(inits[i], landscape, trainset, config, schedule,
                           observables, RngStream(master_seed, i));
  });
  return records;
}

}  // namespace ergostab

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergostab/landscape.hpp"
#include "ergostab/rng.hpp"

namespace ergostab {

enum class OptimizerMode { GD, SGD };

/// Fixed-learning-rate (heavy-ball) gradient descent settings.
struct OptimizerConfig {
  double eta = 0.01;
  double momentum = 0.0;
  std::size_t batch_size = 1;
  OptimizerMode mode = OptimizerMode::GD;
  double divergence_radius = 1e8;

  /// Throws ParameterError unless the invariants hold for a training set of
  /// size n (GD requires batch_size == n).
  void validate(std::size_t n) const;

  /// Full-batch GD on n samples.
  static OptimizerConfig gd(double eta, std::size_t n, double momentum = 0.0);
  static OptimizerConfig sgd(double eta, std::size_t batch_size,
                             double momentum = 0.0);
};

/// Indices (0-based, sorted, distinct) of the samples used in one step.
struct BatchDraw {
  std::vector<std::size_t> indices;

  static BatchDraw full(std::size_t n);
};

/// Uniform m-subset of {0, ..., n-1}. Throws ParameterError unless 1 <= m <= n.
BatchDraw draw_batch(std::size_t n, std::size_t m, RngStream& rng);

struct StepResult {
  WeightVector weights;
  WeightVector velocity;
};

/// One heavy-ball step: v' = momentum * v - eta * g, w' = w + v', with g the
/// batch-mean gradient. Throws DivergenceError if w' is non-finite or its norm
/// exceeds the divergence radius.
StepResult step(const WeightVector& w, const WeightVector& velocity,
                const Landscape& landscape, const TrainingSet& trainset,
                const OptimizerConfig& config, const BatchDraw& batch);

/// A named scalar functional of the weights, evaluated after every recorded step.
struct Observable {
  std::string name;
  std::function<double(const WeightVector&)> evaluate;
};

Observable weight_observable(std::size_t index, std::string name = "weight");
Observable loss_observable(std::string name, const Landscape& landscape,
                           Sample probe);
/// Mean loss over a sample set (training or test loss).
Observable mean_loss_observable(std::string name, const Landscape& landscape,
                                const TrainingSet& samples);
/// Mean 0-1 error over a sample set.
Observable mean_error_observable(std::string name, const Landscape& landscape,
                                 const TrainingSet& samples);

struct OrbitSchedule {
  std::size_t runup = 0;
  std::size_t length = 0;
  /// Keep every stride-th post-runup weight vector; 0 keeps none.
  std::size_t stride = 0;
};

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

/// Observable time series along one orbit. Entry t of every series is the
/// observable at w_{runup + t + 1}.
struct OrbitRecord {
  std::size_t runup = 0;
  std::size_t length = 0;
  std::size_t stride = 0;
  std::vector<WeightVector> weight_snapshots;
  std::vector<NamedSeries> series;
  bool diverged = false;
  /// Zero-based index of the step that left the admissible region.
  std::optional<std::size_t> diverged_step;
  WeightVector final_weights;

  /// Throws ParameterError for an unknown name.
  const std::vector<double>& observable(std::string_view name) const;
};

/// Iterates `step` for runup + length steps from w0 with zero initial velocity.
/// A divergence is reported through the record's flag, never thrown; all series
/// are then truncated at the same step.
OrbitRecord run_orbit(const WeightVector& w0, const Landscape& landscape,
                      const TrainingSet& trainset, const OptimizerConfig& config,
                      const OrbitSchedule& schedule,
                      std::span<const Observable> observables, RngStream rng);

/// One orbit per initial condition; orbit i draws its batches from
/// RngStream(master_seed, i). Output order follows `inits` and is identical for
/// every worker count.
std::vector<OrbitRecord> run_ensemble(std::span<const WeightVector> inits,
                                      const Landscape& landscape,
                                      const TrainingSet& trainset,
                                      const OptimizerConfig& config,
                                      const OrbitSchedule& schedule,
                                      std::span<const Observable> observables,
                                      std::uint64_t master_seed,
                                      std::size_t workers = 1);

}  // namespace ergostab

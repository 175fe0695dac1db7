#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ergostab/quadratic_map.hpp"

namespace ergostab {

/// Finite-window stand-in for an ergodic average.
struct ErgodicAverage {
  double value = 0.0;
  std::size_t runup = 0;
  std::size_t window = 0;
  /// Cumulative means of the post-runup window; entry k averages k + 1 terms.
  std::vector<double> running;
};

/// Mean of series[runup:]. Throws InsufficientDataError on an empty window.
ErgodicAverage time_average(std::span<const double> series, std::size_t runup,
                            bool keep_running = false);

struct LyapunovEstimate {
  double value = 0.0;  // nats per step
  std::size_t steps = 0;
  std::size_t runup = 0;
  /// Steps where |phi'| fell below the floor and contributed -inf.
  std::size_t floored_steps = 0;
  std::vector<double> log_derivatives;
};

/// (1/T) sum_{t=runup}^{runup+T-1} log|phi'(w_t)| with w_{t+1} = evolve(w_t).
LyapunovEstimate lyapunov_1d(const std::function<double(double)>& map_derivative,
                             double w0, const std::function<double(double)>& evolve,
                             std::size_t steps, std::size_t runup,
                             double floor = 1e-300, bool keep_series = false);

/// Smallest period of a sampled attractor, or nullopt when aperiodic.
/// Period q is accepted when |x_{t+q} - x_t| < tol for every recorded t.
/// max_period == 0 means samples.size() / 4 (at least 1).
std::optional<std::size_t> detect_period(std::span<const double> samples, double tol,
                                         std::size_t max_period = 0);

struct BifurcationCell {
  double eta = 0.0;
  std::size_t init_id = 0;
  double w0 = 0.0;
  bool diverged = false;
  std::optional<std::size_t> diverged_step;
  std::vector<double> samples;
  std::optional<std::size_t> period;  // empty: aperiodic (or diverged)
};

/// Attractor classification at one learning rate.
struct BifurcationColumn {
  double eta = 0.0;
  std::size_t bounded = 0;
  std::size_t diverged = 0;
  /// lcm of the periods of the bounded orbits; empty when some bounded orbit is
  /// aperiodic or none stayed bounded.
  std::optional<std::size_t> period;
  bool any_aperiodic = false;
};

struct BifurcationScan {
  double s = 0.0;
  std::size_t runup = 0;
  std::size_t keep = 0;
  double tol = 0.0;
  std::vector<BifurcationColumn> columns;
  std::vector<BifurcationCell> cells;  // row-major: eta index, then init
};

struct BifurcationOptions {
  std::size_t n_inits = 100;
  std::size_t runup = 5000;
  std::size_t keep = 64;
  double tol = 1e-6;
  double divergence_radius = 1e6;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
};

/// GD w <- w - eta l_s'(w) from n_inits uniform inits on [0, 1]; init i is
/// drawn from RngStream(master_seed, i) and shared across the eta grid.
BifurcationScan bifurcation_scan(const QuadraticMapLoss& landscape,
                                 std::span<const double> eta_grid,
                                 const BifurcationOptions& options);

/// Inclusive arithmetic grid start, start + step, ... <= stop (+1e-9 slack).
std::vector<double> linear_grid(double start, double stop, double step);

struct AutocorrSeries {
  std::vector<double> values;  // C(tau), tau = 0..tau_max
  double mean = 0.0;
  std::size_t runup = 0;
  std::size_t window = 0;  // products averaged per lag
  /// Set when <l>^2 is below the guard; values are then unnormalized.
  bool guard = false;
};

/// C(tau) = |mean_t[l_t l_{t+tau}] - <l>^2| / <l>^2 over the same base window
/// t in [runup, len - tau_max) for every lag. Throws InsufficientDataError if
/// the series is not longer than runup + tau_max.
AutocorrSeries autocorrelation(std::span<const double> series, std::size_t runup,
                               std::size_t tau_max, double guard = 1e-12);

struct MixingRateFit {
  double rate = 1.0;       // exp(slope), clamped to (0, 1]
  double slope = 0.0;      // d log C / d tau
  double intercept = 0.0;  // log C at tau = 0
  std::size_t used = 0;
  std::size_t dropped = 0;  // non-positive values filtered out
  bool clamped = false;
};

/// Least-squares fit of log C(tau) = intercept + slope * tau over
/// tau in [first_lag, last_lag]. Throws InsufficientDataError with fewer than
/// three positive values in the window.
MixingRateFit mixing_rate_fit(std::span<const double> decay, std::size_t first_lag,
                              std::size_t last_lag);

}  // namespace ergostab

#include "ergostab/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ergostab/error.hpp"
#include "ergostab/parallel.hpp"
#include "ergostab/rng.hpp"

namespace ergostab {

ErgodicAverage time_average(std::span<const double> series, std::size_t runup,
                            bool keep_running) {
  if (series.size() <= runup) {
    throw InsufficientDataError("time_average: no samples after the runup");
  }
  ErgodicAverage out;
  out.runup = runup;
  out.window = series.size() - runup;
  if (keep_running) out.running.reserve(out.window);
  double sum = 0.0;
  for (std::size_t k = 0; k < out.window; ++k) {
    sum += series[runup + k];
    if (keep_running) out.running.push_back(sum / static_cast<double>(k + 1));
  }
  out.value = sum / static_cast<double>(out.window);
  return out;
}

LyapunovEstimate lyapunov_1d(const std::function<double(double)>& map_derivative,
                             double w0, const std::function<double(double)>& evolve,
                             std::size_t steps, std::size_t runup, double floor,
                             bool keep_series) {
  if (steps == 0) throw ParameterError("lyapunov_1d: need at least one step");
  LyapunovEstimate out;
  out.steps = steps;
  out.runup = runup;
  double w = w0;
  for (std::size_t t = 0; t < runup; ++t) w = evolve(w);
  if (keep_series) out.log_derivatives.reserve(steps);
  double sum = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double d = std::abs(map_derivative(w));
    double term = 0.0;
    if (d < floor) {
      ++out.floored_steps;
      term = -std::numeric_limits<double>::infinity();
    } else {
      term = std::log(d);
      sum += term;
    }
    if (keep_series) out.log_derivatives.push_back(term);
    w = evolve(w);
  }
  out.value = out.floored_steps > 0 ? -std::numeric_limits<double>::infinity()
                                    : sum / static_cast<double>(steps);
  return out;
}

std::optional<std::size_t> detect_period(std::span<const double> samples, double tol,
                                         std::size_t max_period) {
  if (samples.empty()) throw ParameterError("detect_period: no samples");
  const std::size_t k = samples.size();
  if (k == 1) return 1;
  const std::size_t q_max =
      std::min(max_period == 0 ? std::max<std::size_t>(1, k / 4) : max_period, k - 1);
  for (std::size_t q = 1; q <= q_max; ++q) {
    bool periodic = true;
    for (std::size_t t = 0; t + q < k && periodic; ++t) {
      periodic = std::abs(samples[t + q] - samples[t]) < tol;
    }
    if (periodic) return q;
  }
  return std::nullopt;
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) {
    throw ParameterError("linear_grid: need step > 0 and stop >= start");
  }
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double x = start + static_cast<double>(i) * step;
    if (x > stop + 1e-9) break;
    grid.push_back(x);
  }
  return grid;
}

BifurcationScan bifurcation_scan(const QuadraticMapLoss& landscape,
                                 std::span<const double> eta_grid,
                                 const BifurcationOptions& options) {
  if (options.n_inits == 0) throw ParameterError("bifurcation_scan: n_inits must be >= 1");
  if (options.keep == 0) throw ParameterError("bifurcation_scan: keep must be >= 1");
  if (!std::is_sorted(eta_grid.begin(), eta_grid.end())) {
    throw ParameterError("bifurcation_scan: eta grid must be sorted ascending");
  }
  for (double eta : eta_grid) {
    if (!(eta > 0.0)) throw ParameterError("bifurcation_scan: eta must be positive");
  }

  std::vector<double> inits(options.n_inits);
  for (std::size_t i = 0; i < options.n_inits; ++i) {
    RngStream rng(options.master_seed, i);
    inits[i] = rng.uniform();
  }

  BifurcationScan scan;
  scan.s = landscape.s();
  scan.runup = options.runup;
  scan.keep = options.keep;
  scan.tol = options.tol;
  scan.cells.resize(eta_grid.size() * options.n_inits);

  parallel_for(scan.cells.size(), options.workers, [&](std::size_t c) {
    const std::size_t e = c / options.n_inits;
    const std::size_t i = c % options.n_inits;
    BifurcationCell& cell = scan.cells[c];
    cell.eta = eta_grid[e];
    cell.init_id = i;
    cell.w0 = inits[i];
    double w = inits[i];
    const std::size_t total = options.runup + options.keep;
    cell.samples.reserve(options.keep);
    for (std::size_t t = 0; t < total; ++t) {
      w = landscape.gd_map(cell.eta, w);
      if (!std::isfinite(w) || std::abs(w) > options.divergence_radius) {
        cell.diverged = true;
        cell.diverged_step = t;
        cell.samples.clear();
        return;
      }
      if (t >= options.runup) cell.samples.push_back(w);
    }
    cell.period = detect_period(cell.samples, options.tol);
  });

  scan.columns.resize(eta_grid.size());
  for (std::size_t e = 0; e < eta_grid.size(); ++e) {
    BifurcationColumn& col = scan.columns[e];
    col.eta = eta_grid[e];
    std::size_t lcm = 1;
    for (std::size_t i = 0; i < options.n_inits; ++i) {
      const BifurcationCell& cell = scan.cells[e * options.n_inits + i];
      if (cell.diverged) {
        ++col.diverged;
        continue;
      }
      ++col.bounded;
      if (cell.period) {
        lcm = std::lcm(lcm, *cell.period);
      } else {
        col.any_aperiodic = true;
      }
    }
    if (col.bounded > 0 && !col.any_aperiodic) col.period = lcm;
  }
  return scan;
}

AutocorrSeries autocorrelation(std::span<const double> series, std::size_t runup,
                               std::size_t tau_max, double guard) {
  if (series.size() <= runup + tau_max) {
    throw InsufficientDataError(
        "autocorrelation: series must be longer than runup + tau_max");
  }
  AutocorrSeries out;
  out.runup = runup;
  out.window = series.size() - runup - tau_max;
  const std::span<const double> x = series.subspan(runup);

  double sum = 0.0;
  for (std::size_t t = 0; t < out.window; ++t) sum += x[t];
  out.mean = sum / static_cast<double>(out.window);
  const double mean_sq = out.mean * out.mean;

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  out.guard = mean_sq <= guard * peak * peak;

  out.values.resize(tau_max + 1);
  for (std::size_t tau = 0; tau <= tau_max; ++tau) {
    double acc = 0.0;
    for (std::size_t t = 0; t < out.window; ++t) acc += x[t] * x[t + tau];
    const double raw = std::abs(acc / static_cast<double>(out.window) - mean_sq);
    out.values[tau] = out.guard ? raw : raw / mean_sq;
  }
  return out;
}

MixingRateFit mixing_rate_fit(std::span<const double> decay, std::size_t first_lag,
                              std::size_t last_lag) {
  if (decay.empty() || first_lag > last_lag) {
    throw InsufficientDataError("mixing_rate_fit: empty lag window");
  }
  last_lag = std::min(last_lag, decay.size() - 1);
  MixingRateFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t tau = first_lag; tau <= last_lag; ++tau) {
    if (decay[tau] > 0.0 && std::isfinite(decay[tau])) {
      xs.push_back(static_cast<double>(tau));
      ys.push_back(std::log(decay[tau]));
    } else {
      ++fit.dropped;
    }
  }
  if (xs.size() < 3) {
    throw InsufficientDataError("mixing_rate_fit: need at least 3 positive values");
  }
  fit.used = xs.size();
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.rate = std::exp(fit.slope);
  if (fit.rate > 1.0) {
    fit.rate = 1.0;
    fit.clamped = true;
  }
  return fit;
}

}  // namespace ergostab

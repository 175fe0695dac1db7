#include "ergostab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>

#include "ergostab/dynamics.hpp"
#include "ergostab/ergodic.hpp"
#include "ergostab/error.hpp"
#include "ergostab/linear_models.hpp"
#include "ergostab/markov.hpp"
#include "ergostab/parallel.hpp"
#include "ergostab/quadratic_map.hpp"
#include "ergostab/toynet.hpp"

namespace ergostab {

namespace {

const std::vector<std::pair<ExperimentKind, std::string_view>>& kind_table() {
  static const std::vector<std::pair<ExperimentKind, std::string_view>> table = {
      {ExperimentKind::Bifurcate, "bifurcate"}, {ExperimentKind::Lyapunov, "lyapunov"},
      {ExperimentKind::Orbit, "orbit"},         {ExperimentKind::Autocorr, "autocorr"},
      {ExperimentKind::Sas, "sas"},             {ExperimentKind::Ulam, "ulam"},
      {ExperimentKind::Ntk, "ntk"},             {ExperimentKind::Bound, "bound"},
      {ExperimentKind::CorruptSweep, "corrupt-sweep"},
  };
  return table;
}

const std::set<std::string>& meta_keys() {
  static const std::set<std::string> keys = {"kind", "seed", "out", "workers", "preset"};
  return keys;
}

// Parameters of the synthetic corrupted-label task shared by the toy-net kinds.
void add_task_defaults(Json& p) {
  p["n"] = 64u;
  p["d"] = 5u;
  p["hidden"] = 16u;
  p["activation"] = "tanh";
  p["loss"] = "logistic";
  p["teacher"] = "logistic";
  p["teacher_noise"] = 0.0;
  p["p"] = 0.0;
  p["heldout"] = 256u;
  p["mode"] = "sgd";
  p["eta"] = 0.05;
  p["momentum"] = 0.9;
  p["batch_size"] = 8u;
  p["init_gain"] = 1.0;
  p["divergence_radius"] = 1e8;
  p["runup"] = 200u;
  p["window"] = 1200u;
}

void add_sas_defaults(Json& p) {
  p["pairs"] = 10u;
  p["inits_per_side"] = 1u;
  p["probes"] = 64u;
  p["statistic"] = "loss";
  p["include_swapped_points"] = true;
}

std::string kind_name(ExperimentKind kind) { return std::string(to_string(kind)); }

std::size_t line_of(std::string_view text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

std::string type_name(const Json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

// Checks `value` against the type of the default and stores it.
void assign_param(Json& params, const std::string& key, const Json& value, ExperimentKind kind) {
  if (!params.contains(key)) {
    throw ConfigError("unknown key '" + key + "' for kind '" + kind_name(kind) + "'");
  }
  Json& slot = params[key];
  auto mismatch = [&] {
    return ConfigError("key '" + key + "': expected " + type_name(slot) + ", got " +
                       type_name(value));
  };
  if (slot.is_number_float()) {
    if (!value.is_number()) throw mismatch();
    slot = value.get<double>();
  } else if (slot.is_number_unsigned() || slot.is_number_integer()) {
    if (value.is_number_unsigned()) {
      slot = value.get<std::uint64_t>();
    } else if (value.is_number_integer()) {
      if (value.get<std::int64_t>() < 0) {
        throw ConfigError("key '" + key + "': must be non-negative");
      }
      slot = value.get<std::uint64_t>();
    } else if (value.is_number_float()) {
      const double v = value.get<double>();
      if (!(v >= 0.0) || std::floor(v) != v || v > 9.0e15) {
        throw ConfigError("key '" + key + "': expected a non-negative integer");
      }
      slot = static_cast<std::uint64_t>(v);
    } else {
      throw mismatch();
    }
  } else if (slot.is_boolean()) {
    if (!value.is_boolean()) throw mismatch();
    slot = value;
  } else if (slot.is_string()) {
    if (!value.is_string()) throw mismatch();
    slot = value;
  } else if (slot.is_array()) {
    if (!value.is_array()) throw mismatch();
    slot = value;
  } else {
    throw mismatch();
  }
}

struct Meta {
  std::optional<ExperimentKind> kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> preset;
};

std::uint64_t meta_unsigned(const std::string& key, const Json& value) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
    return value.get<std::uint64_t>();
  }
  throw ConfigError("key '" + key + "': expected a non-negative integer");
}

void read_meta(Meta& meta, const std::string& key, const Json& value) {
  if (key == "kind") {
    if (!value.is_string()) throw ConfigError("key 'kind': expected string");
    meta.kind = parse_experiment_kind(value.get<std::string>());
  } else if (key == "seed") {
    meta.seed = meta_unsigned(key, value);
  } else if (key == "workers") {
    meta.workers = meta_unsigned(key, value);
  } else if (key == "out" || key == "preset") {
    if (!value.is_string()) throw ConfigError("key '" + key + "': expected string");
    (key == "out" ? meta.out : meta.preset) = value.get<std::string>();
  }
}

void check_preset(const std::string& preset) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end()) {
    throw ConfigError("unknown preset '" + preset + "'");
  }
}

Json parse_override_value(const std::string& raw) {
  Json v = Json::parse(raw, nullptr, false);
  if (v.is_discarded()) return Json(raw);
  return v;
}

// Builds the config from document keys (in order) and override pairs.
ExperimentConfig resolve(ExperimentKind kind, const Json& doc,
                         const std::vector<std::pair<std::string, Json>>& overrides,
                         const Meta& explicit_meta) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Meta meta;
  for (const auto& [key, value] : doc.items()) {
    if (meta_keys().count(key)) read_meta(meta, key, value);
  }
  for (const auto& [key, value] : overrides) {
    if (meta_keys().count(key)) read_meta(meta, key, value);
  }
  if (meta.kind && *meta.kind != kind) {
    throw ConfigError("config kind '" + kind_name(*meta.kind) + "' does not match '" +
                      kind_name(kind) + "'");
  }
  if (explicit_meta.seed) meta.seed = explicit_meta.seed;
  if (explicit_meta.out) meta.out = explicit_meta.out;
  if (explicit_meta.workers) meta.workers = explicit_meta.workers;
  if (explicit_meta.preset) meta.preset = explicit_meta.preset;

  ExperimentConfig config;
  config.kind = kind;
  config.preset = meta.preset.value_or("desk");
  check_preset(config.preset);
  config.seed = meta.seed.value_or(0);
  config.out = meta.out.value_or("out");
  config.workers = meta.workers.value_or(0);
  config.params = default_params(kind, config.preset);
  for (const auto& [key, value] : doc.items()) {
    if (!meta_keys().count(key)) assign_param(config.params, key, value, kind);
  }
  for (const auto& [key, value] : overrides) {
    if (!meta_keys().count(key)) assign_param(config.params, key, value, kind);
  }
  return config;
}

// --- parameter access -------------------------------------------------------

double num(const Json& p, const char* key) { return p.at(key).get<double>(); }
std::size_t count(const Json& p, const char* key) { return p.at(key).get<std::size_t>(); }
std::string str(const Json& p, const char* key) { return p.at(key).get<std::string>(); }
bool flag(const Json& p, const char* key) { return p.at(key).get<bool>(); }

std::vector<double> num_array(const Json& p, const char* key) {
  std::vector<double> out;
  for (const auto& v : p.at(key)) {
    if (!v.is_number()) throw ConfigError(std::string("key '") + key + "': expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

template <typename F>
auto config_guard(F&& f) {
  try {
    return f();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

OptimizerMode parse_mode(const std::string& s) {
  if (s == "gd") return OptimizerMode::GD;
  if (s == "sgd") return OptimizerMode::SGD;
  throw ConfigError("key 'mode': expected 'gd' or 'sgd', got '" + s + "'");
}

std::string_view mode_name(OptimizerMode m) { return m == OptimizerMode::GD ? "gd" : "sgd"; }

// Stream salts keeping the random draws of different roles apart.
constexpr std::uint64_t kHeldoutStream = 1;
constexpr std::uint64_t kPairIndexStream = 2;
constexpr std::uint64_t kReplacementStream = 3;
constexpr std::uint64_t kChainStream = 4;
constexpr std::uint64_t kNtkStream = 5;

std::uint64_t orbit_seed(std::uint64_t seed) { return mix64(seed ^ 0x0b17a5eedULL); }
std::uint64_t sas_seed(std::uint64_t seed) { return mix64(seed ^ 0x5a55eedULL); }

// Toy-net task on a corrupted-label synthetic dataset.
struct Task {
  std::unique_ptr<ToyNetLandscape> net;
  SyntheticDataset data;
  TrainingSet heldout;
  OptimizerConfig optimizer;
  OrbitSchedule schedule;
  double gain = 1.0;

  WeightSampler init_sampler() const {
    const ToyNetLandscape* model = net.get();
    const double g = gain;
    return [model, g](RngStream& rng) { return model->initial_weights(rng, g); };
  }
};

Task make_task(const Json& p, std::uint64_t seed, std::optional<double> corruption = {}) {
  return config_guard([&] {
    Task t;
    const std::size_t n = count(p, "n");
    const std::size_t d = count(p, "d");
    t.net = std::make_unique<ToyNetLandscape>(d, count(p, "hidden"),
                                              parse_activation(str(p, "activation")),
                                              parse_loss_kind(str(p, "loss")));
    const Teacher teacher = make_teacher(parse_teacher_kind(str(p, "teacher")), d, seed,
                                         num(p, "teacher_noise"));
    t.data = make_dataset(n, corruption.value_or(num(p, "p")), teacher, seed);
    RngStream held(seed, kHeldoutStream);
    t.heldout = draw_samples(t.data, count(p, "heldout"), held);
    t.optimizer.eta = num(p, "eta");
    t.optimizer.momentum = num(p, "momentum");
    t.optimizer.mode = parse_mode(str(p, "mode"));
    t.optimizer.batch_size = t.optimizer.mode == OptimizerMode::GD ? n : count(p, "batch_size");
    t.optimizer.divergence_radius = num(p, "divergence_radius");
    t.optimizer.validate(n);
    t.schedule = {count(p, "runup"), count(p, "window"), 0};
    t.gain = num(p, "init_gain");
    if (t.heldout.empty()) throw ConfigError("key 'heldout': must be >= 1");
    return t;
  });
}

Json optimizer_json(const OptimizerConfig& c) {
  return Json{{"mode", std::string(mode_name(c.mode))},
              {"eta", c.eta},
              {"momentum", c.momentum},
              {"batch_size", c.batch_size}};
}

// Orbits of the task from n_inits seeded initializations with the four
// standard observables.
std::vector<OrbitRecord> task_orbits(const Task& task, std::size_t n_inits, std::uint64_t seed,
                                     std::size_t workers) {
  const std::vector<Observable> observables = {
      mean_loss_observable("train_loss", *task.net, task.data.samples),
      mean_loss_observable("test_loss", *task.net, task.heldout),
      mean_error_observable("train_error", *task.net, task.data.samples),
      mean_error_observable("test_error", *task.net, task.heldout),
  };
  std::vector<WeightVector> inits;
  const auto sampler = task.init_sampler();
  for (std::size_t i = 0; i < n_inits; ++i) {
    RngStream rng(orbit_seed(seed) ^ 0x1417ULL, i);
    inits.push_back(sampler(rng));
  }
  return run_ensemble(inits, *task.net, task.data.samples, task.optimizer, task.schedule,
                      observables, orbit_seed(seed), workers);
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<TrainingPair> perturbation_pairs(const SyntheticDataset& data, std::size_t pairs,
                                             std::uint64_t seed) {
  if (pairs > data.n) throw ConfigError("key 'pairs': must not exceed n");
  RngStream index_rng(seed, kPairIndexStream);
  const BatchDraw picks = draw_batch(data.n, pairs, index_rng);
  const RngStream replacement_root(seed, kReplacementStream);
  std::vector<TrainingPair> out;
  out.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    RngStream rng = replacement_root.derive(i);
    out.push_back(stochastic_perturbation(data, picks.indices[i], rng).training_pair());
  }
  return out;
}

SasProtocol sas_protocol(const Json& p) {
  SasProtocol protocol;
  protocol.runup = count(p, "runup");
  protocol.window = count(p, "window");
  protocol.inits_per_side = count(p, "inits_per_side");
  protocol.include_swapped_points = flag(p, "include_swapped_points");
  protocol.statistic = config_guard([&] { return parse_statistic(str(p, "statistic")); });
  return protocol;
}

TrainingSet probe_set(const Task& task, std::size_t probes) {
  const std::size_t k = std::min(probes, task.heldout.size());
  return TrainingSet(task.heldout.begin(), task.heldout.begin() + static_cast<std::ptrdiff_t>(k));
}

Json fit_json(std::span<const double> values, std::size_t first, std::size_t last) {
  try {
    const MixingRateFit fit = mixing_rate_fit(values, first, last);
    return Json{{"rate", fit.rate},   {"slope", fit.slope}, {"intercept", fit.intercept},
                {"used", fit.used},   {"dropped", fit.dropped}, {"clamped", fit.clamped}};
  } catch (const InsufficientDataError& e) {
    return Json{{"rate", nullptr}, {"error", e.what()}};
  }
}

// --- experiments -------------------------------------------------------------

ExperimentResult run_bifurcate(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const QuadraticMapLoss landscape = config_guard([&] { return QuadraticMapLoss(num(p, "s")); });
  const auto grid = config_guard(
      [&] { return linear_grid(num(p, "eta_min"), num(p, "eta_max"), num(p, "eta_step")); });
  BifurcationOptions options;
  options.n_inits = count(p, "n_inits");
  options.runup = count(p, "runup");
  options.keep = count(p, "keep");
  options.tol = num(p, "tol");
  options.divergence_radius = num(p, "divergence_radius");
  options.master_seed = c.seed;
  options.workers = workers;
  const BifurcationScan scan = config_guard([&] { return bifurcation_scan(landscape, grid, options); });

  CsvTable cells({"eta", "init_id", "sample_index", "value", "period", "diverged"});
  std::size_t diverged = 0;
  for (const auto& cell : scan.cells) {
    const std::string period =
        cell.diverged ? "" : (cell.period ? std::to_string(*cell.period) : "aperiodic");
    if (cell.diverged) {
      ++diverged;
      cells.row().add(cell.eta).add(std::uint64_t{cell.init_id}).empty().empty().add(period).add(true);
      continue;
    }
    for (std::size_t k = 0; k < cell.samples.size(); ++k) {
      cells.row()
          .add(cell.eta)
          .add(std::uint64_t{cell.init_id})
          .add(std::uint64_t{k})
          .add(cell.samples[k])
          .add(period)
          .add(false);
    }
  }
  CsvTable columns({"eta", "bounded", "diverged", "period", "any_aperiodic"});
  Json cols = Json::array();
  for (const auto& col : scan.columns) {
    columns.row()
        .add(col.eta)
        .add(std::uint64_t{col.bounded})
        .add(std::uint64_t{col.diverged})
        .add(col.period)
        .add(col.any_aperiodic);
  }
  const double sharp = gmap_sharpness(scan.s, 0.5);
  ExperimentResult r;
  r.result = Json{{"s", scan.s},
                  {"sharpness_at_half", sharp},
                  {"threshold_eta", 2.0 / sharp},
                  {"max_sharpness_unit_interval", gmap_max_sharpness(scan.s)},
                  {"cells", scan.cells.size()},
                  {"diverged_cells", diverged}};
  r.divergence_dominated = !scan.cells.empty() && diverged == scan.cells.size();
  r.files.push_back({"bifurcation.csv", cells.render()});
  r.files.push_back({"periods.csv", columns.render()});
  return r;
}

ExperimentResult run_lyapunov(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const std::string map = str(p, "map");
  if (map != "gmap" && map != "gd") throw ConfigError("key 'map': expected 'gmap' or 'gd'");
  const QuadraticMapLoss landscape = config_guard([&] { return QuadraticMapLoss(num(p, "s")); });
  const double s = landscape.s();
  std::vector<double> etas = {std::nan("")};
  if (map == "gd") {
    etas = config_guard(
        [&] { return linear_grid(num(p, "eta_min"), num(p, "eta_max"), num(p, "eta_step")); });
  }
  const std::size_t n_inits = count(p, "n_inits");
  const std::size_t steps = count(p, "steps");
  const std::size_t runup = count(p, "runup");
  const double radius = num(p, "divergence_radius");

  struct Cell {
    double eta;
    std::size_t init;
    double w0;
    LyapunovEstimate est;
    bool diverged = false;
  };
  std::vector<Cell> cells(etas.size() * n_inits);
  config_guard([&] {
    parallel_for(cells.size(), workers, [&](std::size_t i) {
      Cell& cell = cells[i];
      cell.eta = etas[i / n_inits];
      cell.init = i % n_inits;
      RngStream rng(c.seed, cell.init);
      cell.w0 = rng.uniform();
      bool blown = false;
      std::function<double(double)> evolve;
      std::function<double(double)> deriv;
      if (map == "gmap") {
        evolve = [s](double w) { return gmap_eval(s, w); };
        deriv = [s](double w) { return gmap_derivative(s, w); };
      } else {
        const double eta = cell.eta;
        evolve = [&landscape, eta, radius, &blown](double w) {
          const double next = landscape.gd_map(eta, w);
          if (!std::isfinite(next) || std::abs(next) > radius) {
            blown = true;
            return 0.5;
          }
          return next;
        };
        deriv = [&landscape, eta](double w) { return landscape.gd_map_derivative(eta, w); };
      }
      cell.est = lyapunov_1d(deriv, cell.w0, evolve, steps, runup);
      cell.diverged = blown;
    });
    return 0;
  });

  CsvTable t({"s", "eta", "init_id", "w0", "lyapunov", "floored_steps", "diverged"});
  std::size_t diverged = 0;
  std::vector<double> values;
  for (const auto& cell : cells) {
    auto row = t.row();
    row.add(s);
    if (map == "gd") {
      row.add(cell.eta);
    } else {
      row.empty();
    }
    row.add(std::uint64_t{cell.init}).add(cell.w0);
    if (cell.diverged) {
      ++diverged;
      row.empty();
    } else {
      row.add(cell.est.value);
      values.push_back(cell.est.value);
    }
    row.add(std::uint64_t{cell.est.floored_steps}).add(cell.diverged);
  }
  ExperimentResult r;
  r.result = Json{{"map", map},
                  {"s", s},
                  {"steps", steps},
                  {"runup", runup},
                  {"orbits", cells.size()},
                  {"diverged", diverged},
                  {"mean_lyapunov", values.empty() ? Json(nullptr) : Json(mean_of(values))}};
  r.divergence_dominated = !cells.empty() && diverged == cells.size();
  r.files.push_back({"lyapunov.csv", t.render()});
  return r;
}

ExperimentResult run_orbit_kind(const ExperimentConfig& c, std::size_t workers) {
  const Task task = make_task(c.params, c.seed);
  const auto records = task_orbits(task, count(c.params, "n_inits"), c.seed, workers);
  CsvTable t({"init_id", "step", "train_loss", "test_loss", "train_error", "test_error",
              "cum_train_loss", "cum_test_loss"});
  Json inits = Json::array();
  std::size_t diverged = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const auto& tr = rec.observable("train_loss");
    const auto& te = rec.observable("test_loss");
    const auto& tre = rec.observable("train_error");
    const auto& tee = rec.observable("test_error");
    double ctr = 0.0;
    double cte = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      ctr += tr[k];
      cte += te[k];
      const double denom = static_cast<double>(k + 1);
      t.row()
          .add(std::uint64_t{i})
          .add(std::uint64_t{rec.runup + k + 1})
          .add(tr[k])
          .add(te[k])
          .add(tre[k])
          .add(tee[k])
          .add(ctr / denom)
          .add(cte / denom);
    }
    Json j{{"init_id", i}, {"diverged", rec.diverged}};
    if (rec.diverged) {
      ++diverged;
      j["diverged_step"] = *rec.diverged_step;
    } else if (!tr.empty()) {
      const double a = mean_of(tr);
      const double b = mean_of(te);
      j["train_loss_average"] = a;
      j["test_loss_average"] = b;
      j["gap"] = std::abs(b - a);
      j["train_error_average"] = mean_of(tre);
      j["test_error_average"] = mean_of(tee);
    }
    inits.push_back(std::move(j));
  }
  ExperimentResult r;
  r.result = Json{{"optimizer", optimizer_json(task.optimizer)},
                  {"runup", task.schedule.runup},
                  {"window", task.schedule.length},
                  {"orbits", inits}};
  r.divergence_dominated = !records.empty() && diverged == records.size();
  r.files.push_back({"orbit.csv", t.render()});
  return r;
}

const std::set<std::string>& observable_names() {
  static const std::set<std::string> names = {"train_loss", "test_loss", "train_error",
                                              "test_error"};
  return names;
}

ExperimentResult run_autocorr(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const std::string observable = str(p, "observable");
  if (!observable_names().count(observable)) {
    throw ConfigError("key 'observable': unknown observable '" + observable + "'");
  }
  const std::size_t tau_max = count(p, "tau_max");
  const Task task = make_task(p, c.seed);
  const auto records = task_orbits(task, count(p, "n_inits"), c.seed, workers);

  CsvTable per_init({"init_id", "lag", "C", "guard_flag"});
  std::vector<std::vector<double>> curves;
  bool any_guard = false;
  Json inits = Json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].diverged) {
      inits.push_back(Json{{"init_id", i}, {"diverged", true}});
      continue;
    }
    const AutocorrSeries ac = config_guard(
        [&] { return autocorrelation(records[i].observable(observable), 0, tau_max); });
    any_guard = any_guard || ac.guard;
    for (std::size_t tau = 0; tau < ac.values.size(); ++tau) {
      per_init.row().add(std::uint64_t{i}).add(std::uint64_t{tau}).add(ac.values[tau]).add(ac.guard);
    }
    const std::size_t lo = std::min<std::size_t>(count(p, "fit_first"), tau_max);
    const std::size_t hi = std::min<std::size_t>(count(p, "fit_last"), tau_max);
    const std::span<const double> window(ac.values.data() + lo, hi >= lo ? hi - lo + 1 : 0);
    inits.push_back(Json{{"init_id", i},
                         {"diverged", false},
                         {"mean", ac.mean},
                         {"mean_abs_C_fit_window", mean_of(window)},
                         {"fit", fit_json(ac.values, lo, hi)}});
    curves.push_back(ac.values);
  }

  CsvTable pooled({"lag", "C", "guard_flag"});
  std::vector<double> mean_curve(tau_max + 1, 0.0);
  std::vector<double> spread(tau_max + 1, 0.0);
  for (std::size_t tau = 0; tau <= tau_max && !curves.empty(); ++tau) {
    std::vector<double> at;
    for (const auto& cv : curves) at.push_back(cv[tau]);
    mean_curve[tau] = mean_of(at);
    spread[tau] = stddev_of(at);
    pooled.row().add(std::uint64_t{tau}).add(mean_curve[tau]).add(any_guard);
  }
  ExperimentResult r;
  r.result = Json{{"observable", observable},
                  {"tau_max", tau_max},
                  {"runup", task.schedule.runup},
                  {"window", task.schedule.length},
                  {"valid_inits", curves.size()},
                  {"per_lag_spread", spread},
                  {"pooled_fit", curves.empty() ? Json(nullptr)
                                                : fit_json(mean_curve, count(p, "fit_first"),
                                                           count(p, "fit_last"))},
                  {"inits", inits}};
  r.divergence_dominated = curves.empty();
  r.files.push_back({"autocorr.csv", pooled.render()});
  r.files.push_back({"autocorr_inits.csv", per_init.render()});
  return r;
}

ExperimentResult run_sas(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const Task task = make_task(p, c.seed);
  const auto pairs = perturbation_pairs(task.data, count(p, "pairs"), c.seed);
  const SasProtocol protocol = sas_protocol(p);
  const StabilityReport report = config_guard([&] {
    return sas_lower_bound(*task.net, pairs, probe_set(task, count(p, "probes")), task.optimizer,
                           protocol, sas_seed(c.seed), task.init_sampler(), workers);
  });
  ExperimentResult r;
  r.result = to_json(report);
  r.divergence_dominated = !report.pairs.empty() && report.valid_pairs == 0;
  r.files.push_back({"stability.json", render_json(r.result)});
  r.files.push_back({"stability.csv", stability_csv(report).render()});
  r.files.push_back({"dataset.json", render_json(to_json(task.data))});
  return r;
}

// Ranks with ties sharing the lower rank, so equal values compare equal.
std::vector<std::size_t> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x < v[i]; }));
  }
  return out;
}

ExperimentResult run_corrupt_sweep(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const std::vector<double> ps = num_array(p, "ps");
  if (ps.empty()) throw ConfigError("key 'ps': must not be empty");
  const SasProtocol protocol = sas_protocol(p);
  const std::size_t tau_min = count(p, "tau_min");
  const std::size_t tau_max = count(p, "tau_max");
  if (tau_min > tau_max) throw ConfigError("key 'tau_min': must not exceed tau_max");

  CsvTable sweep({"p", "beta_hat", "valid_pairs", "mean_pair_max", "sem_pair_max",
                  "empirical_risk", "population_risk", "gap", "mean_autocorr"});
  CsvTable diffs({"p", "pair_id", "probe_id", "diff"});
  Json rows = Json::array();
  std::vector<double> betas;
  std::vector<double> gaps;
  std::vector<double> autocorrs;
  bool all_diverged = true;
  for (double corruption : ps) {
    const Task task = make_task(p, c.seed, corruption);
    const auto pairs = perturbation_pairs(task.data, count(p, "pairs"), c.seed);
    const StabilityReport report = config_guard([&] {
      return sas_lower_bound(*task.net, pairs, probe_set(task, count(p, "probes")),
                             task.optimizer, protocol, sas_seed(c.seed), task.init_sampler(),
                             workers);
    });
    for (const auto& pr : report.pairs) {
      for (std::size_t q = 0; q < pr.diffs.size(); ++q) {
        diffs.row().add(corruption).add(std::uint64_t{pr.pair_id}).add(std::uint64_t{q}).add(pr.diffs[q]);
      }
    }
    std::vector<double> pair_max;
    for (const auto& pr : report.pairs) {
      if (pr.valid) pair_max.push_back(pr.max_diff);
    }

    const auto records = task_orbits(task, count(p, "gap_inits"), c.seed, workers);
    std::vector<double> train_avgs;
    std::vector<double> test_avgs;
    std::vector<double> gap_values;
    std::vector<double> ac_values;
    for (const auto& rec : records) {
      if (rec.diverged) continue;
      const double a = mean_of(rec.observable("train_loss"));
      const double b = mean_of(rec.observable("test_loss"));
      train_avgs.push_back(a);
      test_avgs.push_back(b);
      gap_values.push_back(std::abs(b - a));
      const AutocorrSeries ac = config_guard(
          [&] { return autocorrelation(rec.observable("test_loss"), 0, tau_max); });
      ac_values.push_back(mean_of(std::span<const double>(ac.values).subspan(tau_min)));
    }
    if (report.valid_pairs > 0 || !gap_values.empty()) all_diverged = false;
    const double gap = mean_of(gap_values);
    const double autocorr = mean_of(ac_values);
    sweep.row()
        .add(corruption)
        .add(report.beta_hat)
        .add(std::uint64_t{report.valid_pairs})
        .add(mean_of(pair_max))
        .add(stddev_of(pair_max) / std::sqrt(static_cast<double>(std::max<std::size_t>(pair_max.size(), 1))))
        .add(mean_of(train_avgs))
        .add(mean_of(test_avgs))
        .add(gap)
        .add(autocorr);
    betas.push_back(report.beta_hat);
    gaps.push_back(gap);
    autocorrs.push_back(autocorr);
    rows.push_back(Json{{"p", corruption},
                        {"beta_hat", report.beta_hat},
                        {"valid_pairs", report.valid_pairs},
                        {"gap_orbits", gap_values.size()},
                        {"gap", gap},
                        {"gap_per_init", gap_values},
                        {"mean_autocorr", autocorr},
                        {"mean_autocorr_per_init", ac_values}});
  }
  bool beta_monotone = true;
  for (std::size_t i = 1; i < betas.size(); ++i) beta_monotone = beta_monotone && betas[i - 1] <= betas[i];

  ExperimentResult r;
  r.result = Json{{"estimator", "SAS lower bound"},
                  {"optimizer", nullptr},
                  {"pairs", count(p, "pairs")},
                  {"runup", protocol.runup},
                  {"window", protocol.window},
                  {"statistic", std::string(to_string(protocol.statistic))},
                  {"autocorr_lags", Json::array({tau_min, tau_max})},
                  {"beta_non_decreasing", beta_monotone},
                  {"autocorr_orders_gap", ranks(autocorrs) == ranks(gaps)},
                  {"sweep", rows}};
  {
    const Task probe_task = make_task(p, c.seed, ps.front());
    r.result["optimizer"] = optimizer_json(probe_task.optimizer);
  }
  r.divergence_dominated = all_diverged;
  r.files.push_back({"sweep.csv", sweep.render()});
  r.files.push_back({"stability.csv", diffs.render()});
  return r;
}

ExperimentResult run_ulam(const ExperimentConfig& c, std::size_t workers) {
  const Json& p = c.params;
  const std::string source = str(p, "source");
  std::vector<double> series;
  std::size_t runup = 0;
  LossPartition partition;
  ExperimentResult r;
  Json origin;
  if (source == "chain") {
    const Json& m = p.at("chain");
    const auto K = static_cast<Eigen::Index>(m.size());
    if (K < 2) throw ConfigError("key 'chain': need at least 2 states");
    Eigen::MatrixXd P(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Json& row = m[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != K) {
        throw ConfigError("key 'chain': must be a square matrix");
      }
      for (Eigen::Index j = 0; j < K; ++j) P(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    config_guard([&] { return transition_from_matrix(P); });
    RngStream rng(c.seed, kChainStream);
    Eigen::Index state = 0;
    const std::size_t steps = count(p, "chain_steps");
    series.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      series.push_back(static_cast<double>(state));
      const double u = rng.uniform();
      double acc = 0.0;
      Eigen::Index next = K - 1;
      for (Eigen::Index j = 0; j < K; ++j) {
        acc += P(state, j);
        if (u < acc) {
          next = j;
          break;
        }
      }
      state = next;
    }
    partition = config_guard(
        [&] { return LossPartition::uniform(-0.5, static_cast<double>(K) - 0.5, static_cast<std::size_t>(K)); });
    origin = Json{{"source", "chain"}, {"steps", steps}};
  } else if (source == "orbit") {
    const std::string observable = str(p, "observable");
    if (!observable_names().count(observable)) {
      throw ConfigError("key 'observable': unknown observable '" + observable + "'");
    }
    const Task task = make_task(p, c.seed);
    const auto records = task_orbits(task, 1, c.seed, workers);
    if (records.front().diverged) {
      r.divergence_dominated = true;
      r.result = Json{{"source", "orbit"}, {"diverged", true}};
      return r;
    }
    series = records.front().observable(observable);
    partition = config_guard([&] {
      return LossPartition::fit(series, runup, count(p, "bins"), num(p, "margin"));
    });
    origin = Json{{"source", "orbit"},
                  {"observable", observable},
                  {"runup", task.schedule.runup},
                  {"window", task.schedule.length}};
  } else {
    throw ConfigError("key 'source': expected 'orbit' or 'chain'");
  }

  const TransitionMatrix T =
      config_guard([&] { return ulam_transition(series, runup, partition, num(p, "smoothing")); });
  const SpectralReport spec = spectral_gap(T.probabilities);

  // Relaxation from a point mass on the most visited bin.
  Eigen::Index start = 0;
  T.counts.rowwise().sum().maxCoeff(&start);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(T.probabilities.rows());
  delta(start) = 1.0;
  const std::size_t tv_steps = count(p, "tv_steps");
  const auto tv = tv_convergence_curve(T.probabilities, delta, spec.stationary, tv_steps);
  CsvTable tv_csv({"step", "tv"});
  for (std::size_t t = 0; t < tv.size(); ++t) tv_csv.row().add(std::uint64_t{t}).add(tv[t]);

  r.result = Json{{"origin", origin},
                  {"surrogate", "Markov surrogate of the loss process"},
                  {"bins", partition.bins},
                  {"lambda2", spec.lambda2},
                  {"gap", spec.gap},
                  {"empty_rows", std::count(T.empty_rows.begin(), T.empty_rows.end(), 1)},
                  {"clamped", T.clamped},
                  {"tv_start_bin", static_cast<std::size_t>(start)},
                  {"tv_fit", fit_json(tv, 1, tv_steps)}};
  r.files.push_back({"transition.json", render_json(to_json(T))});
  r.files.push_back({"spectrum.json", render_json(to_json(spec))});
  r.files.push_back({"spectrum.csv", spectrum_csv(spec).render()});
  r.files.push_back({"tv.csv", tv_csv.render()});
  return r;
}

ExperimentResult run_ntk(const ExperimentConfig& c, std::size_t) {
  const Json& p = c.params;
  const auto n = static_cast<Eigen::Index>(count(p, "n"));
  const auto dw = static_cast<Eigen::Index>(count(p, "d_w"));
  if (n < 1 || dw < 1) throw ConfigError("keys 'n', 'd_w': must be >= 1");
  const std::string reference = str(p, "reference");
  if (reference != "zero" && reference != "random") {
    throw ConfigError("key 'reference': expected 'zero' or 'random'");
  }
  RngStream rng(c.seed, kNtkStream);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dw));
  auto feature_row = [&] {
    Eigen::RowVectorXd row(dw);
    for (Eigen::Index j = 0; j < dw; ++j) row(j) = scale * rng.normal();
    return row;
  };
  LinearizedModel model;
  model.features.resize(n, dw);
  for (Eigen::Index i = 0; i < n; ++i) model.features.row(i) = feature_row();
  model.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) model.labels(i) = num(p, "label_scale") * rng.normal();
  model.reference = Eigen::VectorXd::Zero(dw);
  if (reference == "random") {
    for (Eigen::Index j = 0; j < dw; ++j) model.reference(j) = scale * rng.normal();
  }
  model.ridge = num(p, "ridge");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.ntk(), Eigen::EigenvaluesOnly);
    model.eta = num(p, "eta_scale") / es.eigenvalues().maxCoeff();
  }
  config_guard([&] {
    model.validate();
    return 0;
  });

  const AffineDynamics dyn = linearized_dynamics(model);
  const MixingRateReport mix = ntk_mixing_rate(model);
  const WeightVector wstar = ntk_fixed_point(model);
  const double fp_residual = (dyn.apply(wstar) - wstar).norm();
  const double interp_residual =
      (model.labels - model.features * (wstar - model.reference)).norm();

  const std::size_t steps = count(p, "steps");
  CsvTable orbit({"step", "distance", "ratio"});
  WeightVector w = model.reference;
  double prev = (w - wstar).norm();
  orbit.row().add(std::uint64_t{0}).add(prev).empty();
  double last_ratio = std::nan("");
  for (std::size_t t = 1; t <= steps; ++t) {
    w = dyn.apply(w);
    const double dist = (w - wstar).norm();
    last_ratio = prev > 0.0 ? dist / prev : std::nan("");
    orbit.row().add(std::uint64_t{t}).add(dist).add(last_ratio);
    prev = dist;
  }

  const auto modes = koopman_spectrum_linear(dyn.A, dyn.b);
  std::vector<WeightVector> probes;
  for (std::size_t k = 0; k < count(p, "koopman_probes"); ++k) {
    WeightVector v(dw);
    for (Eigen::Index j = 0; j < dw; ++j) v(j) = rng.normal();
    probes.push_back(std::move(v));
  }
  double koop_max = 0.0;
  CsvTable koop_csv({"mode_index", "eigenvalue_real", "eigenvalue_imag", "defined", "residual"});
  for (std::size_t i = 0; i < modes.size(); ++i) {
    auto row = koop_csv.row();
    row.add(std::uint64_t{i}).add(modes[i].eigenvalue.real()).add(modes[i].eigenvalue.imag()).add(modes[i].defined);
    if (!modes[i].defined) {
      row.empty();
      continue;
    }
    double worst = 0.0;
    for (const auto& v : probes) {
      const auto fv = modes[i].evaluate(v);
      const auto fa = modes[i].evaluate(dyn.apply(v));
      worst = std::max(worst, std::abs(fa - modes[i].eigenvalue * fv) / (1.0 + std::abs(fv)));
    }
    koop_max = std::max(koop_max, worst);
    row.add(worst);
  }

  LinearizedModel perturbed = model;
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(count(p, "perturb_index"), static_cast<std::size_t>(n - 1)));
  perturbed.features.row(k) = feature_row();
  perturbed.labels(k) = num(p, "label_scale") * rng.normal();
  const WeylReport weyl = weyl_stability_bound(model, perturbed);

  Json mixing{{"rate", mix.rate},
              {"theta_min", mix.theta_min},
              {"theta_max", mix.theta_max},
              {"row_space_radius", mix.row_space_radius},
              {"full_spectral_radius", mix.full_spectral_radius},
              {"converges", mix.converges}};
  if (mix.warning) mixing["warning"] = *mix.warning;
  ExperimentResult r;
  r.result = Json{{"n", n},
                  {"d_w", dw},
                  {"eta", model.eta},
                  {"ridge", model.ridge},
                  {"mixing", mixing},
                  {"fixed_point_residual", fp_residual},
                  {"interpolation_residual", interp_residual},
                  {"final_contraction_ratio", last_ratio},
                  {"koopman_max_residual", koop_max},
                  {"weyl", to_json(weyl)}};
  r.files.push_back({"ntk.json", render_json(r.result)});
  r.files.push_back({"ntk_orbit.csv", orbit.render()});
  r.files.push_back({"koopman.csv", koop_csv.render()});
  return r;
}

ExperimentResult run_bound(const ExperimentConfig& c, std::size_t) {
  const Json& p = c.params;
  return config_guard([&] {
    const BoundReport b = theorem1_bound(num(p, "empirical_risk"), num(p, "beta"), count(p, "n"),
                                         num(p, "L"), num(p, "delta"));
    const double t2 = theorem2_bound(num(p, "L_D"), num(p, "lambda"), count(p, "n"), count(p, "m"),
                                     num(p, "eta"), num(p, "C"));
    const double transfer = ntk_stability_transfer(num(p, "beta"), num(p, "C_Lip"), num(p, "epsilon"));
    ExperimentResult r;
    r.result = Json{{"theorem1", to_json(b)},
                    {"theorem2", Json{{"value", t2},
                                      {"label", "order bound"},
                                      {"L_D", num(p, "L_D")},
                                      {"lambda", num(p, "lambda")},
                                      {"m", count(p, "m")},
                                      {"eta", num(p, "eta")},
                                      {"C", num(p, "C")}}},
                    {"ntk_transfer", Json{{"value", transfer},
                                          {"C_Lip", num(p, "C_Lip")},
                                          {"epsilon", num(p, "epsilon")}}}};
    r.files.push_back({"bound.json", render_json(r.result)});
    return r;
  });
}

}  // namespace

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const auto& [kind, n] : kind_table()) {
    if (n == name) return kind;
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, n] : kind_table()) {
    if (k == kind) return n;
  }
  return "unknown";
}

const std::vector<std::string_view>& experiment_kind_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> v;
    for (const auto& [k, n] : kind_table()) v.push_back(n);
    return v;
  }();
  return names;
}

const std::vector<std::string_view>& preset_names() {
  static const std::vector<std::string_view> names = {"desk", "paper-protocol"};
  return names;
}

Json default_params(ExperimentKind kind, std::string_view preset) {
  Json p = Json::object();
  switch (kind) {
    case ExperimentKind::Bifurcate:
      p["s"] = 1.0;
      p["eta_min"] = 0.5;
      p["eta_max"] = 3.6;
      p["eta_step"] = 0.05;
      p["n_inits"] = 100u;
      p["runup"] = 5000u;
      p["keep"] = 64u;
      p["tol"] = 1e-6;
      p["divergence_radius"] = 1e6;
      break;
    case ExperimentKind::Lyapunov:
      p["map"] = "gmap";
      p["s"] = 4.0;
      p["eta_min"] = 0.5;
      p["eta_max"] = 3.6;
      p["eta_step"] = 0.05;
      p["n_inits"] = 4u;
      p["steps"] = 1000000u;
      p["runup"] = 1000u;
      p["divergence_radius"] = 1e6;
      break;
    case ExperimentKind::Orbit:
      add_task_defaults(p);
      p["n_inits"] = 1u;
      break;
    case ExperimentKind::Autocorr:
      add_task_defaults(p);
      p["n_inits"] = 4u;
      p["observable"] = "test_loss";
      p["tau_max"] = 50u;
      p["fit_first"] = 1u;
      p["fit_last"] = 20u;
      break;
    case ExperimentKind::Sas:
      add_task_defaults(p);
      add_sas_defaults(p);
      break;
    case ExperimentKind::Ulam:
      add_task_defaults(p);
      p["source"] = "orbit";
      p["observable"] = "test_loss";
      p["bins"] = 64u;
      p["margin"] = 0.05;
      p["smoothing"] = 0.0;
      p["tv_steps"] = 50u;
      p["chain"] = Json::array({Json::array({0.9, 0.1}), Json::array({0.2, 0.8})});
      p["chain_steps"] = 100000u;
      break;
    case ExperimentKind::Ntk:
      p["n"] = 10u;
      p["d_w"] = 50u;
      p["eta_scale"] = 0.5;
      p["ridge"] = 0.0;
      p["reference"] = "random";
      p["label_scale"] = 1.0;
      p["steps"] = 300u;
      p["koopman_probes"] = 100u;
      p["perturb_index"] = 0u;
      break;
    case ExperimentKind::Bound:
      p["empirical_risk"] = 0.0;
      p["beta"] = 0.0;
      p["L"] = 1.0;
      p["n"] = 100u;
      p["delta"] = 0.05;
      p["L_D"] = 1.0;
      p["lambda"] = 0.5;
      p["m"] = 10u;
      p["eta"] = 0.01;
      p["C"] = 1.0;
      p["C_Lip"] = 0.0;
      p["epsilon"] = 0.0;
      break;
    case ExperimentKind::CorruptSweep:
      add_task_defaults(p);
      add_sas_defaults(p);
      // Capacity-limited regression on the corrupted labels: with the logistic
      // loss the separable p = 0 task drifts (weights grow) and never settles.
      p["n"] = 256u;
      p["hidden"] = 4u;
      p["loss"] = "squared";
      p["batch_size"] = 16u;
      p["ps"] = Json::array({0.0, 0.25, 0.5});
      p["gap_inits"] = 4u;
      p["tau_min"] = 1u;
      p["tau_max"] = 20u;
      break;
  }
  if (preset == "paper-protocol") {
    if (p.contains("pairs")) p["pairs"] = 45u;
    if (p.contains("runup") && p.contains("window")) {
      p["runup"] = 200u;
      p["window"] = 1200u;
    }
    if (p.contains("momentum")) {
      p["momentum"] = 0.9;
      p["eta"] = 0.01;
    }
  } else if (preset != "desk") {
    throw ConfigError("unknown preset '" + std::string(preset) + "'");
  }
  return p;
}

ExperimentConfig parse_config(ExperimentKind kind, const ConfigSources& sources) {
  Json doc = Json::object();
  if (sources.file) {
    const std::string text = read_text_file(*sources.file);
    try {
      doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      std::size_t column = 0;
      const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, column);
      throw ConfigError(sources.file->string() + ":" + std::to_string(line) + ":" +
                        std::to_string(column) + ": invalid JSON: " + e.what());
    }
  }
  std::vector<std::pair<std::string, Json>> overrides;
  for (const auto& [key, raw] : sources.overrides) {
    overrides.emplace_back(key, parse_override_value(raw));
  }
  Meta explicit_meta;
  explicit_meta.seed = sources.seed;
  explicit_meta.out = sources.out;
  explicit_meta.workers = sources.workers;
  explicit_meta.preset = sources.preset;
  return resolve(kind, doc, overrides, explicit_meta);
}

ExperimentConfig parse_config_json(const Json& doc, std::optional<ExperimentKind> kind) {
  if (!kind) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
      throw ConfigError("config needs a 'kind'");
    }
    kind = parse_experiment_kind(doc["kind"].get<std::string>());
  }
  return resolve(*kind, doc, {}, {});
}

Json config_to_json(const ExperimentConfig& config) {
  Json j{{"kind", std::string(to_string(config.kind))},
         {"seed", config.seed},
         {"out", config.out},
         {"workers", config.workers},
         {"preset", config.preset}};
  for (const auto& [key, value] : config.params.items()) j[key] = value;
  return j;
}

ExperimentResult execute_experiment(const ExperimentConfig& config) {
  const std::size_t workers = config.workers == 0 ? default_worker_count() : config.workers;
  ExperimentResult r;
  switch (config.kind) {
    case ExperimentKind::Bifurcate: r = run_bifurcate(config, workers); break;
    case ExperimentKind::Lyapunov: r = run_lyapunov(config, workers); break;
    case ExperimentKind::Orbit: r = run_orbit_kind(config, workers); break;
    case ExperimentKind::Autocorr: r = run_autocorr(config, workers); break;
    case ExperimentKind::Sas: r = run_sas(config, workers); break;
    case ExperimentKind::Ulam: r = run_ulam(config, workers); break;
    case ExperimentKind::Ntk: r = run_ntk(config, workers); break;
    case ExperimentKind::Bound: r = run_bound(config, workers); break;
    case ExperimentKind::CorruptSweep: r = run_corrupt_sweep(config, workers); break;
  }
  // result.json leads the file list so every kind has the same entry point.
  r.files.insert(r.files.begin(), OutputFile{"result.json", render_json(r.result)});
  return r;
}

Json to_json(const RunSummary& summary) {
  Json files = Json::array();
  for (const auto& f : summary.files) {
    files.push_back(Json{{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  }
  Json j{{"version", summary.version},
         {"config", summary.config},
         {"wall_seconds", summary.wall_seconds},
         {"exit_code", summary.exit_code},
         {"status", summary.exit_code == 0 ? "ok" : "error"},
         {"files", std::move(files)}};
  if (summary.error_type) {
    j["error"] = Json{{"type", *summary.error_type}, {"message", summary.error_message.value_or("")}};
  }
  return j;
}

std::vector<ManifestEntry> emit_outputs(const ExperimentResult& result,
                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<ManifestEntry> manifest;
  for (const auto& f : result.files) {
    write_text_file(dir / f.name, f.content);
    manifest.push_back({f.name, f.content.size(), sha256_hex(f.content)});
  }
  return manifest;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const IoError*>(&error)) return 1;
  if (dynamic_cast<const DivergenceError*>(&error)) return 3;
  return 2;
}

namespace {

std::string error_type_name(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const DivergenceError*>(&e)) return "DivergenceError";
  if (dynamic_cast<const SingularityError*>(&e)) return "SingularityError";
  if (dynamic_cast<const InsufficientDataError*>(&e)) return "InsufficientDataError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const ParameterError*>(&e)) return "ParameterError";
  return "Error";
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
  RunSummary summary;
  summary.config = config_to_json(config);
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out);
  try {
    const ExperimentResult result = execute_experiment(config);
    summary.files = emit_outputs(result, dir);
    if (result.divergence_dominated) {
      summary.exit_code = 3;
      summary.error_type = "DivergenceError";
      summary.error_message = "every orbit of the run diverged";
    }
  } catch (const std::exception& e) {
    summary.exit_code = exit_code_for(e);
    summary.error_type = error_type_name(e);
    summary.error_message = e.what();
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    write_text_file(dir / "summary.json", render_json(to_json(summary)));
  } catch (const IoError& e) {
    if (summary.exit_code == 0) {
      summary.exit_code = 1;
      summary.error_type = "IoError";
      summary.error_message = e.what();
    }
  }
  return summary;
}

}  // namespace ergostab

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergostab/ergodic.hpp"
#include "ergostab/error.hpp"
#include "ergostab/experiment.hpp"
#include "ergostab/linear_models.hpp"
#include "ergostab/markov.hpp"
#include "ergostab/quadratic_map.hpp"
#include "ergostab/stability.hpp"

namespace py = pybind11;
using namespace ergostab;

namespace {

LinearizedModel make_model(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                           double eta, std::optional<Eigen::VectorXd> reference, double ridge) {
  LinearizedModel m{features, labels,
                    reference ? *reference : Eigen::VectorXd::Zero(features.cols()), eta, ridge};
  m.validate();
  return m;
}

py::dict bound_dict(const BoundReport& b) {
  py::dict d;
  d["empirical_risk"] = b.empirical_risk;
  d["beta"] = b.beta;
  d["L"] = b.L;
  d["n"] = b.n;
  d["delta"] = b.delta;
  d["stability_term"] = b.stability_term;
  d["concentration_term"] = b.concentration_term;
  d["bound"] = b.bound;
  return d;
}

// Flat config document: meta keys plus parameter overrides.
ExperimentConfig config_from(const std::string& kind, const std::string& params_json,
                             std::uint64_t seed, std::size_t workers, const std::string& preset,
                             const std::string& out) {
  Json doc = Json::parse(params_json.empty() ? "{}" : params_json);
  doc["kind"] = kind;
  doc["seed"] = seed;
  doc["workers"] = workers;
  doc["preset"] = preset;
  doc["out"] = out;
  return parse_config_json(doc);
}

}  // namespace

PYBIND11_MODULE(_ergostab, m) {
  m.doc() = "Ergodic dynamics and stability estimators for fixed-step gradient methods";
  m.attr("__version__") = std::string(kLibraryVersion);

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", error.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", error.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  // landscapes
  m.def("gmap_eval", &gmap_eval, py::arg("s"), py::arg("w"));
  m.def("gmap_derivative", &gmap_derivative, py::arg("s"), py::arg("w"));
  m.def("gmap_loss", &gmap_loss, py::arg("s"), py::arg("w"));
  m.def("gmap_grad", &gmap_grad, py::arg("s"), py::arg("w"));
  m.def("gmap_second_derivative", &gmap_second_derivative, py::arg("s"), py::arg("w"));
  m.def("gmap_sharpness", &gmap_sharpness, py::arg("s"), py::arg("w"));

  m.def(
      "linearized_dynamics",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double eta,
         std::optional<Eigen::VectorXd> reference) {
        const AffineDynamics d = linearized_dynamics(make_model(features, labels, eta, reference, 0.0));
        return py::make_tuple(d.A, d.b);
      },
      py::arg("features"), py::arg("labels"), py::arg("eta"), py::arg("reference") = py::none());
  m.def(
      "ntk_fixed_point",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
         std::optional<Eigen::VectorXd> reference, double ridge) {
        return ntk_fixed_point(make_model(features, labels, 0.1, reference, ridge));
      },
      py::arg("features"), py::arg("labels"), py::arg("reference") = py::none(),
      py::arg("ridge") = 0.0);
  m.def(
      "ntk_mixing_rate",
      [](const Eigen::MatrixXd& features, double eta) {
        const Eigen::VectorXd y = Eigen::VectorXd::Zero(features.rows());
        const MixingRateReport r = ntk_mixing_rate(make_model(features, y, eta, std::nullopt, 0.0));
        py::dict d;
        d["rate"] = r.rate;
        d["theta_min"] = r.theta_min;
        d["theta_max"] = r.theta_max;
        d["row_space_radius"] = r.row_space_radius;
        d["full_spectral_radius"] = r.full_spectral_radius;
        d["converges"] = r.converges;
        d["warning"] = r.warning;
        return d;
      },
      py::arg("features"), py::arg("eta"));

  // ergodic
  m.def(
      "time_average",
      [](const std::vector<double>& s, std::size_t runup) { return time_average(s, runup).value; },
      py::arg("series"), py::arg("runup") = 0);
  m.def(
      "lyapunov_1d",
      [](const std::function<double(double)>& derivative, double w0,
         const std::function<double(double)>& evolve, std::size_t steps, std::size_t runup) {
        return lyapunov_1d(derivative, w0, evolve, steps, runup).value;
      },
      py::arg("map_derivative"), py::arg("w0"), py::arg("evolve"), py::arg("steps"),
      py::arg("runup") = 0);
  m.def(
      "lyapunov_gd",
      [](double s, double eta, double w0, std::size_t steps, std::size_t runup) {
        const QuadraticMapLoss l(s);
        return lyapunov_1d([&](double w) { return l.gd_map_derivative(eta, w); }, w0,
                           [&](double w) { return l.gd_map(eta, w); }, steps, runup)
            .value;
      },
      "Lyapunov exponent of GD on l_s from w0.", py::arg("s"), py::arg("eta"), py::arg("w0"),
      py::arg("steps"), py::arg("runup") = 0);
  m.def(
      "detect_period",
      [](const std::vector<double>& samples, double tol, std::size_t max_period) {
        return detect_period(samples, tol, max_period);
      },
      py::arg("samples"), py::arg("tol") = 1e-6, py::arg("max_period") = 0);
  m.def(
      "bifurcation_scan",
      [](double s, const std::vector<double>& eta_grid, std::size_t n_inits, std::size_t runup,
         std::size_t keep, double tol, std::uint64_t seed, std::size_t workers) {
        BifurcationOptions opt;
        opt.n_inits = n_inits;
        opt.runup = runup;
        opt.keep = keep;
        opt.tol = tol;
        opt.master_seed = seed;
        opt.workers = workers;
        const BifurcationScan scan = bifurcation_scan(QuadraticMapLoss(s), eta_grid, opt);
        py::list cols;
        for (const auto& c : scan.columns) {
          py::dict d;
          d["eta"] = c.eta;
          d["bounded"] = c.bounded;
          d["diverged"] = c.diverged;
          d["period"] = c.period;
          d["any_aperiodic"] = c.any_aperiodic;
          cols.append(d);
        }
        return cols;
      },
      py::arg("s"), py::arg("eta_grid"), py::arg("n_inits") = 100, py::arg("runup") = 5000,
      py::arg("keep") = 64, py::arg("tol") = 1e-6, py::arg("seed") = 0, py::arg("workers") = 1);
  m.def(
      "autocorrelation",
      [](const std::vector<double>& s, std::size_t runup, std::size_t tau_max) {
        const AutocorrSeries a = autocorrelation(s, runup, tau_max);
        return py::make_tuple(a.values, a.guard);
      },
      "Returns (C(0..tau_max), guard_flag).", py::arg("series"), py::arg("runup") = 0,
      py::arg("tau_max") = 20);
  m.def(
      "mixing_rate_fit",
      [](const std::vector<double>& decay, std::size_t first, std::size_t last) {
        return mixing_rate_fit(decay, first, last).rate;
      },
      py::arg("decay"), py::arg("first_lag"), py::arg("last_lag"));

  // markov
  m.def(
      "ulam_transition",
      [](const std::vector<double>& s, std::size_t runup, std::size_t bins, double margin,
         double smoothing) {
        return ulam_transition(s, runup, LossPartition::fit(s, runup, bins, margin), smoothing)
            .probabilities;
      },
      py::arg("series"), py::arg("runup") = 0, py::arg("bins") = 64, py::arg("margin") = 0.05,
      py::arg("smoothing") = 0.0);
  m.def(
      "spectral_gap",
      [](const Eigen::MatrixXd& P) {
        const SpectralReport r = spectral_gap(P);
        py::dict d;
        d["lambda1"] = r.lambda1;
        d["lambda2"] = r.lambda2;
        d["gap"] = r.gap;
        d["moduli"] = r.moduli;
        d["stationary"] = r.stationary;
        return d;
      },
      py::arg("P"));
  m.def(
      "tv_convergence_curve",
      [](const Eigen::MatrixXd& P, const Eigen::VectorXd& initial, std::size_t steps) {
        return tv_convergence_curve(P, initial, steps);
      },
      py::arg("P"), py::arg("initial"), py::arg("steps"));
  m.def(
      "koopman_spectrum_linear",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
        py::list out;
        for (const auto& mode : koopman_spectrum_linear(A, b)) {
          out.append(py::make_tuple(mode.eigenvalue, Eigen::VectorXcd(mode.left_vector), mode.offset,
                                    mode.defined));
        }
        return out;
      },
      "List of (eigenvalue, left_vector, offset, defined).", py::arg("A"), py::arg("b"));

  // stability
  m.def(
      "theorem1_bound",
      [](double emp, double beta, std::size_t n, double L, double delta) {
        return bound_dict(theorem1_bound(emp, beta, n, L, delta));
      },
      py::arg("empirical_risk"), py::arg("beta"), py::arg("n"), py::arg("L"), py::arg("delta"));
  m.def("theorem2_bound", &theorem2_bound, py::arg("L_D"), py::arg("lam"), py::arg("n"),
        py::arg("m"), py::arg("eta"), py::arg("C") = 1.0);
  m.def("ntk_stability_transfer", &ntk_stability_transfer, py::arg("beta"), py::arg("C_Lip"),
        py::arg("epsilon"));
  m.def(
      "weyl_stability_bound",
      [](const Eigen::MatrixXd& phi_base, const Eigen::MatrixXd& phi_perturbed) {
        const Eigen::VectorXd y = Eigen::VectorXd::Zero(phi_base.rows());
        const WeylReport r = weyl_stability_bound(make_model(phi_base, y, 0.1, std::nullopt, 0.0),
                                                  make_model(phi_perturbed, y, 0.1, std::nullopt, 0.0));
        py::dict d;
        d["inverse_difference_norm"] = r.inverse_difference_norm;
        d["inverse_theta_min_base"] = r.inverse_theta_min_base;
        d["inverse_theta_min_perturbed"] = r.inverse_theta_min_perturbed;
        d["kernel_difference_norm"] = r.kernel_difference_norm;
        d["residuals"] = r.residuals;
        d["max_slack"] = r.max_slack;
        return d;
      },
      py::arg("phi_base"), py::arg("phi_perturbed"));

  // experiments
  m.def("experiment_kinds", [] {
    std::vector<std::string> out;
    for (auto k : experiment_kind_names()) out.emplace_back(k);
    return out;
  });
  m.def(
      "default_params",
      [](const std::string& kind, const std::string& preset) {
        return default_params(parse_experiment_kind(kind), preset).dump();
      },
      py::arg("kind"), py::arg("preset") = "desk");
  m.def(
      "execute",
      [](const std::string& kind, const std::string& params_json, std::uint64_t seed,
         std::size_t workers, const std::string& preset) {
        const ExperimentConfig c = config_from(kind, params_json, seed, workers, preset, "out");
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = execute_experiment(c);
        }
        py::dict files;
        for (const auto& f : r.files) files[py::str(f.name)] = py::bytes(f.content);
        return py::make_tuple(r.result.dump(), files, r.divergence_dominated);
      },
      "Runs an experiment in memory: (result JSON text, {name: bytes}, divergence_dominated).",
      py::arg("kind"), py::arg("params_json") = "{}", py::arg("seed") = 0, py::arg("workers") = 1,
      py::arg("preset") = "desk");
  m.def(
      "run",
      [](const std::string& kind, const std::string& params_json, std::uint64_t seed,
         std::size_t workers, const std::string& preset, const std::string& out) {
        const ExperimentConfig c = config_from(kind, params_json, seed, workers, preset, out);
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run_experiment(c);
        }
        return py::make_tuple(s.exit_code, to_json(s).dump());
      },
      "Runs an experiment and writes its files: (exit_code, summary JSON text).",
      py::arg("kind"), py::arg("params_json") = "{}", py::arg("seed") = 0, py::arg("workers") = 1,
      py::arg("preset") = "desk", py::arg("out") = "out");
}

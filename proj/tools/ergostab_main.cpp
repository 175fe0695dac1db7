// Command-line runner: ergostab <kind> [--config FILE] [--set key=value]...
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergostab/error.hpp"
#include "ergostab/experiment.hpp"

namespace {

// Leftover "--key value" / "--key=value" tokens become parameter overrides.
std::vector<std::pair<std::string, std::string>> extra_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) {
      throw ergostab::ConfigError("unexpected argument '" + tok + "'");
    }
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(body, extras[++i]);
    } else {
      throw ergostab::ConfigError("option '" + tok + "' needs a value");
    }
  }
  return out;
}

int fail(const std::string& type, const std::string& message, int code) {
  ergostab::Json err{{"status", "error"}, {"exit_code", code}, {"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodic statistics, stability and mixing of gradient-descent dynamics"};
  app.allow_extras();

  std::string kind_name;
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 0;
  std::string preset;
  bool print_config = false;

  std::string kinds;
  for (auto k : ergostab::experiment_kind_names()) kinds += (kinds.empty() ? "" : "|") + std::string(k);
  app.add_option("kind", kind_name, "Experiment kind (" + kinds + ")")->required();
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Parameter override key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads (default: ERGOSTAB_WORKERS or all cores)");
  auto* preset_opt = app.add_option("--preset", preset, "Parameter preset (desk|paper-protocol)");
  app.add_flag("--print-config", print_config, "Print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  ergostab::ExperimentConfig config;
  try {
    const auto kind = ergostab::parse_experiment_kind(kind_name);
    ergostab::ConfigSources sources;
    if (!config_path.empty()) sources.file = config_path;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ergostab::ConfigError("--set expects key=value, got '" + s + "'");
      }
      sources.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (auto& kv : extra_overrides(app.remaining())) sources.overrides.push_back(std::move(kv));
    if (*seed_opt) sources.seed = seed;
    if (*out_opt) sources.out = out;
    if (*workers_opt) sources.workers = workers;
    if (*preset_opt) sources.preset = preset;
    config = ergostab::parse_config(kind, sources);
  } catch (const ergostab::Error& e) {
    return fail("ConfigError", e.what(), 1);
  }

  if (print_config) {
    std::cout << ergostab::render_json(ergostab::config_to_json(config));
    return 0;
  }

  const ergostab::RunSummary summary = ergostab::run_experiment(config);
  if (summary.exit_code != 0) {
    return fail(summary.error_type.value_or("Error"), summary.error_message.value_or(""),
                summary.exit_code);
  }
  std::cerr << "ergostab " << kind_name << ": wrote " << summary.files.size() + 1 << " files to "
            << config.out << " in " << summary.wall_seconds << " s\n";
  return 0;
}

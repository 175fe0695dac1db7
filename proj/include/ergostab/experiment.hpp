#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergostab/io.hpp"

namespace ergostab {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

enum class ExperimentKind {
  Bifurcate,
  Lyapunov,
  Orbit,
  Autocorr,
  Sas,
  Ulam,
  Ntk,
  Bound,
  CorruptSweep,
};

/// Throws ConfigError for an unknown name.
ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(ExperimentKind kind);
const std::vector<std::string_view>& experiment_kind_names();

/// Named parameter presets: "desk" (default) and "paper-protocol".
const std::vector<std::string_view>& preset_names();

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Bound;
  /// Every parameter of the kind, defaults applied.
  Json params;
  std::uint64_t seed = 0;
  std::string out = "out";
  /// 0 means ERGOSTAB_WORKERS, else hardware concurrency.
  std::size_t workers = 0;
  std::string preset = "desk";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Full default parameter block for a kind under a preset.
Json default_params(ExperimentKind kind, std::string_view preset = "desk");

/// Inputs to parse_config in increasing order of precedence: preset defaults,
/// then the file, then `overrides`, then the explicit seed/out/workers/preset.
struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> preset;
};

/// Resolves a config. The file is a flat JSON object whose keys are either the
/// meta keys (kind, seed, out, workers, preset) or parameters of the kind.
/// Unknown keys and type mismatches raise ConfigError naming the key; JSON
/// syntax errors report line and column.
ExperimentConfig parse_config(ExperimentKind kind, const ConfigSources& sources);
/// Same rules for an in-memory document; `kind` defaults to doc["kind"].
ExperimentConfig parse_config_json(const Json& doc,
                                   std::optional<ExperimentKind> kind = std::nullopt);
/// Flat document accepted by parse_config_json.
Json config_to_json(const ExperimentConfig& config);

struct OutputFile {
  std::string name;
  std::string content;
};

struct ExperimentResult {
  std::vector<OutputFile> files;
  Json result;
  /// Set when every orbit of the run diverged (exit code 3).
  bool divergence_dominated = false;
};

/// Runs the experiment without touching the filesystem.
ExperimentResult execute_experiment(const ExperimentConfig& config);

struct ManifestEntry {
  std::string path;
  std::size_t bytes = 0;
  std::string sha256;
};

struct RunSummary {
  Json config;
  double wall_seconds = 0.0;
  std::vector<ManifestEntry> files;
  std::string version{kLibraryVersion};
  int exit_code = 0;
  std::optional<std::string> error_type;
  std::optional<std::string> error_message;
};

Json to_json(const RunSummary& summary);

/// Writes the result files into `dir` (created if needed) and returns their
/// manifest in emission order.
std::vector<ManifestEntry> emit_outputs(const ExperimentResult& result,
                                        const std::filesystem::path& dir);

/// Executes, emits outputs and writes summary.json. Errors are captured in the
/// summary and mapped to exit codes: 1 config/IO, 2 numeric, 3 divergence.
RunSummary run_experiment(const ExperimentConfig& config);

int exit_code_for(const std::exception& error);

}  // namespace ergostab

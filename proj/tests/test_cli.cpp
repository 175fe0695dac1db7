#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "ergostab/error.hpp"
#include "ergostab/experiment.hpp"
#include "ergostab/io.hpp"

using namespace ergostab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ergostab_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(ExperimentKind kind, std::size_t workers) {
  ConfigSources src;
  src.seed = 3;
  src.workers = workers;
  const Json defaults = default_params(kind);
  auto set = [&](const char* key, const char* value) {
    if (defaults.contains(key)) src.overrides.emplace_back(key, value);
  };
  set("runup", "20");
  set("window", "60");
  set("pairs", "3");
  set("probes", "8");
  set("n", "16");
  set("heldout", "32");
  set("gap_inits", "2");
  set("n_inits", "3");
  set("steps", "2000");
  set("chain_steps", "2000");
  set("tau_max", "10");
  set("fit_last", "8");
  if (kind == ExperimentKind::Bifurcate) {
    src.overrides.emplace_back("eta_min", "2.8");
    src.overrides.emplace_back("eta_max", "3.4");
    src.overrides.emplace_back("eta_step", "0.2");
  }
  if (kind == ExperimentKind::Lyapunov) src.overrides.emplace_back("eta_step", "0.5");
  return parse_config(kind, src);
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (auto name : experiment_kind_names()) CHECK(to_string(parse_experiment_kind(name)) == name);
  CHECK_THROWS_AS(parse_experiment_kind("train"), ConfigError);
}

TEST_CASE("empty bound config gives the defaults") {
  const ExperimentConfig c = parse_config_json(Json{{"kind", "bound"}});
  CHECK(c.params.at("n") == 100);
  CHECK(c.params.at("L") == 1.0);
  CHECK(c.params.at("delta") == 0.05);
  CHECK(c.params.at("beta") == 0.0);
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_config_json(Json{{"kind", "bound"}, {"etaa", 3}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("etaa") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_json(Json{{"kind", "bound"}, {"n", "many"}}), ConfigError);
  CHECK_THROWS_AS(parse_config_json(Json{{"kind", "nope"}}), ConfigError);
  ConfigSources src;
  src.preset = "huge";
  CHECK_THROWS_AS(parse_config(ExperimentKind::Sas, src), ConfigError);
}

TEST_CASE("config files: syntax errors carry a position") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  write_text_file(dir / "bad.json", "{\n  \"beta\": 0.1,\n  oops\n}\n");
  ConfigSources src;
  src.file = dir / "bad.json";
  try {
    parse_config(ExperimentKind::Bound, src);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  src.file = dir / "missing.json";
  CHECK_THROWS_AS(parse_config(ExperimentKind::Bound, src), Error);
}

TEST_CASE("config round trip and precedence") {
  const fs::path dir = scratch("cfg2");
  fs::create_directories(dir);
  write_text_file(dir / "c.json", R"({"kind": "sas", "eta": 0.02, "pairs": 4, "seed": 11})");
  ConfigSources src;
  src.file = dir / "c.json";
  src.overrides = {{"pairs", "6"}, {"statistic", "error"}};
  src.workers = 2;
  const ExperimentConfig c = parse_config(ExperimentKind::Sas, src);
  CHECK(c.params.at("eta") == 0.02);
  CHECK(c.params.at("pairs") == 6);
  CHECK(c.params.at("statistic") == "error");
  CHECK(c.seed == 11);
  CHECK(c.workers == 2);
  CHECK(parse_config_json(config_to_json(c)) == c);

  ConfigSources full;
  full.preset = "paper-protocol";
  const ExperimentConfig pc = parse_config(ExperimentKind::CorruptSweep, full);
  CHECK(pc.params.at("pairs") == 45);
  CHECK(pc.params.at("window") == 1200);
  CHECK(parse_config_json(config_to_json(pc)) == pc);
}

TEST_CASE("csv and json helpers") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");

  CsvTable empty({"lag", "C", "guard_flag"});
  CHECK(empty.render() == "lag,C,guard_flag\n");
  CsvTable t({"a", "b"});
  t.row().add(1).add(0.5);
  t.row().add(true);
  CHECK_THROWS_AS(t.render(), IoError);

  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("dataset json round trip") {
  const auto ds = make_dataset(12, 0.25, make_teacher(TeacherKind::Linear, 3, 4, 0.1), 8);
  const Json doc = Json::parse(render_json(to_json(ds)));
  CHECK(dataset_from_json(doc) == ds);
  CHECK_THROWS_AS(dataset_from_json(Json{{"metadata", 1}}), IoError);
}

TEST_CASE("every kind is deterministic across worker counts") {
  for (auto name : experiment_kind_names()) {
    const ExperimentKind kind = parse_experiment_kind(name);
    INFO("kind = " << name);
    const ExperimentResult a = execute_experiment(small_config(kind, 1));
    const ExperimentResult b = execute_experiment(small_config(kind, 8));
    REQUIRE(a.files.size() == b.files.size());
    CHECK_FALSE(a.files.empty());
    CHECK(a.files.front().name == "result.json");
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      CHECK(a.files[i].name == b.files[i].name);
      CHECK(a.files[i].content == b.files[i].content);
    }
  }
}

TEST_CASE("run_experiment writes a manifest") {
  ExperimentConfig c = small_config(ExperimentKind::Ulam, 1);
  c.out = scratch("run").string();
  const RunSummary s = run_experiment(c);
  CHECK(s.exit_code == 0);
  REQUIRE_FALSE(s.files.empty());
  for (const auto& f : s.files) {
    const std::string bytes = read_text_file(fs::path(c.out) / f.path);
    CHECK(bytes.size() == f.bytes);
    CHECK(sha256_hex(bytes) == f.sha256);
  }
  const Json summary = Json::parse(read_text_file(fs::path(c.out) / "summary.json"));
  CHECK(summary.at("status") == "ok");
  CHECK(parse_config_json(summary.at("config")) == c);
}

TEST_CASE("divergence dominated runs exit with 3") {
  ConfigSources src;
  src.overrides = {{"eta", "100.0"}, {"runup", "5"}, {"window", "10"}, {"n", "8"},
                   {"n_inits", "2"}, {"init_gain", "5.0"}, {"divergence_radius", "10.0"}};
  ExperimentConfig c = parse_config(ExperimentKind::Orbit, src);
  c.out = scratch("diverge").string();
  const RunSummary s = run_experiment(c);
  CHECK(s.exit_code == 3);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ConfigError("x")) == 1);
  CHECK(exit_code_for(IoError("x")) == 1);
  CHECK(exit_code_for(DivergenceError("x")) == 3);
  CHECK(exit_code_for(SingularityError("x")) == 2);
  CHECK(exit_code_for(InsufficientDataError("x")) == 2);
}

#ifdef ERGOSTAB_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(ERGOSTAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST_CASE("command line runner") {
  const fs::path out = scratch("cli");
  CHECK(run_cli("bound --out " + out.string()) == 0);
  const Json r = Json::parse(read_text_file(out / "result.json"));
  CHECK(std::abs(r.at("theorem1").at("bound_gap").get<double>() - 0.27162030314812390) < 1e-12);
  CHECK(run_cli("bound --etaa 3 --out " + out.string()) == 1);
  CHECK(run_cli("bound --set beta=0.01 --L 2 --out " + out.string()) == 0);
  const Json s = Json::parse(read_text_file(out / "summary.json"));
  CHECK(s.at("config").at("beta") == 0.01);
  CHECK(s.at("config").at("L") == 2.0);
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("ulam --print-config") == 0);
}
#endif

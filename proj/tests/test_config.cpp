#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "alarm_taxis/config.hpp"
#include "alarm_taxis/study.hpp"
#include "alarm_taxis/trajectory_io.hpp"

using namespace alarm_taxis;
namespace fs = std::filesystem;

namespace {

const char* const kMinimal = R"(grid.nx = 8
grid.ny = 8
grid.lx = 1
grid.ly = 1
params.xi = 0
params.d1 = 1
params.d2 = 1
params.d3 = 1
params.chi = 1
params.lambda1 = 1
params.lambda2 = 1
params.lambda3 = 1
params.mu1 = 1
params.mu2 = 1
params.mu3 = 1
params.a1 = 1
params.a2 = 1
params.a3 = 1
params.b1 = 1
params.b2 = 1
params.b3 = 1
solver.t_end = 0.5
)";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("alarm_taxis_test_config_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal file parses with defaults") {
  const RunConfig c = parse_config_text(kMinimal);
  CHECK(c.grid == GridSpec(8, 8, 1.0, 1.0));
  CHECK(c.solver.t_end == 0.5);
  CHECK(c.solver.regime == Regime::classical);
  CHECK(c.study == StudyType::single);
  CHECK(c.params.xi == 0.0);
}

TEST_CASE("negative xi is rejected") {
  std::string text = kMinimal;
  text.replace(text.find("params.xi = 0"), 13, "params.xi = -1");
  const std::string msg = error_of(text);
  CHECK(msg.find("xi") != std::string::npos);
  CHECK(msg.find(">= 0") != std::string::npos);
}

TEST_CASE("duplicate key names both lines") {
  const std::string msg = error_of(std::string(kMinimal) + "grid.nx = 16\n");
  CHECK(msg.find("test.cfg:23") != std::string::npos);
  CHECK(msg.find("grid.nx") != std::string::npos);
  CHECK(msg.find("line 1") != std::string::npos);
}

TEST_CASE("unknown and missing keys") {
  CHECK(error_of(std::string(kMinimal) + "solver.cfl = 0.3\n").find("unknown key 'solver.cfl'") != std::string::npos);
  std::string text = kMinimal;
  for (const char* key : {"params.mu2 = 1\n", "grid.ly = 1\n"}) text.erase(text.find(key), std::strlen(key));
  const std::string msg = error_of(text);
  CHECK(msg.find("params.mu2") != std::string::npos);
  CHECK(msg.find("grid.ly") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "no equals sign\n").find("test.cfg:23") != std::string::npos);
  CHECK_FALSE(error_of(std::string(kMinimal) + "grid.nx = 1\n").empty());
}

TEST_CASE("semantic checks name the key") {
  CHECK(error_of(std::string(kMinimal) + "solver.regime = regularized\n").find("eps") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "solver.regime = sideways\n").find("solver.regime") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "init.u = cos:1,2\n").find("init.u") != std::string::npos);
  CHECK_FALSE(error_of(std::string(kMinimal) + "solver.cfl_safety = 2\n").empty());
}

TEST_CASE("serialisation round trip") {
  for (const auto& name : preset_names()) {
    const RunConfig a = parse_config_text(preset_text(name), name);
    const std::string text = serialize_config(a);
    const RunConfig b = parse_config_text(text, name + " (round trip)");
    CHECK(serialize_config(b) == text);
    CHECK(b.grid == a.grid);
    CHECK(b.solver.t_end == a.solver.t_end);
    CHECK(b.solver.cfl_safety == a.solver.cfl_safety);
    CHECK(b.solver.eps == a.solver.eps);
    CHECK(b.study == a.study);
  }
}

TEST_CASE("shipped preset files match the built-in texts") {
  for (const auto& name : preset_names()) {
    const fs::path file = fs::path(ALARM_TAXIS_PRESET_DIR) / (name + ".cfg");
    REQUIRE_MESSAGE(fs::exists(file), file.string());
    CHECK(read_text(file) == preset_text(name));
    CHECK_NOTHROW(parse_config(file));
  }
  CHECK_THROWS_AS(preset_text("nope"), ConfigError);
}

TEST_CASE("file-based initial data must match the grid") {
  const fs::path dir = scratch("init");
  fs::create_directories(dir);
  write_field(dir / "u0.txt", Field(GridSpec(4, 4, 1.0, 1.0), 0.5), 0.0);
  std::ofstream(dir / "run.cfg") << kMinimal << "init.u = file:u0.txt\n";
  CHECK_THROWS_AS(build_initial_state(parse_config(dir / "run.cfg")), ConfigError);
  CHECK_THROWS_AS(parse_config(dir / "missing.cfg"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("single study with zero data: all-zero outputs and passing audits") {
  const fs::path dir = scratch("zero");
  RunConfig c = parse_config_text(std::string(kMinimal) + "output.dir = " + dir.string() + "\n");
  std::ostringstream log;
  StudyOptions opts;
  opts.log = &log;
  const StudyResult r = run_study(c, opts);
  CHECK(r.exit_code == kExitOk);
  const Trajectory t = read_trajectory(r.output_dir);
  for (const auto& s : t.snapshots) {
    CHECK(s.u == Field(c.grid, 0.0));
    CHECK(s.w == Field(c.grid, 0.0));
  }
  CHECK(r.summary_json.find("\"status\"") != std::string::npos);
  CHECK(audit_directory(r.output_dir, log) == kExitOk);

  // Byte-identical CSV on a rerun.
  const std::string first = read_text(r.output_dir / "timeseries.csv");
  run_study(c, opts);
  CHECK(read_text(r.output_dir / "timeseries.csv") == first);
  fs::remove_all(dir);
}

TEST_CASE("ode_compare study meets the oracle tolerance") {
  const fs::path dir = scratch("ode");
  RunConfig c = parse_config_text(preset_text("ode_compare"));
  StudyOptions opts;
  opts.quiet = true;
  opts.output_override = dir;
  const StudyResult r = run_study(c, opts);
  CHECK(r.exit_code == kExitOk);
  CHECK(r.summary_json.find("max_deviation") != std::string::npos);
  fs::remove_all(dir);
}

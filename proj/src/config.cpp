#include "alarm_taxis/config.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "alarm_taxis/trajectory_io.hpp"
#include "alarm_taxis/weakform.hpp"

namespace alarm_taxis {

namespace fs = std::filesystem;

std::string to_string(StudyType s) {
  switch (s) {
    case StudyType::single: return "single";
    case StudyType::eps_ladder: return "eps_ladder";
    case StudyType::grid_ladder: return "grid_ladder";
    case StudyType::mms: return "mms";
    case StudyType::ode_compare: return "ode_compare";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[noreturn]] void fail(const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); }

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) fail(key, "expected a finite number, got '" + v + "'");
  return x;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    fail(key, "expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(std::stoull(v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

InitSpec parse_init(const std::string& key, const std::string& v, const fs::path& base_dir) {
  InitSpec s;
  s.text = v;
  const auto colon = v.find(':');
  const std::string kind = trim(v.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : trim(v.substr(colon + 1));

  if (kind == "zero" && colon == std::string::npos) {
    s.args = {0.0};
    return s;
  }
  if (kind == "file") {
    s.kind = InitSpec::Kind::file;
    s.file = fs::path(rest).is_absolute() ? fs::path(rest) : base_dir / rest;
    if (rest.empty() || !fs::exists(s.file)) fail(key, "initial-data file '" + s.file.string() + "' does not exist");
    s.text = "file:" + fs::absolute(s.file).lexically_normal().string();
    s.args.clear();
    return s;
  }

  std::vector<double> args;
  for (const auto& a : split_list(rest)) args.push_back(to_double(key, a));
  if (kind == "const") {
    if (args.size() != 1) fail(key, "const takes one value (const:c)");
    if (args[0] < 0.0) fail(key, "densities must be nonnegative");
  } else if (kind == "cos") {
    s.kind = InitSpec::Kind::cosine;
    if (args.size() != 4) fail(key, "cos takes base,amp,kx,ky");
    if (args[0] - std::abs(args[1]) < 0.0) fail(key, "cos profile would be negative (need base >= |amp|)");
  } else if (kind == "bump") {
    s.kind = InitSpec::Kind::bump;
    if (args.size() != 5) fail(key, "bump takes base,amp,cx,cy,r");
    if (args[0] < 0.0 || args[1] < 0.0) fail(key, "bump base and amplitude must be nonnegative");
    if (!(args[4] > 0.0)) fail(key, "bump radius must be > 0");
  } else {
    fail(key, "unknown profile '" + kind + "' (expected const, cos, bump, file or zero)");
  }
  s.args = std::move(args);
  return s;
}

const std::vector<std::string>& mandatory_keys() {
  static const std::vector<std::string> keys = {
      "grid.nx",        "grid.ny",        "grid.lx",        "grid.ly",     "params.d1",   "params.d2",
      "params.d3",      "params.xi",      "params.chi",     "params.lambda1", "params.lambda2",
      "params.lambda3", "params.mu1",     "params.mu2",     "params.mu3",  "params.a1",   "params.a2",
      "params.a3",      "params.b1",      "params.b2",      "params.b3",   "solver.t_end"};
  return keys;
}

std::vector<std::pair<std::string, double Params::*>> param_keys() {
  return {{"params.d1", &Params::d1},           {"params.d2", &Params::d2},
          {"params.d3", &Params::d3},           {"params.xi", &Params::xi},
          {"params.chi", &Params::chi},         {"params.lambda1", &Params::lambda1},
          {"params.lambda2", &Params::lambda2}, {"params.lambda3", &Params::lambda3},
          {"params.mu1", &Params::mu1},         {"params.mu2", &Params::mu2},
          {"params.mu3", &Params::mu3},         {"params.a1", &Params::a1},
          {"params.a2", &Params::a2},           {"params.a3", &Params::a3},
          {"params.b1", &Params::b1},           {"params.b2", &Params::b2},
          {"params.b3", &Params::b3}};
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source, const fs::path& base_dir) {
  // Pass 1: syntax, duplicates.
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = source + ":" + std::to_string(lineno);
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(where + ": empty key");
      if (auto it = entries.find(key); it != entries.end())
        throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                          std::to_string(it->second.second) + ")");
      entries[key] = {value, lineno};
    }
  }

  RunConfig cfg;
  std::size_t nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  std::optional<std::string> regime_text;
  std::optional<double> snapshot_interval;

  std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
  setters["grid.nx"] = [&](auto& k, auto& v) { nx = to_count(k, v); };
  setters["grid.ny"] = [&](auto& k, auto& v) { ny = to_count(k, v); };
  setters["grid.lx"] = [&](auto& k, auto& v) { lx = to_double(k, v); };
  setters["grid.ly"] = [&](auto& k, auto& v) { ly = to_double(k, v); };
  for (const auto& [key, member] : param_keys()) {
    auto m = member;
    setters[key] = [&cfg, m](auto& k, auto& v) { cfg.params.*m = to_double(k, v); };
  }
  setters["solver.t_end"] = [&](auto& k, auto& v) { cfg.solver.t_end = to_double(k, v); };
  setters["solver.cfl_safety"] = [&](auto& k, auto& v) { cfg.solver.cfl_safety = to_double(k, v); };
  setters["solver.regime"] = [&](auto&, auto& v) { regime_text = v; };
  setters["solver.eps"] = [&](auto& k, auto& v) { cfg.solver.eps = to_double(k, v); };
  setters["solver.snapshot_interval"] = [&](auto& k, auto& v) { snapshot_interval = to_double(k, v); };
  setters["solver.dt_max"] = [&](auto& k, auto& v) { cfg.solver.dt_max = to_double(k, v); };
  setters["solver.presmooth_steps"] = [&](auto& k, auto& v) { cfg.presmooth_steps = to_count(k, v); };
  const char* species[] = {"u", "v", "w"};
  for (std::size_t s = 0; s < 3; ++s)
    setters[std::string("init.") + species[s]] = [&, s](auto& k, auto& v) { cfg.init[s] = parse_init(k, v, base_dir); };
  setters["study.type"] = [&](auto& k, auto& v) {
    static const std::map<std::string, StudyType> types = {{"single", StudyType::single},
                                                           {"eps_ladder", StudyType::eps_ladder},
                                                           {"grid_ladder", StudyType::grid_ladder},
                                                           {"mms", StudyType::mms},
                                                           {"ode_compare", StudyType::ode_compare}};
    const auto it = types.find(v);
    if (it == types.end()) fail(k, "unknown study '" + v + "'");
    cfg.study = it->second;
  };
  setters["study.eps_ladder"] = [&](auto& k, auto& v) {
    cfg.eps_ladder.clear();
    for (const auto& item : split_list(v)) cfg.eps_ladder.push_back(to_double(k, item));
  };
  setters["study.grid_ladder"] = [&](auto& k, auto& v) {
    cfg.grid_ladder.clear();
    for (const auto& item : split_list(v)) cfg.grid_ladder.push_back(to_count(k, item));
  };
  setters["study.mms"] = [&](auto& k, auto& v) {
    if (v != "diffusion" && v != "full") fail(k, "expected diffusion or full");
    cfg.mms_kind = v;
  };
  setters["study.test_family_size"] = [&](auto& k, auto& v) { cfg.test_family_size = to_count(k, v); };
  setters["output.dir"] = [&](auto&, auto& v) { cfg.output_dir = v; };
  setters["audit.l1"] = [&](auto& k, auto& v) { cfg.audits.l1 = to_bool(k, v); };
  setters["audit.sup"] = [&](auto& k, auto& v) { cfg.audits.sup = to_bool(k, v); };
  setters["audit.mass"] = [&](auto& k, auto& v) { cfg.audits.mass = to_bool(k, v); };
  setters["audit.eps_uniformity"] = [&](auto& k, auto& v) { cfg.audits.eps_uniformity = to_bool(k, v); };
  setters["audit.residuals"] = [&](auto& k, auto& v) { cfg.audits.residuals = to_bool(k, v); };

  // Pass 2: unknown keys in file order, then all missing mandatory keys at once.
  std::vector<std::pair<std::size_t, std::string>> ordered;
  for (const auto& [key, vl] : entries) ordered.emplace_back(vl.second, key);
  std::sort(ordered.begin(), ordered.end());
  for (const auto& [lineno, key] : ordered)
    if (!setters.count(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");

  std::vector<std::string> missing;
  for (const auto& key : mandatory_keys())
    if (!entries.count(key)) missing.push_back(key);
  if (!missing.empty()) {
    std::string msg = source + ": missing mandatory keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }

  for (const auto& [lineno, key] : ordered) {
    try {
      setters[key](key, entries[key].first);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }

  // Semantic checks, named by key.
  if (nx < 3) fail("grid.nx", "must be >= 3");
  if (ny < 1) fail("grid.ny", "must be >= 1");
  if (!(lx > 0.0)) fail("grid.lx", "must be > 0");
  if (!(ly > 0.0)) fail("grid.ly", "must be > 0");
  cfg.grid = GridSpec(nx, ny, lx, ly);

  for (const auto& [key, member] : param_keys()) {
    const double v = cfg.params.*member;
    if (key == "params.xi") {
      if (v < 0.0) fail(key, "prey-taxis coefficient must satisfy xi >= 0, got " + fmt(v));
    } else if (!(v > 0.0)) {
      fail(key, "must be > 0 (all coefficients except xi are strictly positive), got " + fmt(v));
    }
  }
  if (!combination_weights_admissible(cfg.params, combination_weights(cfg.params)))
    fail("params", "L1 combination weights violate their sign conditions");

  if (cfg.solver.t_end < 0.0) fail("solver.t_end", "must be >= 0");
  if (!(cfg.solver.cfl_safety > 0.0) || cfg.solver.cfl_safety > 1.0) fail("solver.cfl_safety", "must lie in (0, 1]");
  if (cfg.solver.dt_max && !(*cfg.solver.dt_max > 0.0)) fail("solver.dt_max", "must be > 0");

  if (regime_text) {
    try {
      cfg.solver.regime = parse_regime(*regime_text);
    } catch (const std::invalid_argument& e) {
      fail("solver.regime", e.what());
    }
  } else {
    cfg.solver.regime = cfg.params.xi == 0.0 ? Regime::classical : Regime::full;
  }
  if (cfg.study == StudyType::eps_ladder) cfg.solver.regime = Regime::regularized;

  if (cfg.solver.regime == Regime::classical && cfg.params.xi != 0.0)
    fail("solver.regime", "classical regime requires params.xi = 0");
  if (cfg.solver.eps) {
    if (cfg.solver.regime != Regime::regularized) fail("solver.eps", "only allowed with solver.regime = regularized");
    if (!(*cfg.solver.eps > 0.0) || *cfg.solver.eps > 1.0) fail("solver.eps", "must lie in (0, 1]");
  } else if (cfg.solver.regime == Regime::regularized && cfg.study != StudyType::eps_ladder) {
    fail("solver.eps", "required when solver.regime = regularized");
  }

  const double t_end = cfg.solver.t_end;
  cfg.solver.snapshot_interval = snapshot_interval ? *snapshot_interval : (t_end > 0.0 ? t_end / 10.0 : 1.0);
  if (!(cfg.solver.snapshot_interval > 0.0)) fail("solver.snapshot_interval", "must be > 0");

  if (cfg.study == StudyType::eps_ladder) {
    if (cfg.eps_ladder.size() < 2) fail("study.eps_ladder", "needs at least two values");
    for (double e : cfg.eps_ladder)
      if (!(e > 0.0) || e > 1.0) fail("study.eps_ladder", "every eps must lie in (0, 1]");
  }
  if (cfg.study == StudyType::grid_ladder || cfg.study == StudyType::mms) {
    if (cfg.grid_ladder.size() < 3) fail("study.grid_ladder", "needs at least three grids");
    for (std::size_t n : cfg.grid_ladder)
      if (n < 3) fail("study.grid_ladder", "every grid needs n >= 3");
    if (cfg.study == StudyType::grid_ladder)
      for (const auto& s : cfg.init)
        if (s.kind == InitSpec::Kind::file) fail("init", "file profiles cannot be re-evaluated on a grid ladder");
  }
  if (cfg.study == StudyType::mms && cfg.solver.regime == Regime::regularized)
    fail("solver.regime", "manufactured solutions are defined for the unregularised system");
  if (cfg.study == StudyType::ode_compare) {
    for (const auto& s : cfg.init)
      if (s.kind != InitSpec::Kind::constant) fail("init", "ode_compare needs spatially constant (const:) data");
    if (!cfg.solver.dt_max) cfg.solver.dt_max = 1e-3;
  }
  if (cfg.test_family_size == 0) fail("study.test_family_size", "must be >= 1");
  const bool needs_residuals = cfg.audits.residuals || cfg.study == StudyType::grid_ladder;
  if (needs_residuals && t_end > 0.0 && cfg.solver.snapshot_interval > 0.03 * t_end * (1.0 + 1e-9))
    fail("solver.snapshot_interval", "weak-form residuals need snapshot_interval <= 0.03 * t_end");

  try {
    SolverConfig probe = cfg.solver;
    if (cfg.study == StudyType::eps_ladder) probe.eps = cfg.eps_ladder.front();
    probe.validate(cfg.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return cfg;
}

RunConfig parse_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, path.string(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "grid.nx = " << cfg.grid.nx() << "\ngrid.ny = " << cfg.grid.ny() << "\ngrid.lx = " << fmt(cfg.grid.lx())
     << "\ngrid.ly = " << fmt(cfg.grid.ly()) << '\n';
  for (const auto& [key, member] : param_keys()) os << key << " = " << fmt(cfg.params.*member) << '\n';
  os << "solver.t_end = " << fmt(cfg.solver.t_end) << "\nsolver.cfl_safety = " << fmt(cfg.solver.cfl_safety)
     << "\nsolver.regime = " << to_string(cfg.solver.regime) << '\n';
  if (cfg.solver.eps && cfg.study != StudyType::eps_ladder) os << "solver.eps = " << fmt(*cfg.solver.eps) << '\n';
  os << "solver.snapshot_interval = " << fmt(cfg.solver.snapshot_interval) << '\n';
  if (cfg.solver.dt_max) os << "solver.dt_max = " << fmt(*cfg.solver.dt_max) << '\n';
  os << "solver.presmooth_steps = " << cfg.presmooth_steps << '\n';
  const char* species[] = {"u", "v", "w"};
  for (std::size_t s = 0; s < 3; ++s) os << "init." << species[s] << " = " << cfg.init[s].text << '\n';
  os << "study.type = " << to_string(cfg.study) << "\nstudy.eps_ladder = ";
  for (std::size_t k = 0; k < cfg.eps_ladder.size(); ++k) os << (k ? "," : "") << fmt(cfg.eps_ladder[k]);
  os << "\nstudy.grid_ladder = ";
  for (std::size_t k = 0; k < cfg.grid_ladder.size(); ++k) os << (k ? "," : "") << cfg.grid_ladder[k];
  os << "\nstudy.mms = " << cfg.mms_kind << "\nstudy.test_family_size = " << cfg.test_family_size
     << "\noutput.dir = " << cfg.output_dir.string() << "\naudit.l1 = " << (cfg.audits.l1 ? "true" : "false")
     << "\naudit.sup = " << (cfg.audits.sup ? "true" : "false")
     << "\naudit.mass = " << (cfg.audits.mass ? "true" : "false")
     << "\naudit.eps_uniformity = " << (cfg.audits.eps_uniformity ? "true" : "false")
     << "\naudit.residuals = " << (cfg.audits.residuals ? "true" : "false") << '\n';
  return os.str();
}

namespace {

constexpr const char* kUnitParams = R"(params.d1 = 1
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
)";

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"classical2d", std::string(R"(# No prey-taxis; smooth data on a 4 x 4 square.
grid.nx = 48
grid.ny = 48
grid.lx = 4
grid.ly = 4
params.xi = 0
)") + kUnitParams + R"(solver.t_end = 5
solver.regime = classical
solver.cfl_safety = 0.25
solver.snapshot_interval = 0.5
init.u = cos:1,0.5,1,1
init.v = cos:0.6,0.4,2,1
init.w = bump:0.1,2,2,2,1.5
study.type = single
output.dir = classical2d
)"},
      {"fullreg", std::string(R"(# Prey-taxis on, cut-off taxis sensitivity.
grid.nx = 48
grid.ny = 48
grid.lx = 4
grid.ly = 4
params.xi = 1
)") + kUnitParams + R"(solver.t_end = 5
solver.regime = regularized
solver.eps = 0.1
solver.cfl_safety = 0.2
solver.snapshot_interval = 0.5
init.u = cos:1,0.8,1,1
init.v = cos:1,0.5,1,2
init.w = bump:0,4,1,1,1
study.type = single
output.dir = fullreg
)"},
      {"epsstudy", std::string(R"(# eps ladder with a narrow w bump.
grid.nx = 40
grid.ny = 40
grid.lx = 4
grid.ly = 4
params.xi = 1
)") + kUnitParams + R"(solver.t_end = 2
solver.cfl_safety = 0.1
solver.snapshot_interval = 0.25
init.u = cos:1,0.8,1,1
init.v = bump:0.2,12,2,2,1.2
init.w = bump:0,10,1,1,0.6
study.type = eps_ladder
study.eps_ladder = 0.2,0.1,0.05
output.dir = epsstudy
)"},
      {"gridstudy", std::string(R"(# Space-time refinement ladder with weak-form residuals.
grid.nx = 16
grid.ny = 16
grid.lx = 2
grid.ly = 2
params.xi = 0
)") + kUnitParams + R"(solver.t_end = 1
solver.regime = classical
solver.snapshot_interval = 0.025
init.u = cos:1,0.5,1,1
init.v = cos:1,0.5,1,1
init.w = cos:1,0.5,2,1
study.type = grid_ladder
study.grid_ladder = 16,32,64
output.dir = gridstudy
)"},
      {"mms_diffusion", std::string(R"(# Manufactured solution, taxis off.
grid.nx = 16
grid.ny = 16
grid.lx = 1
grid.ly = 1
params.xi = 0
)") + kUnitParams + R"(solver.t_end = 0.1
solver.regime = classical
study.type = mms
study.mms = diffusion
study.grid_ladder = 16,32,64
output.dir = mms_diffusion
)"},
      {"mms_full", std::string(R"(# Manufactured solution for the full system.
grid.nx = 16
grid.ny = 16
grid.lx = 1
grid.ly = 1
params.xi = 1
)") + kUnitParams + R"(solver.t_end = 0.1
solver.regime = full
study.type = mms
study.mms = full
study.grid_ladder = 16,32,64
output.dir = mms_full
)"},
      {"ode_compare", std::string(R"(# Spatially constant data against the kinetic ODE.
grid.nx = 4
grid.ny = 4
grid.lx = 1
grid.ly = 1
params.xi = 0
)") + kUnitParams + R"(solver.t_end = 10
solver.regime = classical
solver.dt_max = 0.001
solver.snapshot_interval = 1
init.u = const:0.5
init.v = const:0.3
init.w = const:0.2
study.type = ode_compare
output.dir = ode_compare
)"},
  };
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : presets()) names.push_back(name);
  return names;
}

std::string preset_text(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second;
}

StateTriple build_initial_state(const RunConfig& cfg, std::optional<GridSpec> grid_opt) {
  const GridSpec grid = grid_opt ? *grid_opt : cfg.grid;
  auto eval = [&](const InitSpec& s) -> Field {
    const auto& a = s.args;
    switch (s.kind) {
      case InitSpec::Kind::constant:
        return Field(grid, a.at(0));
      case InitSpec::Kind::cosine:
        return Field::from_function(grid, [&](double x, double y) {
          return a[0] + a[1] * std::cos(a[2] * std::numbers::pi * x / grid.lx()) * std::cos(a[3] * std::numbers::pi * y / grid.ly());
        });
      case InitSpec::Kind::bump:
        return Field::from_function(grid, [&](double x, double y) {
          const double dy = grid.is_1d() ? 0.0 : y - a[3];
          const double r = std::hypot(x - a[2], dy);
          return a[0] + a[1] * Bump{0.0, a[4]}.value(r);
        });
      case InitSpec::Kind::file: {
        auto [f, t] = read_field(s.file);
        if (!(f.grid() == grid))
          throw ConfigError("initial-data file '" + s.file.string() + "' does not match the configured grid");
        return f;
      }
    }
    return Field(grid);
  };
  StateTriple st{eval(cfg.init[0]), eval(cfg.init[1]), eval(cfg.init[2]), 0.0};
  return presmooth(st, cfg.presmooth_steps);
}

}  // namespace alarm_taxis

#include "alarm_taxis/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace alarm_taxis {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_field(const Field& f, double t) {
  const GridSpec& g = f.grid();
  std::string s = "# alarm-taxis field nx=" + std::to_string(g.nx()) + " ny=" + std::to_string(g.ny()) +
                  " lx=" + fmt(g.lx()) + " ly=" + fmt(g.ly()) + " t=" + fmt(t) + "\n";
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      if (i) s += ' ';
      s += fmt(f.at(i, j));
    }
    s += '\n';
  }
  return s;
}

std::pair<Field, double> parse_field(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  const std::string magic = "# alarm-taxis field";
  if (header.rfind(magic, 0) != 0) throw std::runtime_error(source + ": missing '" + magic + "' header");

  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(magic.size()));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error(source + ": malformed header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"nx", "ny", "lx", "ly", "t"})
    if (!kv.count(key)) throw std::runtime_error(source + ": header lacks " + key);

  const auto nx = static_cast<std::size_t>(std::stoull(kv["nx"]));
  const auto ny = static_cast<std::size_t>(std::stoull(kv["ny"]));
  const GridSpec grid(nx, ny, parse_double(kv["lx"], source), parse_double(kv["ly"], source));
  const double t = parse_double(kv["t"], source);

  Field f(grid);
  std::string line;
  std::size_t j = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (j >= ny) throw std::runtime_error(source + ": more than ny rows");
    std::istringstream ls(line);
    std::size_t i = 0;
    while (ls >> tok) {
      if (i >= nx) throw std::runtime_error(source + ": row " + std::to_string(j) + " has more than nx values");
      f.at(i++, j) = parse_double(tok, source);
    }
    if (i != nx) throw std::runtime_error(source + ": row " + std::to_string(j) + " has " + std::to_string(i) + " values");
    ++j;
  }
  if (j != ny) throw std::runtime_error(source + ": expected " + std::to_string(ny) + " rows, got " + std::to_string(j));
  f.require_finite(source);
  return {std::move(f), t};
}

void write_field(const fs::path& path, const Field& f, double t) { write_text(path, format_field(f, t)); }

std::pair<Field, double> read_field(const fs::path& path) { return parse_field(read_text(path), path.string()); }

const std::vector<std::string>& timeseries_base_columns() {
  static const std::vector<std::string> cols = {
      "t",         "dt",        "mass_u",    "mass_v",   "mass_w",       "comb_mass",
      "sup_u",     "sup_v",     "sup_w",     "l2_u",     "l2_v",         "l2_w",
      "grad_u_sq", "grad_v_sq", "grad_uv_sq", "logw_grad_sq", "cum_lap_u_sq", "gn_ratio_u"};
  return cols;
}

namespace {

using Member = double MonitorRecord::*;

// Everything except gn_ratio_u and the margins, in CSV order.
const std::vector<std::pair<std::string, Member>>& scalar_members() {
  static const std::vector<std::pair<std::string, Member>> m = {
      {"t", &MonitorRecord::t},
      {"dt", &MonitorRecord::dt},
      {"mass_u", &MonitorRecord::mass_u},
      {"mass_v", &MonitorRecord::mass_v},
      {"mass_w", &MonitorRecord::mass_w},
      {"comb_mass", &MonitorRecord::comb_mass},
      {"sup_u", &MonitorRecord::sup_u},
      {"sup_v", &MonitorRecord::sup_v},
      {"sup_w", &MonitorRecord::sup_w},
      {"l2_u", &MonitorRecord::l2_u},
      {"l2_v", &MonitorRecord::l2_v},
      {"l2_w", &MonitorRecord::l2_w},
      {"grad_u_sq", &MonitorRecord::grad_u_sq},
      {"grad_v_sq", &MonitorRecord::grad_v_sq},
      {"grad_uv_sq", &MonitorRecord::grad_uv_sq},
      {"logw_grad_sq", &MonitorRecord::logw_grad_sq},
      {"cum_lap_u_sq", &MonitorRecord::cum_lap_u_sq},
      {"lap_u_sq", &MonitorRecord::lap_u_sq},
      {"h_integral", &MonitorRecord::h_integral},
      {"force_v_l65", &MonitorRecord::force_v_l65},
      {"rhs_v_l65", &MonitorRecord::rhs_v_l65},
      {"cum_grad_v_sq", &MonitorRecord::cum_grad_v_sq},
      {"cum_grad_uv_sq", &MonitorRecord::cum_grad_uv_sq},
      {"cum_logw_grad_sq", &MonitorRecord::cum_logw_grad_sq},
      {"cum_rhs_v_l65", &MonitorRecord::cum_rhs_v_l65},
      {"cum_h", &MonitorRecord::cum_h},
  };
  return m;
}

Member member_for(const std::string& name) {
  for (const auto& [n, m] : scalar_members())
    if (n == name) return m;
  return nullptr;
}

}  // namespace

std::string format_timeseries(const std::vector<MonitorRecord>& monitors) {
  std::vector<std::string> cols = timeseries_base_columns();
  std::vector<std::string> margin_names;
  if (!monitors.empty())
    for (const auto& [name, value] : monitors.front().bound_margins) margin_names.push_back(name);
  for (const auto& n : margin_names) cols.push_back("margin_" + n);
  for (const auto& [name, m] : scalar_members())
    if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);

  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  for (const auto& r : monitors) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out += ',';
      const std::string& name = cols[c];
      if (name == "gn_ratio_u") {
        if (r.gn_ratio_u) out += fmt(*r.gn_ratio_u);
      } else if (name.rfind("margin_", 0) == 0) {
        const auto m = r.margin(name.substr(7));
        if (!m) throw std::invalid_argument("format_timeseries: records disagree on margin columns");
        out += fmt(*m);
      } else {
        out += fmt(r.*member_for(name));
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<MonitorRecord> parse_timeseries(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("timeseries: empty file");
  const std::vector<std::string> cols = split(line, ',');
  std::vector<MonitorRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = "timeseries line " + std::to_string(lineno);
    if (cells.size() != cols.size()) throw std::runtime_error(where + ": wrong column count");
    MonitorRecord r;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& name = cols[c];
      if (name == "gn_ratio_u") {
        if (!cells[c].empty()) r.gn_ratio_u = parse_double(cells[c], where);
      } else if (name.rfind("margin_", 0) == 0) {
        r.bound_margins.emplace_back(name.substr(7), parse_double(cells[c], where));
      } else if (Member m = member_for(name)) {
        r.*m = parse_double(cells[c], where);
      } else {
        throw std::runtime_error("timeseries: unknown column '" + name + "'");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_trajectory(const fs::path& dir, const Trajectory& traj) {
  fs::create_directories(dir / "snapshots");
  write_text(dir / "timeseries.csv", format_timeseries(traj.monitors));
  static const char* names[] = {"u", "v", "w"};
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const StateTriple& s = traj.snapshots[k];
    const Field* comps[] = {&s.u, &s.v, &s.w};
    char stem[32];
    for (std::size_t c = 0; c < 3; ++c) {
      std::snprintf(stem, sizeof stem, "snap_%05zu_%s.txt", k, names[c]);
      write_field(dir / "snapshots" / stem, *comps[c], s.t);
    }
  }
  write_text(dir / "trajectory.meta",
             "snapshots=" + std::to_string(traj.snapshots.size()) + "\nrejected_steps=" +
                 std::to_string(traj.rejected_steps) + "\n");
}

Trajectory read_trajectory(const fs::path& dir) {
  Trajectory traj;
  traj.monitors = parse_timeseries(read_text(dir / "timeseries.csv"));
  for (std::size_t k = 1; k < traj.monitors.size(); ++k) traj.dt_history.push_back(traj.monitors[k].dt);

  std::size_t count = 0;
  std::istringstream meta(read_text(dir / "trajectory.meta"));
  std::string line;
  while (std::getline(meta, line)) {
    if (line.rfind("snapshots=", 0) == 0) count = std::stoull(line.substr(10));
    if (line.rfind("rejected_steps=", 0) == 0) traj.rejected_steps = std::stoull(line.substr(15));
  }
  char stem[32];
  for (std::size_t k = 0; k < count; ++k) {
    StateTriple s;
    Field* comps[] = {&s.u, &s.v, &s.w};
    static const char* names[] = {"u", "v", "w"};
    for (std::size_t c = 0; c < 3; ++c) {
      std::snprintf(stem, sizeof stem, "snap_%05zu_%s.txt", k, names[c]);
      auto [f, t] = read_field(dir / "snapshots" / stem);
      *comps[c] = std::move(f);
      s.t = t;
    }
    traj.snapshots.push_back(std::move(s));
  }
  return traj;
}

}  // namespace alarm_taxis

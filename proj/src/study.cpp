#include "alarm_taxis/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "alarm_taxis/kinetics_ode.hpp"
#include "alarm_taxis/trajectory_io.hpp"
#include "alarm_taxis/weakform.hpp"

namespace alarm_taxis {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t worker_cap() {
  const char* env = std::getenv("ALARM_TAXIS_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end && *end == '\0' && n >= 0) return n == 0 ? 1 : static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void run_parallel(const std::vector<std::function<void()>>& tasks, std::size_t cap) {
  const std::size_t workers = std::min(std::max<std::size_t>(cap, 1), tasks.size());
  if (workers <= 1) {
    for (const auto& t : tasks) t();
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr first;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next >= tasks.size()) return;
        k = next++;
      }
      try {
        tasks[k]();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

AuditReport run_audits(const Trajectory& traj, const RunConfig& cfg) {
  AuditReport rep;
  if (cfg.audits.l1) rep.append(audit_l1_bound(traj, cfg.params));
  if (cfg.audits.sup) rep.append(audit_sup_bounds(traj, cfg.params, cfg.solver.regime, cfg.solver.eps));
  if (cfg.audits.mass) rep.append(audit_mass_inequality(traj, cfg.params));
  return rep;
}

OdeComparison compare_with_ode(const Trajectory& traj, const Params& p) {
  if (traj.snapshots.empty()) throw std::invalid_argument("compare_with_ode: empty trajectory");
  const StateTriple& s0 = traj.snapshots.front();
  const KineticState y0{s0.u[0], s0.v[0], s0.w[0]};
  std::vector<double> times;
  for (const auto& m : traj.monitors) times.push_back(m.t);
  const auto ode = integrate_kinetics(y0, p, times);
  const double measure = s0.grid().measure();

  OdeComparison cmp;
  auto observe = [&](double t, double dev) {
    if (dev > cmp.max_deviation) {
      cmp.max_deviation = dev;
      cmp.time_of_max = t;
    }
  };
  for (std::size_t k = 0; k < traj.monitors.size(); ++k) {
    const MonitorRecord& m = traj.monitors[k];
    const double sups[] = {m.sup_u, m.sup_v, m.sup_w};
    const double means[] = {m.mass_u / measure, m.mass_v / measure, m.mass_w / measure};
    for (std::size_t c = 0; c < 3; ++c) {
      observe(m.t, std::abs(sups[c] - ode[k][c]));
      observe(m.t, std::abs(means[c] - ode[k][c]));
    }
    ++cmp.samples;
  }
  return cmp;
}

ManufacturedSolution builtin_manufactured(const std::string& kind, const GridSpec& grid) {
  const int ky = grid.is_1d() ? 0 : 1;
  std::array<ManufacturedComponent, 3> c{};
  c[0] = {1.0, 0.5, 1, ky, 1.0};
  c[1] = {1.0, 0.4, 2, ky, 0.5};
  c[2] = {1.0, 0.3, 1, grid.is_1d() ? 0 : 2, 0.2};
  if (kind != "diffusion" && kind != "full") throw std::invalid_argument("unknown manufactured solution '" + kind + "'");
  return ManufacturedSolution(c, grid.lx(), grid.ly());
}

LadderOrders ladder_orders(std::vector<LadderLevel> levels) {
  LadderOrders o;
  o.levels = std::move(levels);
  const std::size_t n = o.levels.size();
  if (n >= 2) {
    const auto& a = o.levels[n - 2];
    const auto& b = o.levels[n - 1];
    const double lh = std::log(a.h / b.h);
    o.order_u = std::log(a.max_abs_u / b.max_abs_u) / lh;
    o.order_v = std::log(a.max_abs_v / b.max_abs_v) / lh;
    o.order_defect = std::log(a.max_abs_defect / b.max_abs_defect) / lh;
  }
  return o;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Logger {
  const StudyOptions& opts;
  std::mutex mu;
  void operator()(const std::string& msg) {
    if (opts.quiet) return;
    std::lock_guard lock(mu);
    (opts.log ? *opts.log : std::cerr) << msg << '\n';
  }
};

json monitor_json(const MonitorRecord& m) {
  json j = {{"t", m.t},           {"mass_u", m.mass_u},   {"mass_v", m.mass_v}, {"mass_w", m.mass_w},
            {"comb_mass", m.comb_mass}, {"sup_u", m.sup_u}, {"sup_v", m.sup_v},  {"sup_w", m.sup_w}};
  return j;
}

struct SingleOutcome {
  int exit_code = kExitOk;
  std::optional<Trajectory> traj;
  json summary;
};

void write_abort_bundle(const fs::path& dir, const SolverAbort& e) {
  std::string text = "solver abort: ";
  text += e.what();
  text += "\nlast monitor records follow in abort_tail.csv\n";
  write_text(dir / "abort_report.txt", text);
  write_text(dir / "abort_tail.csv", format_timeseries(e.tail()));
}

// One trajectory with its own artifacts below `dir`.
SingleOutcome run_single(const RunConfig& cfg, const StateTriple& initial, const fs::path& dir, Logger& log) {
  SingleOutcome out;
  fs::create_directories(dir);
  write_text(dir / "run_config.cfg", serialize_config(cfg));
  out.summary["regime"] = to_string(cfg.solver.regime);
  if (cfg.solver.eps) out.summary["eps"] = *cfg.solver.eps;
  out.summary["grid"] = {{"nx", initial.grid().nx()}, {"ny", initial.grid().ny()},
                         {"lx", initial.grid().lx()}, {"ly", initial.grid().ly()}};
  out.summary["presmooth_steps"] = cfg.presmooth_steps;
  out.summary["dir"] = dir.string();

  Trajectory traj;
  try {
    traj = run(initial, cfg.params, cfg.solver);
  } catch (const SolverAbort& e) {
    write_abort_bundle(dir, e);
    out.exit_code = kExitSolverAbort;
    out.summary["status"] = "abort";
    out.summary["abort"] = e.what();
    log(dir.string() + ": solver abort: " + e.what());
    return out;
  }
  write_trajectory(dir, traj);
  write_text(dir / "energy.csv", energy_table(energy_series(traj)));

  AuditReport audits = run_audits(traj, cfg);
  write_text(dir / "audit_report.txt", audits.to_text());
  bool ok = audits.passed();

  if (cfg.audits.residuals) {
    const auto family = make_test_family(initial.grid(), cfg.solver.t_end, cfg.test_family_size);
    const ResidualReport res = residual_report(traj, cfg.params, family, make_renorm_family());
    write_text(dir / "residual_report.txt", res.to_text());
    out.summary["residuals"] = {{"max_abs_u", res.max_abs_u},
                                {"max_abs_v", res.max_abs_v},
                                {"max_abs_defect", res.max_abs_defect},
                                {"min_defect", res.min_defect},
                                {"passed", res.passed()}};
    ok = ok && res.passed();
  }

  out.summary["steps"] = traj.dt_history.size();
  out.summary["rejected_steps"] = traj.rejected_steps;
  out.summary["snapshots"] = traj.snapshots.size();
  out.summary["final"] = monitor_json(traj.monitors.back());
  if (const auto gn = max_gn_ratio(traj)) out.summary["max_gn_ratio_u"] = *gn;
  json audit_rows = json::array();
  for (const auto& e : audits.entries)
    audit_rows.push_back({{"name", e.name}, {"worst_margin", e.worst_margin}, {"time_of_worst", e.time_of_worst},
                          {"passed", e.passed}});
  out.summary["audits"] = audit_rows;
  out.summary["status"] = ok ? "pass" : "fail";
  out.exit_code = ok ? kExitOk : kExitAuditFailed;
  out.traj = std::move(traj);
  log(dir.string() + ": " + std::to_string(out.summary["steps"].get<std::size_t>()) + " steps, audits " +
      (ok ? "PASS" : "FAIL"));
  return out;
}

int combine(int a, int b) {
  if (a == kExitSolverAbort || b == kExitSolverAbort) return kExitSolverAbort;
  return std::max(a, b);
}

std::string eps_tag(double eps) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "eps_%g", eps);
  return buf;
}

}  // namespace

StudyResult run_study(const RunConfig& cfg_in, const StudyOptions& opts) {
  RunConfig cfg = cfg_in;
  if (opts.output_override) cfg.output_dir = *opts.output_override;
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir);
  write_text(out_dir / "run_config.cfg", serialize_config(cfg));
  Logger log{opts, {}};

  json summary;
  summary["study"] = to_string(cfg.study);
  summary["presmooth_steps"] = cfg.presmooth_steps;
  summary["format_version"] = 1;
  int code = kExitOk;

  switch (cfg.study) {
    case StudyType::single: {
      auto res = run_single(cfg, build_initial_state(cfg), out_dir, log);
      summary["run"] = res.summary;
      code = res.exit_code;
      break;
    }

    case StudyType::ode_compare: {
      auto res = run_single(cfg, build_initial_state(cfg), out_dir, log);
      summary["run"] = res.summary;
      code = res.exit_code;
      if (res.traj) {
        const OdeComparison cmp = compare_with_ode(*res.traj, cfg.params);
        const bool ok = cmp.max_deviation <= 1e-4;
        std::ostringstream rep;
        rep << "# spatially constant run against the kinetic ODE (Dormand-Prince, tol 1e-12)\n"
            << "samples " << cmp.samples << "\nmax_deviation " << fmt(cmp.max_deviation) << "\ntime_of_max "
            << fmt(cmp.time_of_max) << "\ntolerance 1e-4\nstatus " << (ok ? "PASS" : "FAIL") << '\n';
        write_text(out_dir / "ode_report.txt", rep.str());
        summary["ode_compare"] = {{"max_deviation", cmp.max_deviation}, {"time_of_max", cmp.time_of_max},
                                  {"passed", ok}};
        if (!ok) code = combine(code, kExitAuditFailed);
      }
      break;
    }

    case StudyType::eps_ladder: {
      const StateTriple initial = build_initial_state(cfg);
      std::vector<SingleOutcome> outcomes(cfg.eps_ladder.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t k = 0; k < cfg.eps_ladder.size(); ++k) {
        tasks.push_back([&, k] {
          RunConfig sub = cfg;
          sub.study = StudyType::single;
          sub.solver.regime = Regime::regularized;
          sub.solver.eps = cfg.eps_ladder[k];
          outcomes[k] = run_single(sub, initial, out_dir / eps_tag(cfg.eps_ladder[k]), log);
        });
      }
      run_parallel(tasks, worker_cap());

      std::vector<EpsLadderEntry> entries;
      json runs = json::array();
      for (std::size_t k = 0; k < outcomes.size(); ++k) {
        runs.push_back(outcomes[k].summary);
        code = combine(code, outcomes[k].exit_code);
        if (!outcomes[k].traj) continue;
        const Trajectory& t = *outcomes[k].traj;
        const double eps = cfg.eps_ladder[k];
        const BoundSet b = compute_bounds(t.snapshots.front(), cfg.params, Regime::regularized, eps);
        double sup_v = 0.0;
        for (const auto& m : t.monitors) sup_v = std::max(sup_v, m.sup_v);
        entries.push_back({eps, energy_series(t).back(), sup_v, *b.v_bar});
      }
      summary["runs"] = runs;
      if (entries.size() == outcomes.size()) {
        write_text(out_dir / "eps_uniformity.csv", eps_uniformity_table(entries));
        if (cfg.audits.eps_uniformity) {
          const AuditReport rep = audit_eps_uniformity(entries);
          write_text(out_dir / "eps_audit_report.txt", rep.to_text());
          summary["eps_uniformity_passed"] = rep.passed();
          if (!rep.passed()) code = combine(code, kExitAuditFailed);
        }
      }
      break;
    }

    case StudyType::grid_ladder: {
      const std::size_t n0 = cfg.grid_ladder.front();
      std::vector<SingleOutcome> outcomes(cfg.grid_ladder.size());
      std::vector<LadderLevel> levels(cfg.grid_ladder.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t k = 0; k < cfg.grid_ladder.size(); ++k) {
        tasks.push_back([&, k] {
          const std::size_t n = cfg.grid_ladder[k];
          const double ratio = static_cast<double>(n0) / static_cast<double>(n);
          RunConfig sub = cfg;
          sub.study = StudyType::single;
          sub.audits.residuals = true;
          sub.grid = GridSpec(n, cfg.grid.is_1d() ? 1 : n, cfg.grid.lx(), cfg.grid.ly());
          sub.solver.snapshot_interval = cfg.solver.snapshot_interval * ratio;
          if (sub.solver.dt_max) *sub.solver.dt_max *= ratio;
          outcomes[k] = run_single(sub, build_initial_state(cfg, sub.grid), out_dir / ("n_" + std::to_string(n)), log);
          const json& r = outcomes[k].summary;
          if (r.contains("residuals")) {
            const json& res = r["residuals"];
            levels[k] = {n, sub.grid.hx(), res["max_abs_u"], res["max_abs_v"], res["max_abs_defect"],
                         res["min_defect"]};
          }
        });
      }
      run_parallel(tasks, worker_cap());
      json runs = json::array();
      bool complete = true;
      for (const auto& o : outcomes) {
        runs.push_back(o.summary);
        // Residual pass/fail rows are informative here; the ladder verdict is the observed order.
        code = combine(code, o.exit_code == kExitSolverAbort ? kExitSolverAbort : kExitOk);
        complete = complete && o.traj.has_value();
      }
      summary["runs"] = runs;
      if (complete) {
        const LadderOrders ord = ladder_orders(levels);
        const bool ok = ord.order_u >= 0.9 && ord.order_v >= 0.9 && ord.order_defect >= 0.9;
        std::ostringstream rep;
        rep << "# weak-form residual ladder: max over the test family per level\n"
            << "n,h,max_abs_u,max_abs_v,max_abs_defect,min_defect\n";
        for (const auto& l : ord.levels)
          rep << l.n << ',' << fmt(l.h) << ',' << fmt(l.max_abs_u) << ',' << fmt(l.max_abs_v) << ','
              << fmt(l.max_abs_defect) << ',' << fmt(l.min_defect) << '\n';
        rep << "observed order (finest pair): u " << fmt(ord.order_u) << ", v " << fmt(ord.order_v) << ", defect "
            << fmt(ord.order_defect) << "\nrequired >= 0.9: " << (ok ? "PASS" : "FAIL") << '\n';
        write_text(out_dir / "ladder_report.txt", rep.str());
        summary["ladder"] = {{"order_u", ord.order_u}, {"order_v", ord.order_v},
                             {"order_defect", ord.order_defect}, {"passed", ok}};
        for (const auto& o : outcomes)
          if (o.exit_code == kExitAuditFailed && o.summary.contains("audits"))
            for (const auto& a : o.summary["audits"])
              if (!a["passed"].get<bool>()) code = combine(code, kExitAuditFailed);
        if (!ok) code = combine(code, kExitAuditFailed);
      }
      break;
    }

    case StudyType::mms: {
      MmsDescriptor desc;
      desc.kinetics = true;
      desc.taxis = cfg.mms_kind == "full";
      desc.exact = builtin_manufactured(cfg.mms_kind, cfg.grid);
      SolverConfig scfg = cfg.solver;
      try {
        const ConvergenceReport rep = mms_run(desc, cfg.params, scfg, cfg.grid_ladder, cfg.grid.is_1d());
        const double required = cfg.mms_kind == "diffusion" ? 1.9 : 0.9;
        const bool ok = rep.observed_order >= required && rep.monotone;
        std::ostringstream os;
        os << "# manufactured solution '" << cfg.mms_kind << "', L2 errors at t_end\n"
           << "n,h,err_u,err_v,err_w,err_total,steps\n";
        for (const auto& l : rep.levels)
          os << l.n << ',' << fmt(l.h) << ',' << fmt(l.error_l2[0]) << ',' << fmt(l.error_l2[1]) << ','
             << fmt(l.error_l2[2]) << ',' << fmt(l.error_total) << ',' << l.steps << '\n';
        os << "orders:";
        for (double o : rep.orders) os << ' ' << fmt(o);
        os << "\nobserved order " << fmt(rep.observed_order) << " (required >= " << required << ")\nmonotone "
           << (rep.monotone ? "yes" : "NO (flagged)") << "\nstatus " << (ok ? "PASS" : "FAIL") << '\n';
        write_text(out_dir / "mms_report.txt", os.str());
        summary["mms"] = {{"kind", cfg.mms_kind}, {"observed_order", rep.observed_order},
                          {"orders", rep.orders},  {"monotone", rep.monotone},
                          {"passed", ok}};
        log(out_dir.string() + ": mms observed order " + fmt(rep.observed_order));
        code = ok ? kExitOk : kExitAuditFailed;
      } catch (const SolverAbort& e) {
        write_abort_bundle(out_dir, e);
        summary["abort"] = e.what();
        code = kExitSolverAbort;
      }
      break;
    }
  }

  summary["exit_code"] = code;
  summary["status"] = code == kExitOk ? "pass" : code == kExitAuditFailed ? "fail" : "abort";
  StudyResult result{code, out_dir, summary.dump(2) + "\n"};
  write_text(out_dir / "summary.json", result.summary_json);
  return result;
}

int audit_directory(const fs::path& dir, std::ostream& out) {
  RunConfig cfg;
  Trajectory traj;
  try {
    cfg = parse_config(dir / "run_config.cfg");
    traj = read_trajectory(dir);
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    out << "cannot read trajectory: " << e.what() << '\n';
    return kExitConfigError;
  }
  const AuditReport rep = run_audits(traj, cfg);
  out << rep.to_text();
  return rep.passed() ? kExitOk : kExitAuditFailed;
}

int residuals_directory(const fs::path& dir, std::ostream& out) {
  RunConfig cfg;
  Trajectory traj;
  try {
    cfg = parse_config(dir / "run_config.cfg");
    traj = read_trajectory(dir);
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    out << "cannot read trajectory: " << e.what() << '\n';
    return kExitConfigError;
  }
  try {
    const GridSpec& g = traj.snapshots.front().grid();
    const auto family = make_test_family(g, traj.snapshots.back().t, cfg.test_family_size);
    const ResidualReport rep = residual_report(traj, cfg.params, family, make_renorm_family());
    out << rep.to_text();
    return rep.passed() ? kExitOk : kExitAuditFailed;
  } catch (const std::invalid_argument& e) {
    out << "residuals not applicable: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace alarm_taxis

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "output.hpp"
#include "pulsefield/diagnostics.hpp"
#include "pulsefield/errors.hpp"
#include "pulsefield/steady_state.hpp"
#include "pulsefield/verification.hpp"

namespace pulsefield::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const json& resolved,
                    const std::vector<std::string>& outputs) {
  write_json(dir / "manifest.json",
             json{{"tool", "pulsefield"}, {"version", kVersion}, {"subcommand", subcommand},
                  {"resolved_config", resolved}, {"outputs", outputs}});
}

json optional_number(const std::optional<double>& x) { return x ? number_or_null(*x) : json(nullptr); }

json moment_report(const TrajectoryRecord& rec, const PhaseResponse& k, MomentKind kind) {
  const auto ms = moment_series(rec, k, kind);
  return json{{"report", kind == MomentKind::identity ? "moment_identity_q" : "moment_identity_inverse_k"},
              {"samples", ms.derivative.size()},
              {"max_residual", number_or_null(ms.max_residual)},
              {"initial", ms.value.empty() ? json(nullptr) : number_or_null(ms.value.front())},
              {"final", ms.value.empty() ? json(nullptr) : number_or_null(ms.value.back())}};
}

json requested_reports(const Scenario& sc, const TrajectoryRecord& rec) {
  json out = json::array();
  for (const auto& name : sc.reports) {
    try {
      if (name == "n_bounds") {
        out.push_back(to_json(n_bounds_check(rec, sc.k, 10.0 / static_cast<double>(sc.solver.cells), sc.name)));
      } else if (name == "blowup_bounds") {
        out.push_back(to_json(blowup_bounds(sc.k, rec.initial, &rec, sc.name)));
      } else if (name == "moment_identity") {
        out.push_back(moment_report(rec, sc.k, MomentKind::identity));
        out.push_back(moment_report(rec, sc.k, MomentKind::inverse_k));
      } else if (name == "integral_equation") {
        const auto ir = integral_equation_residual(rec, sc.k);
        out.push_back(json{{"report", "integral_equation"},
                           {"points", ir.points.size()},
                           {"max_residual", number_or_null(ir.max_residual)},
                           {"max_kernel_identity_residual", number_or_null(ir.max_kernel_identity_residual)},
                           {"min_kernel", number_or_null(ir.min_kernel)}});
      }
    } catch (const InapplicableBound& e) {
      out.push_back(json{{"report", name}, {"skipped", e.what()}});
    } catch (const InsufficientHistory& e) {
      out.push_back(json{{"report", name}, {"skipped", e.what()}});
    }
  }
  return out;
}

std::string step_name(const char* prefix, std::size_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%08zu.csv", prefix, step);
  return buf;
}

std::string time_name(std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ensemble_%06zu.csv", index);
  return buf;
}

QuantileProfile initial_or_config_error(const Scenario& sc) {
  try {
    auto p = build_initial_profile(sc);
    validate_initial(p, sc.k);
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("key 'initial' does not yield valid initial data: ") + e.what());
  } catch (const ConstraintViolated& e) {
    throw ConfigError(std::string("key 'initial' does not yield valid initial data: ") + e.what());
  } catch (const CompatibilityViolated& e) {
    throw ConfigError(std::string("key 'initial' does not yield valid initial data: ") + e.what());
  }
}

int classify(const std::exception_ptr& ep, const std::string& context, std::ostream& err) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    err << "config error" << context << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "run error" << context << ": " << e.what() << '\n';
    return kRunError;
  }
}

}  // namespace

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PULSEFIELD_OUT"); env && *env) return env;
  return "pulsefield_out";
}

void run_simulate(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  prepare_dir(dir);
  const auto initial = initial_or_config_error(sc);
  const auto check = validate_initial(initial, sc.k);
  const auto state = make_initial_state(initial, sc.k, sc.mode);
  const auto rec = run(state, sc.tau_end, sc.k, sc.solver);

  std::vector<std::string> outputs = {"trajectory.csv", "summary.json", "reports.json"};
  write_trajectory_csv(dir / "trajectory.csv", rec);

  const fs::path snap_dir = dir / "snapshots";
  prepare_dir(snap_dir);
  std::vector<const Snapshot*> chosen;
  if (sc.dump_every == 0) {
    if (!rec.snapshots.empty()) {
      chosen.push_back(&rec.snapshots.front());
      if (rec.snapshots.size() > 1) chosen.push_back(&rec.snapshots.back());
    }
  } else {
    for (const auto& s : rec.snapshots) {
      if (s.step % sc.dump_every == 0 || &s == &rec.snapshots.back()) chosen.push_back(&s);
    }
  }
  for (const auto* s : chosen) {
    const auto name = step_name("step", s->step);
    write_snapshot_csv(snap_dir / name, *s, sc.k);
    outputs.push_back("snapshots/" + name);
  }

  const auto& last = rec.rows.back();
  json summary{{"name", sc.name},
               {"mode", to_string(rec.mode)},
               {"outcome", to_string(rec.outcome)},
               {"tau_star", optional_number(rec.tau_star)},
               {"t_star", optional_number(rec.t_star)},
               {"steps", last.step},
               {"tau_final", last.tau},
               {"t_final", last.t},
               {"n_tilde_final", number_or_null(last.n_tilde)},
               {"N_final", number_or_null(last.rate)},
               {"n_init", check.n_init},
               {"warnings", check.warnings},
               {"max_domain_excursion", rec.max_domain_excursion},
               {"first_nonphysical_row", rec.first_nonphysical_row ? json(*rec.first_nonphysical_row)
                                                                   : json(nullptr)}};
  write_json(dir / "summary.json", summary);
  write_json(dir / "reports.json", requested_reports(sc, rec));
  write_manifest(dir, "simulate", sc.resolved, outputs);

  out << sc.name << ": " << to_string(rec.outcome) << " after " << last.step << " steps, tau = "
      << format_double(last.tau);
  if (rec.tau_star) out << ", tau* = " << format_double(*rec.tau_star);
  out << '\n';
}

void run_particles(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  if (!sc.particles) throw ConfigError("missing required key 'particles' for the particles subcommand");
  const auto& p = *sc.particles;
  prepare_dir(dir);
  const auto initial = initial_or_config_error(sc);
  auto ens = init_from_profile(initial, sc.phi_f, p.count, p.seed, p.sampling);

  std::vector<std::string> outputs = {"spikes.csv", "summary.json"};
  const fs::path ens_dir = dir / "ensembles";
  prepare_dir(ens_dir);
  std::size_t dumped = 0;
  auto dump = [&] {
    const auto name = time_name(dumped++);
    write_ensemble_csv(ens_dir / name, ens.sorted_phases());
    outputs.push_back("ensembles/" + name);
  };
  dump();

  const std::size_t budget = p.spike_budget.value_or(static_cast<std::size_t>(-1));
  bool budget_hit = false;
  double next_dump = p.ensemble_every > 0.0 ? p.ensemble_every : p.t_end;
  while (ens.time() < p.t_end && !budget_hit) {
    const double target = std::min(next_dump, p.t_end);
    while (ens.time() < target) {
      if (ens.spike_log().size() >= budget) {
        budget_hit = true;
        break;
      }
      const auto ph = ens.phases();
      const double lead = *std::max_element(ph.begin(), ph.end());
      if (ens.time() + (sc.phi_f - lead) > target) {
        ens.run_until(sc.k, target);
        break;
      }
      ens.run_events(sc.k, 1);
    }
    if (budget_hit) break;
    dump();
    next_dump += p.ensemble_every > 0.0 ? p.ensemble_every : p.t_end;
  }
  if (budget_hit) dump();

  write_spike_csv(dir / "spikes.csv", ens.spike_log());
  const double elapsed = ens.time();
  json summary{{"name", sc.name},
               {"count", p.count},
               {"seed", p.seed},
               {"t_final", elapsed},
               {"events", ens.spike_log().size()},
               {"total_resets", ens.total_resets()},
               {"firing_rate", elapsed > 0.0 ? number_or_null(empirical_firing_rate(ens, elapsed)) : json(nullptr)},
               {"stopped_by", budget_hit ? "spike_budget" : "t_end"},
               {"ensembles", dumped}};
  write_json(dir / "summary.json", summary);
  write_manifest(dir, "particles", sc.resolved, outputs);
  out << sc.name << ": " << ens.spike_log().size() << " events, " << ens.total_resets() << " resets by t = "
      << format_double(elapsed) << '\n';
}

void run_steady_state(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  prepare_dir(dir);
  const auto ex = steady_state_exists(sc.k);
  json doc{{"exists", ex.exists}, {"harmonic_integral", ex.harmonic_integral}, {"on_boundary", ex.on_boundary}};
  std::vector<std::string> outputs = {"steady_state.json"};
  if (ex.exists) {
    const auto ss = solve_steady_state(sc.k, sc.solver.cells);
    doc["N_star"] = ss.n_star;
    doc["profile_csv"] = "profile.csv";
    write_profile_csv(dir / "profile.csv", ss.profile);
    outputs.push_back("profile.csv");
    out << sc.name << ": N* = " << format_double(ss.n_star) << '\n';
  } else {
    out << sc.name << ": no steady state (integral of 1/K = " << format_double(ex.harmonic_integral) << ")\n";
  }
  write_json(dir / "steady_state.json", doc);
  write_manifest(dir, "steady-state", sc.resolved, outputs);
}

bool run_verify(const std::string& suite, const fs::path& dir, std::ostream& out) {
  prepare_dir(dir);
  const auto ids = suite_criteria(suite);
  json reports = json::array();
  bool all = true;
  for (int id : ids) {
    const auto r = run_criterion(id);
    all = all && r.passed;
    reports.push_back(to_json(r));
    char line[256];
    std::snprintf(line, sizeof line, "criterion %2d %s  %-48s %8.2fs", r.id, r.passed ? "PASS" : "FAIL",
                  r.title.c_str(), r.seconds);
    out << line << std::endl;
  }
  write_json(dir / "reports.json", reports);
  write_manifest(dir, "verify", json{{"suite", suite}, {"criteria", ids}}, {"reports.json"});
  return all;
}

std::vector<json> expand_sweep(const json& doc) {
  std::vector<json> cells;
  json base = doc;
  if (!doc.contains("sweep")) {
    cells.push_back(base);
    return cells;
  }
  const auto& axes = doc.at("sweep");
  if (!axes.is_object() || axes.empty()) throw ConfigError("key 'sweep' must be a non-empty object of axes");
  base.erase("sweep");
  std::vector<std::pair<std::string, std::vector<json>>> list;
  for (const auto& [axis, values] : axes.items()) {
    if (!values.is_array() || values.empty()) {
      throw ConfigError("key 'sweep." + axis + "' must be a non-empty array");
    }
    list.emplace_back(axis, std::vector<json>(values.begin(), values.end()));
  }
  std::vector<std::size_t> idx(list.size(), 0);
  while (true) {
    json cell = base;
    for (std::size_t a = 0; a < list.size(); ++a) set_dotted(cell, list[a].first, list[a].second[idx[a]]);
    cells.push_back(std::move(cell));
    std::size_t a = list.size();
    while (a > 0) {
      --a;
      if (++idx[a] < list[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return cells;
    }
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field and particle simulator for pulse-coupled oscillators", "pulsefield"};
  app.require_subcommand(1);
  std::string out_flag;
  app.add_option("--out", out_flag, "Output root (overrides PULSEFIELD_OUT)");

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Run the mean-field solver");
  sim->add_option("--config", config, "Scenario JSON")->required();
  auto* par = app.add_subcommand("particles", "Run the finite particle system");
  par->add_option("--config", config, "Scenario JSON")->required();
  auto* ste = app.add_subcommand("steady-state", "Solve for the stationary profile");
  ste->add_option("--config", config, "Scenario JSON")->required();

  std::string suite = "default";
  auto* ver = app.add_subcommand("verify", "Run the acceptance battery");
  ver->add_option("--suite", suite, "default or smoke")->check(CLI::IsMember({"default", "smoke"}));

  std::string sweep_run = "simulate";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* swp = app.add_subcommand("sweep", "Run every cell of a parameter grid");
  swp->add_option("--config", config, "Scenario JSON with a 'sweep' block")->required();
  swp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  swp->add_option("--run", sweep_run, "Subcommand per cell")
      ->check(CLI::IsMember({"simulate", "particles", "steady-state"}));

  for (auto* sub : {sim, par, ste, ver, swp}) sub->add_option("--out", out_flag, "Output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const fs::path root = output_root(out_flag);

  if (ver->parsed()) {
    try {
      return run_verify(suite, root / ("verify_" + suite), out) ? kOk : kVerificationFailure;
    } catch (...) {
      return classify(std::current_exception(), "", err);
    }
  }

  json doc;
  Scenario sc;
  try {
    doc = load_json_file(config);
    if (!swp->parsed()) sc = parse_scenario(doc);
  } catch (...) {
    return classify(std::current_exception(), "", err);
  }

  auto dispatch = [](const std::string& what, const Scenario& s, const fs::path& dir, std::ostream& sink) {
    if (what == "simulate") run_simulate(s, dir, sink);
    if (what == "particles") run_particles(s, dir, sink);
    if (what == "steady-state") run_steady_state(s, dir, sink);
  };

  if (!swp->parsed()) {
    const std::string what = sim->parsed() ? "simulate" : par->parsed() ? "particles" : "steady-state";
    try {
      dispatch(what, sc, root / sc.name, out);
      return kOk;
    } catch (...) {
      return classify(std::current_exception(), " in scenario '" + sc.name + "'", err);
    }
  }

  std::vector<Scenario> cells;
  try {
    for (const auto& cell : expand_sweep(doc)) cells.push_back(parse_scenario(cell));
  } catch (...) {
    return classify(std::current_exception(), "", err);
  }
  const fs::path sweep_dir = root / (cells.empty() ? std::string("sweep") : cells.front().name);

  std::atomic<std::size_t> next{0};
  std::mutex io;
  int worst = kOk;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%04zu", i);
      std::ostringstream local_out;
      std::ostringstream local_err;
      int code = kOk;
      try {
        dispatch(sweep_run, cells[i], sweep_dir / name, local_out);
      } catch (...) {
        code = classify(std::current_exception(), " in sweep " + std::string(name), local_err);
      }
      std::lock_guard lock(io);
      out << name << ": " << local_out.str();
      err << local_err.str();
      worst = std::max(worst, code);
    }
  };
  std::vector<std::jthread> pool;
  const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  return worst;
}

}  // namespace pulsefield::cli

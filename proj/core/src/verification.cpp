#include "pulsefield/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "pulsefield/errors.hpp"
#include "pulsefield/initial_data.hpp"
#include "pulsefield/particles.hpp"
#include "pulsefield/steady_state.hpp"

namespace pulsefield {

namespace {

constexpr double kPhiF = 1.0;

PhaseResponse concave_decreasing() { return PhaseResponse(Quadratic{1.2, -0.4, -0.1}, kPhiF); }
PhaseResponse affine_decay() { return PhaseResponse(Affine{-0.5, 1.0}, kPhiF); }
PhaseResponse constant_two() { return PhaseResponse(Affine{0.0, 2.0}, kPhiF); }
PhaseResponse convex_increasing() { return PhaseResponse(Quadratic{0.2, 0.3, 0.2}, kPhiF); }
PhaseResponse steep_affine_response() { return PhaseResponse(Affine{0.75, 0.2}, kPhiF); }

SolverConfig solver(std::size_t cells, std::size_t snapshot_every = 1) {
  SolverConfig c;
  c.cells = cells;
  c.snapshot_every = snapshot_every;
  c.snapshot_capacity = std::numeric_limits<std::size_t>::max();
  return c;
}

SuiteScenario make(std::string name, PhaseResponse k, QuantileProfile init, SolverConfig cfg, RunMode mode,
                   double tau_end) {
  return {std::move(name), std::move(k), std::move(init), cfg, mode, tau_end};
}

SuiteScenario concave_run(const std::string& name, std::size_t cells, double eps, int mode, double tau_end) {
  auto k = concave_decreasing();
  auto init = perturbed_steady(k, cells, eps, mode);
  return make(name, std::move(k), std::move(init), solver(cells), RunMode::original, tau_end);
}

TheoremReport simple_report(std::string theorem, std::string scenario, bool passed, double tolerance,
                            std::vector<std::pair<std::string, double>> measured,
                            std::vector<std::pair<std::string, double>> bounds, std::string note = "") {
  TheoremReport r;
  r.theorem = std::move(theorem);
  r.scenario = std::move(scenario);
  r.passed = passed;
  r.tolerance = tolerance;
  r.measured = std::move(measured);
  r.bounds = std::move(bounds);
  r.note = std::move(note);
  return r;
}

double sup_error_against(const QuantileProfile& p, const std::function<double(double)>& exact) {
  double err = 0.0;
  for (std::size_t j = 0; j <= p.cells(); ++j) err = std::max(err, std::abs(p.q[j] - exact(p.eta(j))));
  return err;
}

std::vector<TheoremReport> criterion_steady_constant() {
  const PhaseResponse k(Affine{0.0, 0.5}, kPhiF);
  const auto ss = solve_steady_state(k, 200);
  const double err_n = std::abs(ss.n_star - 2.0);
  const double err_q = sup_error_against(ss.profile, [](double eta) { return kPhiF * eta; });
  return {simple_report("steady_state_constant", "constant_half", err_n <= 1e-8 && err_q <= 1e-8, 1e-8,
                        {{"n_star", ss.n_star}, {"n_star_error", err_n}, {"profile_sup_error", err_q}},
                        {{"n_star_exact", 2.0}})};
}

std::vector<TheoremReport> criterion_steady_affine() {
  const double slope = -0.5, intercept = 1.0;
  const PhaseResponse k(Affine{slope, intercept}, kPhiF);
  const auto ss = solve_steady_state(k, 200);
  const double exact = 1.0 / (kPhiF * slope / std::expm1(slope) - intercept);
  const double err = std::abs(ss.n_star - exact);
  return {simple_report("steady_state_affine", "affine_decay", err <= 1e-8, 1e-8,
                        {{"n_star", ss.n_star}, {"n_star_error", err}}, {{"n_star_closed_form", exact}})};
}

std::vector<TheoremReport> criterion_l2_rate() {
  const auto a = suite_scenario("affine_decay_a").execute();
  const auto b = suite_scenario("affine_decay_b").execute();
  return {l2_rate_check(a, b, affine_decay(), 1e-3, "affine_decay_a/b")};
}

std::vector<TheoremReport> criterion_bv_band() {
  const auto a = suite_scenario("concave_a").execute();
  const auto b = suite_scenario("concave_b").execute();
  return {contraction_band(a, b, concave_decreasing(), kFrozenSlackC, "concave_a/b").report};
}

std::vector<TheoremReport> criterion_n_bounds() {
  const auto sc = suite_scenario("concave_long");
  const auto r = sc.execute();
  auto rep = n_bounds_check(r, sc.k, 10.0 / static_cast<double>(sc.solver.cells), sc.name);
  const bool reached = r.outcome == Outcome::completed;
  rep.passed = rep.passed && reached;
  if (!reached) rep.note += (rep.note.empty() ? "" : "; ") + std::string("run stopped before tau_end");
  return {rep};
}

std::vector<TheoremReport> criterion_characteristics() {
  const auto sc = suite_scenario("constant_two");
  const auto r = sc.execute();
  const double m = static_cast<double>(sc.solver.cells);
  const bool blown = r.outcome == Outcome::blown_up && r.tau_star.has_value();
  const double tau_star = blown ? *r.tau_star : std::numeric_limits<double>::quiet_NaN();
  const double bound = sc.k.constants().harmonic_integral;
  std::vector<TheoremReport> out;
  out.push_back(simple_report("blowup_characteristics", sc.name, blown && tau_star <= bound + 2.0 / m, 2.0 / m,
                              {{"tau_star", tau_star}}, {{"harmonic_integral", bound}},
                              blown ? "" : "run did not report a blow-up"));
  out.push_back(blowup_bounds(sc.k, sc.initial, &r, sc.name));
  return out;
}

std::vector<TheoremReport> criterion_expansion() {
  const auto sc = suite_scenario("convex_growth");
  const auto r = sc.execute();
  std::vector<TheoremReport> out;
  const bool blown = r.outcome == Outcome::blown_up;
  auto bounds = blowup_bounds(sc.k, sc.initial, &r, sc.name);
  bool has_bv = false;
  for (const auto& [name, v] : bounds.bounds) has_bv = has_bv || name == "bv";
  bounds.passed = bounds.passed && blown && has_bv;
  out.push_back(bounds);

  const auto ss = solve_steady_state(sc.k, sc.solver.cells);
  DistanceSeries series;
  for (const auto& s : r.snapshots) {
    series.tau.push_back(s.tau);
    series.distance.push_back(bv_distance(QuantileProfile{s.q, s.z, false}, ss.profile));
  }
  const double rate = fitted_log_rate(series);
  const double k_min = sc.k.constants().k_min;
  out.push_back(simple_report("bv_expansion_rate", sc.name, rate >= k_min - 0.05, 0.05,
                              {{"fitted_rate", rate}, {"d0", series.distance.front()}},
                              {{"k_min", k_min}, {"k_max", sc.k.constants().k_max}}));
  return out;
}

std::vector<TheoremReport> criterion_invariants() {
  std::vector<TheoremReport> out;
  std::vector<std::pair<std::string, TrajectoryRecord>> runs;
  double worst_boundary = 0.0, worst_compat = 0.0, tol = 0.0;
  std::size_t nonmonotone = 0, rows = 0;
  std::string worst_compat_scenario;
  for (const auto& sc : suite_scenarios()) {
    auto r = sc.execute();
    tol = std::max(tol, sc.solver.newton_tol);
    const std::size_t limit = r.first_nonphysical_row.value_or(r.rows.size());
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& row = r.rows[i];
      ++rows;
      if (!row.monotone) ++nonmonotone;
      worst_boundary = std::max(worst_boundary, std::abs(row.res_boundary) / sc.solver.newton_tol);
      const double c = std::abs(row.res_compat) / sc.solver.newton_tol;
      if (c > worst_compat) {
        worst_compat = c;
        worst_compat_scenario = sc.name;
      }
    }
    runs.emplace_back(sc.name, std::move(r));
  }
  const double n_rows = static_cast<double>(rows);
  out.push_back(simple_report("q_monotone", "all", nonmonotone == 0, 0.0,
                              {{"nonmonotone_rows", static_cast<double>(nonmonotone)}, {"rows", n_rows}}, {}));
  out.push_back(simple_report("boundary_residual", "all", worst_boundary <= 1.0, tol,
                              {{"max_abs_res_boundary_over_newton_tol", worst_boundary}},
                              {{"limit_in_newton_tol", 1.0}}));
  out.push_back(simple_report("compatibility_residual", "all", worst_compat <= 10.0, 10.0 * tol,
                              {{"max_abs_res_compat_over_newton_tol", worst_compat}},
                              {{"limit_in_newton_tol", 10.0}}, "worst scenario: " + worst_compat_scenario));
  double worst_bv = 0.0, bound = 0.0;
  bool bv_ok = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      if (runs[i].second.cells != runs[j].second.cells) continue;
      const auto rep = bounded_bv_check(runs[i].second, runs[j].second, runs[i].first + "/" + runs[j].first);
      worst_bv = std::max(worst_bv, rep.measured_value("max_bv_distance") / rep.bound_value("bound"));
      bv_ok = bv_ok && rep.passed;
      bound = rep.bound_value("bound");
    }
  }
  out.push_back(simple_report("bounded_bv", "all pairs on a common grid", bv_ok, bound,
                              {{"max_distance_over_bound", worst_bv}}, {{"ratio_limit", 1.0}}));
  return out;
}

std::vector<TheoremReport> criterion_self_convergence() {
  std::vector<QuantileProfile> finals;
  for (std::size_t cells : {200u, 400u, 800u}) {
    auto r = concave_run("concave_selfconv", cells, 0.05, 1, 1.0).execute();
    finals.push_back(r.final_state.profile);
  }
  auto sup_diff = [](const QuantileProfile& coarse, const QuantileProfile& fine) {
    const std::size_t ratio = fine.cells() / coarse.cells();
    double d = 0.0;
    for (std::size_t j = 0; j <= coarse.cells(); ++j) d = std::max(d, std::abs(coarse.q[j] - fine.q[ratio * j]));
    return d;
  };
  const double e1 = sup_diff(finals[0], finals[1]);
  const double e2 = sup_diff(finals[1], finals[2]);
  const double ratio = e1 / e2;
  return {simple_report("self_convergence", "concave_selfconv", ratio >= 1.8, 1.8,
                        {{"sup_diff_200_400", e1}, {"sup_diff_400_800", e2}, {"ratio", ratio}},
                        {{"min_ratio", 1.8}})};
}

QuantileProfile profile_at_time(const TrajectoryRecord& r, double t) {
  for (std::size_t i = 1; i < r.snapshots.size(); ++i) {
    const auto& a = r.snapshots[i - 1];
    const auto& b = r.snapshots[i];
    if (a.t <= t && t <= b.t) {
      const double w = b.t > a.t ? (t - a.t) / (b.t - a.t) : 0.0;
      QuantileProfile p;
      p.q.resize(a.q.size());
      p.z.resize(a.z.size());
      for (std::size_t j = 0; j < a.q.size(); ++j) {
        p.q[j] = (1.0 - w) * a.q[j] + w * b.q[j];
        p.z[j] = (1.0 - w) * a.z[j] + w * b.z[j];
      }
      return p;
    }
  }
  throw InsufficientHistory("mean-field run does not cover the requested physical time");
}

std::vector<TheoremReport> criterion_particles() {
  const PhaseResponse k(Affine{0.0, 0.5}, kPhiF);
  const double t_end = 5.0;
  const std::size_t cells = 200;
  const auto ss = solve_steady_state(k, cells);
  auto cfg = solver(cells);
  const auto mf = run(make_initial_state(ss.profile, k, RunMode::original), t_end * ss.n_star + 0.5, k, cfg);
  const auto mf_profile = profile_at_time(mf, t_end);

  std::vector<TheoremReport> out;
  double w1_small = 0.0, w1_large = 0.0, rate_large = 0.0;
  for (std::size_t count : {1000u, 10000u}) {
    auto e = init_from_profile(ss.profile, kPhiF, count, 20261019);
    e.run_until(k, t_end);
    const double w1 = wasserstein(empirical_quantile(e, cells), mf_profile, LpNorm::one);
    if (count == 1000) {
      w1_small = w1;
    } else {
      w1_large = w1;
      rate_large = empirical_firing_rate(e, t_end);
    }
  }
  const double rel = std::abs(rate_large - ss.n_star) / ss.n_star;
  out.push_back(simple_report("particle_firing_rate", "constant_half_particles", rel <= 0.05, 0.05,
                              {{"empirical_rate", rate_large}, {"relative_error", rel}}, {{"n_star", ss.n_star}}));
  out.push_back(simple_report("particle_w1_trend", "constant_half_particles", w1_large < w1_small, 0.0,
                              {{"w1_n1000", w1_small}, {"w1_n10000", w1_large}}, {}));
  return out;
}

std::vector<TheoremReport> criterion_relaxed() {
  const auto sc = suite_scenario("steep_affine_relaxed");
  const auto r = sc.execute();
  std::vector<TheoremReport> out;
  if (!r.first_nonphysical_row || !r.tau_star) {
    out.push_back(simple_report("relaxed_zero_crossing", sc.name, false, 5.0, {}, {}, "no zero crossing recorded"));
    return out;
  }
  const std::size_t cross = *r.first_nonphysical_row;
  double max_prev = 0.0;
  for (std::size_t i = 1; i < cross; ++i) {
    max_prev = std::max(max_prev, std::abs(r.rows[i].n_tilde - r.rows[i - 1].n_tilde));
  }
  const double jump = std::abs(r.rows[cross].n_tilde - r.rows[cross - 1].n_tilde);
  const bool sign_change = r.rows[cross - 1].n_tilde > 0.0 && r.rows[cross].n_tilde <= 0.0;
  out.push_back(simple_report("relaxed_zero_crossing", sc.name, sign_change && jump <= 5.0 * max_prev, 5.0,
                              {{"tau_star", *r.tau_star},
                               {"n_tilde_before", r.rows[cross - 1].n_tilde},
                               {"n_tilde_after", r.rows[cross].n_tilde},
                               {"step_change_at_crossing", jump},
                               {"max_step_change_before", max_prev}},
                              {{"max_ratio", 5.0}}));
  double min_z = std::numeric_limits<double>::infinity(), at = 0.0;
  for (std::size_t i = cross; i < r.rows.size(); ++i) {
    if (r.rows[i].min_z < min_z) {
      min_z = r.rows[i].min_z;
      at = r.rows[i].tau;
    }
  }
  out.push_back(simple_report("relaxed_nonmonotone", sc.name, min_z < 0.0, 0.0,
                              {{"min_z_after_tau_star", min_z}, {"tau_of_min", at}}, {{"tau_star", *r.tau_star}}));
  return out;
}

std::vector<TheoremReport> criterion_integral_equation() {
  const auto k = concave_decreasing();
  const auto coarse = concave_run("concave_integral_100", 100, 0.05, 1, 3.0).execute();
  const auto fine = concave_run("concave_integral_200", 200, 0.05, 1, 3.0).execute();
  const auto rc = integral_equation_residual(coarse, k);
  const auto rf = integral_equation_residual(fine, k);
  const double ratio = rc.max_residual / rf.max_residual;
  std::vector<TheoremReport> out;
  out.push_back(simple_report("integral_equation_halving", "concave_integral", ratio >= 2.0, 2.0,
                              {{"max_residual_m100", rc.max_residual},
                               {"max_residual_m200", rf.max_residual},
                               {"ratio", ratio},
                               {"kernel_identity_m200", rf.max_kernel_identity_residual}},
                              {{"min_ratio", 2.0}}));
  const double min_kernel = std::min(rc.min_kernel, rf.min_kernel);
  out.push_back(simple_report("kernel_nonnegative", "concave_integral", min_kernel >= 0.0, 0.0,
                              {{"min_kernel", min_kernel}}, {}));
  return out;
}

struct CriterionSpec {
  int id;
  const char* title;
  double budget;
  std::vector<TheoremReport> (*body)();
};

const std::vector<CriterionSpec>& criteria() {
  static const std::vector<CriterionSpec> specs = {
      {1, "steady state for constant K", 1.0, &criterion_steady_constant},
      {2, "steady state for affine K", 1.0, &criterion_steady_affine},
      {3, "exact modified L2 rate for affine K", 30.0, &criterion_l2_rate},
      {4, "BV contraction band", 60.0, &criterion_bv_band},
      {5, "global bounds on the multiplier", 30.0, &criterion_n_bounds},
      {6, "blow-up bound via characteristics and moments", 10.0, &criterion_characteristics},
      {7, "expansion and blow-up with k_min > 0", 60.0, &criterion_expansion},
      {8, "structural invariants on every suite scenario", 0.0, &criterion_invariants},
      {9, "self-convergence", 60.0, &criterion_self_convergence},
      {10, "particle and mean-field consistency", 120.0, &criterion_particles},
      {11, "relaxed continuation through blow-up", 30.0, &criterion_relaxed},
      {12, "integral equation residual", 60.0, &criterion_integral_equation},
  };
  return specs;
}

}  // namespace

TrajectoryRecord SuiteScenario::execute() const {
  return run(make_initial_state(initial, k, mode), tau_end, k, solver);
}

std::vector<SuiteScenario> suite_scenarios() {
  std::vector<SuiteScenario> out;
  {
    auto k = affine_decay();
    out.push_back(make("affine_decay_a", k, perturbed_steady(k, 800, 0.05, 1), solver(800), RunMode::original, 2.0));
    out.push_back(make("affine_decay_b", k, perturbed_steady(k, 800, -0.04, 2), solver(800), RunMode::original, 2.0));
  }
  out.push_back(concave_run("concave_a", 200, 0.05, 1, 3.0));
  out.push_back(concave_run("concave_b", 200, -0.03, 2, 3.0));
  out.push_back(concave_run("concave_long", 200, 0.05, 1, 5.0));
  {
    auto k = constant_two();
    auto init = beta_like(k, 200, 3.0, 3.0, 2.0);
    out.push_back(make("constant_two", std::move(k), std::move(init), solver(200), RunMode::original, 1.0));
  }
  {
    auto k = convex_increasing();
    auto init = perturbed_steady(k, 200, 0.05, 1);
    out.push_back(make("convex_growth", std::move(k), std::move(init), solver(200, 4), RunMode::original, 60.0));
  }
  {
    auto k = steep_affine_response();
    auto init = beta_like(k, 200, 3.0, 3.0, 1.0);
    out.push_back(make("steep_affine_relaxed", std::move(k), std::move(init), solver(200), RunMode::relaxed, 4.0));
  }
  return out;
}

SuiteScenario suite_scenario(const std::string& name) {
  for (auto& sc : suite_scenarios()) {
    if (sc.name == name) return sc;
  }
  throw InvalidArgument("unknown suite scenario '" + name + "'");
}

CriterionResult run_criterion(int id) {
  for (const auto& spec : criteria()) {
    if (spec.id != id) continue;
    CriterionResult res;
    res.id = id;
    res.title = spec.title;
    res.budget_seconds = spec.budget;
    const auto start = std::chrono::steady_clock::now();
    try {
      res.reports = spec.body();
    } catch (const Error& e) {
      res.reports.push_back(simple_report("criterion_error", spec.title, false, 0.0, {}, {}, e.what()));
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.passed = !res.reports.empty() &&
                 std::all_of(res.reports.begin(), res.reports.end(), [](const auto& r) { return r.passed; }) &&
                 (spec.budget <= 0.0 || res.seconds < spec.budget);
    return res;
  }
  throw InvalidArgument("unknown criterion " + std::to_string(id));
}

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "default") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  if (suite == "smoke") return {1, 2, 6};
  throw InvalidArgument("unknown suite '" + std::string(suite) + "'");
}

std::vector<CriterionResult> run_suite(std::string_view suite) {
  std::vector<CriterionResult> out;
  for (int id : suite_criteria(suite)) out.push_back(run_criterion(id));
  return out;
}

}  // namespace pulsefield

#include "pulsefield/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulsefield/errors.hpp"
#include "pulsefield/steady_state.hpp"

namespace pulsefield {

namespace {

QuantileProfile as_profile(const Snapshot& s) { return {s.q, s.z, false}; }

std::size_t physical_limit(const TrajectoryRecord& r) {
  if (r.first_nonphysical_row) return r.rows[*r.first_nonphysical_row].step;
  return std::numeric_limits<std::size_t>::max();
}

void require_same_grid(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.cells != b.cells) throw GridMismatch("trajectories use different grids");
}

}  // namespace

double TheoremReport::measured_value(const std::string& key) const {
  for (const auto& [k, v] : measured) {
    if (k == key) return v;
  }
  throw InvalidArgument("report has no measured value '" + key + "'");
}

double TheoremReport::bound_value(const std::string& key) const {
  for (const auto& [k, v] : bounds) {
    if (k == key) return v;
  }
  throw InvalidArgument("report has no bound '" + key + "'");
}

DistanceSeries common_distance_series(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                      double (*metric)(const QuantileProfile&, const QuantileProfile&)) {
  require_same_grid(a, b);
  const std::size_t limit = std::min(physical_limit(a), physical_limit(b));
  DistanceSeries out;
  for (const auto& sa : a.snapshots) {
    if (sa.step >= limit) break;
    const Snapshot* sb = b.snapshot_at_step(sa.step);
    if (sb == nullptr) continue;
    out.tau.push_back(sa.tau);
    out.distance.push_back(metric(as_profile(sa), as_profile(*sb)));
  }
  return out;
}

double fitted_log_rate(const DistanceSeries& series) {
  if (series.tau.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double span = series.tau.back() - series.tau.front();
  const double cutoff = series.tau.front() + 0.5 * span;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < series.tau.size(); ++i) {
    if (series.tau[i] > cutoff + 1e-12 || !(series.distance[i] > 0.0)) continue;
    const double x = series.tau[i], y = std::log(series.distance[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ContractionBand contraction_band(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k,
                                 double slack_c, const std::string& scenario) {
  ContractionBand out;
  out.series = common_distance_series(a, b, &bv_distance);
  if (out.series.tau.empty()) throw InsufficientHistory("trajectories share no snapshots");
  const double d0 = out.series.distance.front();
  if (d0 < 1e-12) throw DegenerateDistance("initial BV distance is below 1e-12");
  const auto& c = k.constants();
  out.k_min = c.k_min;
  out.k_max = c.k_max;
  const double m = static_cast<double>(a.cells);
  const double tau0 = out.series.tau.front();
  for (std::size_t i = 0; i < out.series.tau.size(); ++i) {
    const double tau = out.series.tau[i] - tau0;
    const double slack = std::pow(1.0 + slack_c / m, tau);
    const double upper = std::exp(c.k_max * tau) * d0 * slack;
    const double lower = std::exp(c.k_min * tau) * d0 / slack;
    out.worst_upper_ratio = std::max(out.worst_upper_ratio, out.series.distance[i] / upper);
    out.worst_lower_ratio = std::max(out.worst_lower_ratio, lower / out.series.distance[i]);
  }
  out.fitted_rate = fitted_log_rate(out.series);
  auto& r = out.report;
  r.theorem = "bv_contraction_band";
  r.scenario = scenario;
  r.measured = {{"fitted_rate", out.fitted_rate},
                {"worst_upper_ratio", out.worst_upper_ratio},
                {"worst_lower_ratio", out.worst_lower_ratio},
                {"d0", d0},
                {"tau_span", out.series.tau.back() - tau0}};
  r.bounds = {{"k_min", c.k_min}, {"k_max", c.k_max}, {"slack_c", slack_c}};
  r.tolerance = slack_c;
  r.passed = out.worst_upper_ratio <= 1.0 && out.worst_lower_ratio <= 1.0;
  r.note = "pointwise band with multiplicative slack (1 + C/M)^tau";
  return out;
}

double calibrate_slack_c(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k) {
  const auto series = common_distance_series(a, b, &bv_distance);
  if (series.tau.empty()) throw InsufficientHistory("trajectories share no snapshots");
  const double d0 = series.distance.front();
  if (d0 < 1e-12) throw DegenerateDistance("initial BV distance is below 1e-12");
  const auto& c = k.constants();
  const double m = static_cast<double>(a.cells);
  double worst = 0.0;
  for (std::size_t i = 1; i < series.tau.size(); ++i) {
    const double tau = series.tau[i] - series.tau.front();
    if (tau <= 0.0) continue;
    const double up = series.distance[i] / (std::exp(c.k_max * tau) * d0);
    const double lo = std::exp(c.k_min * tau) * d0 / series.distance[i];
    const double ratio = std::max(up, lo);
    if (ratio > 1.0) worst = std::max(worst, m * (std::pow(ratio, 1.0 / tau) - 1.0));
  }
  return worst;
}

TheoremReport l2_rate_check(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k,
                            double rel_tol, const std::string& scenario) {
  const auto slope = k.affine_slope();
  if (!slope) throw NotAffine("exact L2 rate applies only to affine K");
  const auto series = common_distance_series(a, b, &modified_l2_distance);
  if (series.tau.empty()) throw InsufficientHistory("trajectories share no snapshots");
  const double d0 = series.distance.front();
  if (d0 < 1e-12) throw DegenerateDistance("initial modified L2 distance is below 1e-12");
  double worst = 0.0;
  for (std::size_t i = 0; i < series.tau.size(); ++i) {
    const double expected = std::exp(*slope * (series.tau[i] - series.tau.front())) * d0;
    worst = std::max(worst, std::abs(series.distance[i] / expected - 1.0));
  }
  TheoremReport r;
  r.theorem = "l2_exact_rate";
  r.scenario = scenario;
  r.measured = {{"max_relative_error", worst},
                {"d0", d0},
                {"d_end", series.distance.back()},
                {"tau_span", series.tau.back() - series.tau.front()},
                {"fitted_rate", fitted_log_rate(series)}};
  r.bounds = {{"slope", *slope}};
  r.tolerance = rel_tol;
  r.passed = worst <= rel_tol;
  return r;
}

double moment(const QuantileProfile& profile, const PhaseResponse& k, MomentKind kind) {
  if (kind == MomentKind::identity) return trapezoid_unit(profile.q);
  const HarmonicPrimitive m(k);
  std::vector<double> v(profile.q.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = m(profile.q[j]);
  return trapezoid_unit(v);
}

MomentSeries moment_series(const TrajectoryRecord& traj, const PhaseResponse& k, MomentKind kind) {
  MomentSeries out;
  const HarmonicPrimitive prim(k);
  const double phi_f = k.phi_f();
  const std::size_t nodes = traj.cells + 1;
  std::vector<double> buf(nodes), w(nodes);
  std::vector<double> rhs_fixed, rhs_coef;
  for (const auto& s : traj.snapshots) {
    double fixed = 0.0, coef = 0.0;
    if (kind == MomentKind::identity) {
      for (std::size_t j = 0; j < nodes; ++j) buf[j] = k.value(s.q[j]);
      fixed = trapezoid_unit(buf) - phi_f;
      coef = 1.0;
      out.value.push_back(trapezoid_unit(s.q));
    } else {
      for (std::size_t j = 0; j < nodes; ++j) {
        buf[j] = prim(s.q[j]);
        w[j] = 1.0 / k.value(s.q[j]);
      }
      fixed = 1.0 - prim.total();
      coef = trapezoid_unit(w);
      out.value.push_back(trapezoid_unit(buf));
    }
    out.tau.push_back(s.tau);
    rhs_fixed.push_back(fixed);
    rhs_coef.push_back(coef);
  }
  for (std::size_t i = 1; i + 1 < traj.snapshots.size(); ++i) {
    const auto& prev = traj.snapshots[i - 1];
    const auto& next = traj.snapshots[i + 1];
    if (next.step - traj.snapshots[i].step != traj.snapshots[i].step - prev.step) continue;
    // Mean multiplier over the steps spanned by the central difference.
    double n_mean = 0.0;
    std::size_t count = 0;
    for (std::size_t st = prev.step + 1; st <= next.step && st < traj.rows.size(); ++st) {
      n_mean += traj.rows[st].n_tilde;
      ++count;
    }
    if (count == 0) continue;
    n_mean /= static_cast<double>(count);
    const double d = (out.value[i + 1] - out.value[i - 1]) / (next.tau - prev.tau);
    const double rhs = rhs_fixed[i] + n_mean * rhs_coef[i];
    out.derivative_tau.push_back(traj.snapshots[i].tau);
    out.derivative.push_back(d);
    out.rhs.push_back(rhs);
    out.max_residual = std::max(out.max_residual, std::abs(d - rhs));
  }
  return out;
}

TheoremReport blowup_bounds(const PhaseResponse& k, const QuantileProfile& q_init, const TrajectoryRecord* traj,
                            const std::string& scenario) {
  TheoremReport r;
  r.theorem = "blowup_bounds";
  r.scenario = scenario;
  const auto& c = k.constants();
  const double phi_f = k.phi_f();
  const double harmonic = c.harmonic_integral;
  const double mean_q = moment(q_init, k, MomentKind::identity);
  const double mean_m = moment(q_init, k, MomentKind::inverse_k);
  const double m = static_cast<double>(q_init.cells());
  const double slack = 2.0 / m;
  r.tolerance = slack;
  std::vector<std::string> skipped;
  std::vector<std::string> violated;
  std::size_t applicable = 0;

  std::optional<double> tau_star, t_star;
  double tau_reached = 0.0;
  if (traj != nullptr) {
    tau_star = traj->tau_star;
    t_star = traj->t_star;
    tau_reached = traj->rows.empty() ? 0.0 : traj->rows.back().tau;
    if (tau_star) r.measured.push_back({"tau_star", *tau_star});
    if (t_star) r.measured.push_back({"t_star", *t_star});
    r.measured.push_back({"tau_reached", tau_reached});
  }
  // An upper bound on τ* is violated when the run blew up later, or survived past it.
  auto check_upper = [&](const std::string& name, double bound) {
    ++applicable;
    r.bounds.push_back({name, bound});
    if (traj == nullptr) return;
    const double observed = tau_star ? *tau_star : tau_reached;
    if (observed > bound + slack) violated.push_back(name);
  };

  if (harmonic <= 1.0 + Existence::kBoundaryTol) {
    check_upper("characteristics", harmonic);
  } else {
    skipped.push_back("characteristics (harmonic integral above 1)");
  }
  if (c.min_value > phi_f) {
    check_upper("moment1_apriori", (phi_f - mean_q) / (c.min_value - phi_f));
  }
  if (harmonic < 1.0) {
    check_upper("moment2_apriori", (harmonic - mean_m) / (1.0 - harmonic));
  }

  // Inequalities along the run up to τ*, with ∫Ñ dτ = t*.
  if (traj != nullptr && tau_star && t_star) {
    const double lhs1 = (c.min_value - phi_f) * *tau_star + *t_star;
    const double rhs1 = phi_f - mean_q;
    const double tol1 = slack * (1.0 + std::abs(c.min_value - phi_f));
    ++applicable;
    r.measured.push_back({"moment1_lhs", lhs1});
    r.bounds.push_back({"moment1_rhs", rhs1});
    if (lhs1 > rhs1 + tol1) violated.push_back("moment1");
    const double lhs2 = (1.0 - harmonic) * *tau_star + *t_star / c.max_value;
    const double rhs2 = harmonic - mean_m;
    const double tol2 = slack * (1.0 + std::abs(1.0 - harmonic) + 1.0 / c.max_value);
    ++applicable;
    r.measured.push_back({"moment2_lhs", lhs2});
    r.bounds.push_back({"moment2_rhs", rhs2});
    if (lhs2 > rhs2 + tol2) violated.push_back("moment2");
  } else if (traj != nullptr) {
    skipped.push_back("moment inequalities (no blow-up observed)");
  }

  const auto ex = steady_state_exists(k);
  if (ex.exists && c.k_min > 0.0) {
    const auto ss = solve_steady_state(k, q_init.cells());
    const double d = bv_distance(q_init, ss.profile);
    r.measured.push_back({"bv_distance_to_steady", d});
    if (d > 0.0) {
      check_upper("bv", std::log(2.0 * phi_f / d) / c.k_min);
    } else {
      skipped.push_back("bv (initial data equals the steady state)");
    }
  } else {
    skipped.push_back("bv (needs a steady state and k_min > 0)");
  }

  if (applicable == 0) {
    std::string why;
    for (const auto& s : skipped) why += (why.empty() ? "" : "; ") + s;
    throw InapplicableBound("no blow-up bound applies: " + why);
  }
  r.passed = violated.empty();
  std::string note;
  for (const auto& v : violated) note += (note.empty() ? "violated: " : ", ") + v;
  for (const auto& s : skipped) note += (note.empty() ? "skipped: " : "; skipped: ") + s;
  r.note = note;
  return r;
}

TheoremReport bounded_bv_check(const QuantileProfile& a, const QuantileProfile& b, double phi_f,
                               const std::string& scenario) {
  TheoremReport r;
  r.theorem = "bounded_bv";
  r.scenario = scenario;
  const double d = bv_distance(a, b);
  const double bound = 2.0 * phi_f * (1.0 + 1.0 / static_cast<double>(a.cells()));
  r.measured = {{"max_bv_distance", d}};
  r.bounds = {{"bound", bound}};
  r.tolerance = 2.0 * phi_f / static_cast<double>(a.cells());
  r.passed = d <= bound;
  return r;
}

TheoremReport bounded_bv_check(const TrajectoryRecord& a, const TrajectoryRecord& b, const std::string& scenario) {
  const auto series = common_distance_series(a, b, &bv_distance);
  TheoremReport r;
  r.theorem = "bounded_bv";
  r.scenario = scenario;
  const double bound = 2.0 * a.phi_f * (1.0 + 1.0 / static_cast<double>(a.cells));
  const double worst =
      series.distance.empty() ? 0.0 : *std::max_element(series.distance.begin(), series.distance.end());
  r.measured = {{"max_bv_distance", worst}, {"snapshots", static_cast<double>(series.tau.size())}};
  r.bounds = {{"bound", bound}};
  r.tolerance = 2.0 * a.phi_f / static_cast<double>(a.cells);
  r.passed = worst <= bound;
  return r;
}

TheoremReport n_bounds_check(const TrajectoryRecord& traj, const PhaseResponse& k, double tol,
                             const std::string& scenario) {
  const auto h = h_profile(traj.initial, k);
  const double lo = *std::min_element(h.values.begin(), h.values.end());
  const double hi = *std::max_element(h.values.begin(), h.values.end());
  double n_min = std::numeric_limits<double>::infinity(), n_max = -n_min;
  for (const auto& row : traj.rows) {
    n_min = std::min(n_min, row.n_tilde);
    n_max = std::max(n_max, row.n_tilde);
  }
  TheoremReport r;
  r.theorem = "global_n_bounds";
  r.scenario = scenario;
  r.measured = {{"n_tilde_min", n_min}, {"n_tilde_max", n_max}, {"tau_reached", traj.rows.back().tau}};
  r.bounds = {{"h_init_min", lo}, {"h_init_max", hi}};
  r.tolerance = tol;
  r.passed = n_min >= lo - tol && n_max <= hi + tol;
  if (!(lo > 0.0)) r.note = "H_init is not positive; bounds are outside their hypotheses";
  if (k.constants().max_slope > 0.0) r.note += (r.note.empty() ? "" : "; ") + std::string("K is not non-increasing");
  return r;
}

}  // namespace pulsefield

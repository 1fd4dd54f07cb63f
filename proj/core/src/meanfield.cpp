#include "pulsefield/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pulsefield/errors.hpp"

namespace pulsefield {

namespace {

struct FlowResult {
  double q = 0.0;
  double integral = 0.0;  // ∫K'(q(s)) ds or ∂q/∂Ñ, depending on the caller
};

// dq/ds = K(q) + f together with L' = K'(q).
FlowResult flow(const PhaseResponse& k, double q, double f, double h, int substeps) {
  const double dt = h / substeps;
  double l = 0.0;
  for (int s = 0; s < substeps; ++s) {
    const double k1 = k.value(q) + f;
    const double l1 = k.slope(q);
    const double q2 = q + 0.5 * dt * k1;
    const double k2 = k.value(q2) + f;
    const double l2 = k.slope(q2);
    const double q3 = q + 0.5 * dt * k2;
    const double k3 = k.value(q3) + f;
    const double l3 = k.slope(q3);
    const double q4 = q + dt * k3;
    const double k4 = k.value(q4) + f;
    const double l4 = k.slope(q4);
    q += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    l += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  return {q, l};
}

// Same flow with the sensitivity y = ∂q/∂f, y' = K'(q)·y + 1, y(0) = 0.
FlowResult flow_sensitivity(const PhaseResponse& k, double q, double f, double h, int substeps) {
  const double dt = h / substeps;
  double y = 0.0;
  for (int s = 0; s < substeps; ++s) {
    const double k1 = k.value(q) + f;
    const double y1 = k.slope(q) * y + 1.0;
    const double q2 = q + 0.5 * dt * k1;
    const double ys2 = y + 0.5 * dt * y1;
    const double k2 = k.value(q2) + f;
    const double y2 = k.slope(q2) * ys2 + 1.0;
    const double q3 = q + 0.5 * dt * k2;
    const double ys3 = y + 0.5 * dt * y2;
    const double k3 = k.value(q3) + f;
    const double y3 = k.slope(q3) * ys3 + 1.0;
    const double q4 = q + dt * k3;
    const double ys4 = y + dt * y3;
    const double k4 = k.value(q4) + f;
    const double y4 = k.slope(q4) * ys4 + 1.0;
    q += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    y += dt / 6.0 * (y1 + 2.0 * y2 + 2.0 * y3 + y4);
  }
  return {q, y};
}

TrajectoryRow make_row(const MeanFieldState& s, const PhaseResponse& k) {
  const auto& p = s.profile;
  const std::size_t m = p.cells();
  TrajectoryRow row;
  row.step = s.step;
  row.tau = s.tau;
  row.t = s.t;
  row.n_tilde = s.n_tilde;
  row.rate = s.n_tilde > 0.0 ? 1.0 / s.n_tilde : std::numeric_limits<double>::quiet_NaN();
  const auto [lo, hi] = std::minmax_element(p.z.begin(), p.z.end());
  row.min_z = *lo;
  row.max_z = *hi;
  row.res_compat = p.z[m] - p.z[0] - (k.value(k.phi_f()) - k.value(0.0));
  row.res_boundary = p.q[m] - k.phi_f();
  for (std::size_t j = 0; j < m; ++j) {
    if (p.q[j + 1] < p.q[j]) {
      row.monotone = false;
      break;
    }
  }
  return row;
}

Snapshot make_snapshot(const MeanFieldState& s) {
  return {s.step, s.tau, s.t, s.n_tilde, s.profile.q, s.profile.z};
}

}  // namespace

void SolverConfig::validate() const {
  if (cells < 8) throw InvalidArgument("solver needs at least 8 cells");
  if (!(newton_tol > 0.0)) throw InvalidArgument("newton_tol must be positive");
  if (newton_max_iter < 1) throw InvalidArgument("newton_max_iter must be at least 1");
  if (!(blowup_eps >= 0.0)) throw InvalidArgument("blowup_eps must be non-negative");
  if (substeps < 1) throw InvalidArgument("substeps must be at least 1");
}

std::size_t SolverConfig::effective_capacity() const {
  if (snapshot_capacity != 0) return snapshot_capacity;
  return cells <= 400 ? std::numeric_limits<std::size_t>::max() : 2 * (cells + 1);
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::completed: return "Completed";
    case Outcome::blown_up: return "BlownUp";
    case Outcome::relaxed_continued: return "RelaxedContinued";
    default: return "StepLimit";
  }
}

std::string to_string(RunMode m) { return m == RunMode::original ? "original" : "relaxed"; }

InitialCheck validate_initial(const QuantileProfile& q_init, const PhaseResponse& k) {
  const double phi_f = k.phi_f();
  const std::size_t m = q_init.cells();
  if (m < 1 || q_init.z.size() != q_init.q.size()) throw InvalidArgument("profile has inconsistent sizes");
  if (q_init.generalized) throw InvalidArgument("generalized profiles cannot seed the PDE solver");
  if (std::abs(q_init.q[0]) > 1e-9 * phi_f || std::abs(q_init.q[m] - phi_f) > 1e-9 * phi_f) {
    throw InvalidArgument("profile must satisfy Q(0) = 0 and Q(1) = phi_f");
  }
  for (std::size_t j = 0; j <= m; ++j) {
    if (!(q_init.z[j] > 0.0) || !std::isfinite(q_init.z[j])) {
      throw InvalidArgument("Z must be positive and finite at every node (node " + std::to_string(j) + ")");
    }
    if (j < m && q_init.q[j + 1] < q_init.q[j]) throw InvalidArgument("Q must be non-decreasing");
  }
  const double k_end = k.value(phi_f);
  const double k_start = k.value(0.0);
  const double n_tilde = q_init.z[m] - k_end;
  if (!(n_tilde > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "constraint violated: Z_M = " << q_init.z[m] << " must exceed K(phi_f) = " << k_end;
    throw ConstraintViolated(os.str());
  }
  const double compat = q_init.z[m] - q_init.z[0] - (k_end - k_start);
  if (std::abs(compat) > 1e-6 * phi_f) {
    std::ostringstream os;
    os.precision(17);
    os << "first-order compatibility violated: Z_M - Z_0 - (K(phi_f) - K(0)) = " << compat;
    throw CompatibilityViolated(os.str());
  }
  InitialCheck out;
  out.n_init = 1.0 / n_tilde;
  if (compat != 0.0 && std::abs(compat) > 1e-10 * phi_f) {
    std::ostringstream os;
    os << "compatibility residual " << compat << " is within tolerance but not negligible";
    out.warnings.push_back(os.str());
  }
  const auto h = h_profile(q_init, k);
  if (*std::min_element(h.values.begin(), h.values.end()) <= 0.0) {
    out.warnings.push_back("H_init is not positive everywhere; global bounds on the firing rate do not apply");
  }
  return out;
}

MeanFieldState make_initial_state(const QuantileProfile& q_init, const PhaseResponse& k, RunMode mode) {
  validate_initial(q_init, k);
  MeanFieldState s;
  s.profile = q_init;
  s.n_tilde = explicit_n_tilde(q_init, k);
  s.mode = mode;
  return s;
}

StepResult step(const MeanFieldState& state, const PhaseResponse& k, const SolverConfig& cfg) {
  const auto& p = state.profile;
  const std::size_t m = p.cells();
  if (m != cfg.cells) throw GridMismatch("state grid does not match solver config");
  if (p.generalized) throw InvalidArgument("generalized profiles cannot be evolved");
  const double dtau = 1.0 / static_cast<double>(m);
  const double phi_f = k.phi_f();
  const double q_last = p.q[m - 1];
  const int sub = cfg.substeps;

  auto fdf = [&](double f) {
    const auto r = flow_sensitivity(k, q_last, f, dtau, sub);
    return std::pair{r.q - phi_f, r.integral};
  };
  auto g = [&](double f) { return flow(k, q_last, f, dtau, sub).q - phi_f; };

  const double prev = state.n_tilde;
  const double width = 10.0 * dtau * std::abs(prev) + 1.0;
  double lo = prev - width, hi = prev + width;
  double glo = g(lo), ghi = g(hi);
  double grow = width;
  int doublings = 0;
  while ((glo > 0.0 || ghi < 0.0) && doublings < 60) {
    grow *= 2.0;
    if (glo > 0.0) glo = g(lo -= grow);
    if (ghi < 0.0) ghi = g(hi += grow);
    ++doublings;
  }
  if (glo > 0.0 || ghi < 0.0) {
    throw RootFindFailed("could not bracket the multiplier after 60 doublings at step " +
                         std::to_string(state.step + 1));
  }
  const auto root = safeguarded_newton(fdf, lo, hi, {cfg.newton_tol, 0.0, cfg.newton_max_iter});
  if (!root.converged) {
    std::ostringstream os;
    os.precision(6);
    os << "multiplier root-find did not reach tolerance at step " << state.step + 1 << " (residual "
       << root.residual << ")";
    throw RootFindFailed(os.str());
  }
  const double f = root.root;

  StepResult out;
  out.root = f;
  out.iterations = root.iterations;
  out.blow_up = state.mode == RunMode::original && f <= cfg.blowup_eps;

  MeanFieldState& next = out.state;
  next.mode = state.mode;
  next.step = state.step + 1;
  next.tau = static_cast<double>(next.step) * dtau;
  next.t = state.t + f * dtau;
  next.n_tilde = f;
  next.profile.generalized = false;
  next.profile.q.assign(m + 1, 0.0);
  next.profile.z.assign(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto r = flow(k, p.q[j], f, dtau, sub);
    next.profile.q[j + 1] = r.q;
    next.profile.z[j + 1] = p.z[j] * std::exp(r.integral);
  }
  next.profile.q[0] = 0.0;
  next.profile.z[0] = f + k.value(0.0);
  return out;
}

const Snapshot* TrajectoryRecord::snapshot_at_step(std::size_t step) const {
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), step,
                             [](const Snapshot& s, std::size_t v) { return s.step < v; });
  if (it == snapshots.end() || it->step != step) return nullptr;
  return &*it;
}

TrajectoryRecord run(const MeanFieldState& initial, double tau_end, const PhaseResponse& k,
                     const SolverConfig& cfg) {
  cfg.validate();
  if (initial.profile.cells() != cfg.cells) throw GridMismatch("initial profile grid does not match solver config");
  TrajectoryRecord rec;
  rec.mode = initial.mode;
  rec.cells = cfg.cells;
  rec.phi_f = k.phi_f();
  rec.initial = initial.profile;
  const double dtau = 1.0 / static_cast<double>(cfg.cells);
  const std::size_t capacity = cfg.effective_capacity();

  auto keep = [&](const MeanFieldState& s) {
    if (cfg.snapshot_every == 0 || s.step % cfg.snapshot_every != 0) return;
    rec.snapshots.push_back(make_snapshot(s));
    while (rec.snapshots.size() > capacity) rec.snapshots.pop_front();
  };
  auto excursion = [&](const QuantileProfile& p) {
    const auto [lo, hi] = std::minmax_element(p.q.begin(), p.q.end());
    rec.max_domain_excursion = std::max({rec.max_domain_excursion, -*lo, *hi - rec.phi_f});
  };

  MeanFieldState state = initial;
  rec.rows.push_back(make_row(state, k));
  keep(state);
  std::size_t steps = 0;
  bool blown = false;
  while (state.tau < tau_end - 0.5 * dtau && steps < cfg.max_steps) {
    auto res = step(state, k, cfg);
    ++steps;
    if (res.blow_up) {
      rec.outcome = Outcome::blown_up;
      rec.tau_star = state.tau + 0.5 * dtau;
      rec.t_star = state.t;
      blown = true;
      break;
    }
    const double prev_tau = state.tau;
    const double prev_t = state.t;
    state = std::move(res.state);
    rec.rows.push_back(make_row(state, k));
    excursion(state.profile);
    keep(state);
    if (state.mode == RunMode::relaxed && state.n_tilde <= 0.0 && !rec.first_nonphysical_row) {
      rec.first_nonphysical_row = rec.rows.size() - 1;
      rec.tau_star = 0.5 * (prev_tau + state.tau);
      rec.t_star = prev_t;
    }
  }
  if (!blown) {
    if (rec.first_nonphysical_row) {
      rec.outcome = Outcome::relaxed_continued;
    } else if (state.tau < tau_end - 0.5 * dtau) {
      rec.outcome = Outcome::step_limit;
    } else {
      rec.outcome = Outcome::completed;
    }
  }
  rec.final_state = std::move(state);
  return rec;
}

HProfile h_profile(const QuantileProfile& profile, const PhaseResponse& k) {
  HProfile h;
  h.values.resize(profile.q.size());
  for (std::size_t j = 0; j < h.values.size(); ++j) h.values[j] = profile.z[j] - k.value(profile.q[j]);
  h.h0 = h.values.front();
  h.hm = h.values.back();
  return h;
}

HProfile h_profile(const MeanFieldState& state, const PhaseResponse& k) { return h_profile(state.profile, k); }

double explicit_n_tilde(const QuantileProfile& profile, const PhaseResponse& k) {
  return profile.z.back() - k.value(k.phi_f());
}

IntegralResidual integral_equation_residual(const TrajectoryRecord& record, const PhaseResponse& k) {
  const std::size_t m = record.cells;
  const double dtau = 1.0 / static_cast<double>(m);
  IntegralResidual out;
  out.min_kernel = std::numeric_limits<double>::infinity();
  std::vector<double> kp(m + 1), e(m + 1), c(m + 1), cn(m + 1);
  for (std::size_t n = m + 1; n < record.rows.size(); ++n) {
    bool complete = true;
    for (std::size_t i = 0; i <= m; ++i) {
      const std::size_t s = n - m + i;
      const Snapshot* snap = record.snapshot_at_step(s);
      if (snap == nullptr) {
        complete = false;
        break;
      }
      kp[i] = k.slope(snap->q[i]);  // diagonal node η = 1 − (τ − s)
    }
    if (!complete) continue;
    e[m] = 0.0;
    for (std::size_t i = m; i-- > 0;) e[i] = e[i + 1] + 0.5 * dtau * (kp[i] + kp[i + 1]);
    double kmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= m; ++i) {
      c[i] = -kp[i] * std::exp(e[i]);
      cn[i] = c[i] * record.rows[n - m + i].n_tilde;
      kmin = std::min(kmin, c[i]);
    }
    const double ic = trapezoid_unit(c);
    const double icn = trapezoid_unit(cn);
    IntegralResidualPoint pt;
    pt.tau = record.rows[n].tau;
    pt.recorded = record.rows[n].n_tilde;
    pt.recomputed = (1.0 - ic) * record.rows[n - m].n_tilde + icn;
    pt.residual = std::abs(pt.recomputed - pt.recorded);
    pt.kernel_identity_residual = std::abs((1.0 - ic) - std::exp(e[0]));
    pt.min_kernel = kmin;
    out.max_residual = std::max(out.max_residual, pt.residual);
    out.max_kernel_identity_residual = std::max(out.max_kernel_identity_residual, pt.kernel_identity_residual);
    out.min_kernel = std::min(out.min_kernel, kmin);
    out.points.push_back(pt);
  }
  if (out.points.empty()) {
    throw InsufficientHistory("no recorded time beyond one unit of tau has a complete snapshot history");
  }
  return out;
}

std::vector<double> unit_interval_oscillation(const TrajectoryRecord& record) {
  std::vector<double> out;
  if (record.rows.empty()) return out;
  const double last = record.rows.back().tau;
  const double eps = 1e-9;
  for (int n = 0; n + 1 <= last + eps; ++n) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : record.rows) {
      if (r.tau >= n - eps && r.tau <= n + 1 + eps) {
        lo = std::min(lo, r.n_tilde);
        hi = std::max(hi, r.n_tilde);
      }
    }
    out.push_back(hi - lo);
  }
  return out;
}

}  // namespace pulsefield

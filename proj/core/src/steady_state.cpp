#include "pulsefield/steady_state.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "pulsefield/errors.hpp"
#include "pulsefield/meanfield.hpp"

namespace pulsefield {

namespace {

namespace odeint = boost::numeric::odeint;
using OdeState = std::array<double, 1>;

constexpr double kOdeTol = 1e-13;
constexpr std::size_t kMaxOdeSteps = 1'000'000;

struct SteadyRhs {
  const PhaseResponse* k;
  double inv_rate;
  void operator()(const OdeState& q, OdeState& dq, double /*eta*/) const { dq[0] = k->value(q[0]) + inv_rate; }
};

double hitting_eta(const PhaseResponse& k, double inv_rate) {
  const double phi_f = k.phi_f();
  const double cap = 10.0 * std::max(1.0, k.constants().harmonic_integral);
  auto stepper = odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<OdeState>());
  const SteadyRhs rhs{&k, inv_rate};
  OdeState q{0.0};
  double eta = 0.0;
  double dt = 1e-3 * std::min(cap, phi_f / (k.value(0.0) + inv_rate));
  for (std::size_t n = 0; n < kMaxOdeSteps && eta < cap; ++n) {
    const OdeState q_prev = q;
    const double eta_prev = eta;
    if (stepper.try_step(rhs, q, eta, dt) == odeint::fail) continue;
    if (q[0] >= phi_f) {
      // Locate the crossing with q as the independent variable: dη/dq = 1/(K(q) + 1/N).
      const auto inv = [&](double p) { return 1.0 / (k.value(p) + inv_rate); };
      return eta_prev + gauss_legendre(inv, q_prev[0], phi_f, 4);
    }
  }
  std::ostringstream os;
  os << "first hitting time not found before eta = " << cap;
  throw IntegrationFailure(os.str());
}

}  // namespace

Existence steady_state_exists(const PhaseResponse& k) {
  Existence e;
  e.harmonic_integral = k.constants().harmonic_integral;
  e.on_boundary = std::abs(e.harmonic_integral - 1.0) <= Existence::kBoundaryTol;
  e.exists = e.harmonic_integral > 1.0 && !e.on_boundary;
  return e;
}

double first_hitting_eta(const PhaseResponse& k, double rate) {
  if (!(rate > 0.0)) throw InvalidArgument("firing rate must be positive");
  return hitting_eta(k, std::isinf(rate) ? 0.0 : 1.0 / rate);
}

SteadyState solve_steady_state(const PhaseResponse& k, std::size_t cells) {
  if (cells < 1) throw InvalidArgument("steady state needs at least one cell");
  const auto ex = steady_state_exists(k);
  if (!ex.exists) {
    std::ostringstream os;
    os.precision(17);
    os << "no steady state: harmonic integral " << ex.harmonic_integral << (ex.on_boundary ? " (boundary case)" : "")
       << " is not above 1";
    throw NoSteadyState(os.str());
  }
  const double phi_f = k.phi_f();

  // η_N increases with N, so the bracket needs a large N (η > 1) and a small N (η < 1).
  double n_hi = 10.0 / phi_f;
  int guard = 0;
  while (first_hitting_eta(k, n_hi) <= 1.0) {
    n_hi *= 2.0;
    if (++guard > 200) throw BracketFailure("could not find a rate with first hitting time above 1");
  }
  double n_lo = 1e-6;
  guard = 0;
  while (first_hitting_eta(k, n_lo) >= 1.0) {
    n_lo *= 0.5;
    if (++guard > 200) throw BracketFailure("could not find a rate with first hitting time below 1");
  }

  // Bisect in u = 1/N, where η is decreasing.
  double u_small = 1.0 / n_hi;  // η > 1
  double u_large = 1.0 / n_lo;  // η < 1
  double u = 0.5 * (u_small + u_large);
  for (int it = 0; it < 400; ++it) {
    u = 0.5 * (u_small + u_large);
    const double eta = hitting_eta(k, u);
    if (std::abs(eta - 1.0) < 1e-12) break;
    if (eta > 1.0) u_small = u; else u_large = u;
    if (u_large - u_small <= 2.0 * std::numeric_limits<double>::epsilon() * u) break;
  }

  SteadyState out;
  out.n_star = 1.0 / u;
  auto& p = out.profile;
  p.q.assign(cells + 1, 0.0);
  p.z.assign(cells + 1, 0.0);
  auto stepper = odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<OdeState>());
  const SteadyRhs rhs{&k, u};
  OdeState q{0.0};
  const double h = 1.0 / static_cast<double>(cells);
  for (std::size_t j = 1; j < cells; ++j) {
    odeint::integrate_adaptive(stepper, rhs, q, static_cast<double>(j - 1) * h, static_cast<double>(j) * h,
                               0.1 * h);
    p.q[j] = q[0];
  }
  p.q[cells] = phi_f;
  for (std::size_t j = 0; j <= cells; ++j) p.z[j] = k.value(p.q[j]) + u;
  validate_initial(p, k);
  return out;
}

}  // namespace pulsefield

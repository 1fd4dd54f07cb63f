#include "pulsefield/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pulsefield/errors.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/steady_state.hpp"

namespace pulsefield {

QuantileProfile perturbed_steady(const PhaseResponse& k, std::size_t cells, double epsilon, int mode) {
  if (mode < 1) throw InvalidArgument("mode_number must be at least 1");
  auto p = solve_steady_state(k, cells).profile;
  const double w = std::numbers::pi * mode;
  for (std::size_t j = 1; j < cells; ++j) {
    const double eta = p.eta(j);
    const double bump = eta * (1.0 - eta);
    p.q[j] += epsilon * std::sin(w * eta) * bump;
    p.z[j] += epsilon * (w * std::cos(w * eta) * bump + std::sin(w * eta) * (1.0 - 2.0 * eta));
  }
  validate_initial(p, k);
  return p;
}

QuantileProfile beta_like(const PhaseResponse& k, std::size_t cells, double a, double b, double n_init) {
  if (!(a > 1.0) || !(b > 1.0)) throw InvalidArgument("beta_like needs a > 1 and b > 1");
  if (!(n_init > 0.0)) throw InvalidArgument("beta_like needs n_init > 0");
  const double phi_f = k.phi_f();
  const double rho0 = 1.0 / (1.0 / n_init + k.value(0.0));
  const double rho1 = 1.0 / (1.0 / n_init + k.value(phi_f));
  if (!(rho0 > 0.0) || !(rho1 > 0.0)) throw InvalidArgument("beta_like floor must be positive");
  const double weight = 1.0 - 0.5 * phi_f * (rho0 + rho1);
  if (weight < 0.0) throw InvalidArgument("beta_like floor already carries more than unit mass; lower n_init");
  const double norm = std::beta(a, b);
  auto rho = [=](double phi) {
    const double x = std::clamp(phi / phi_f, 0.0, 1.0);
    const double floor = rho0 + (rho1 - rho0) * x;
    return floor + weight * std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0) / (norm * phi_f);
  };
  auto p = quantile_from_density(rho, phi_f, cells, ProfileGrade::pde);
  p.z.front() = 1.0 / rho0;
  p.z.back() = 1.0 / rho1;
  validate_initial(p, k);
  return p;
}

QuantileProfile explicit_table(std::vector<double> q, std::vector<double> z) {
  if (q.size() != z.size() || q.size() < 2) throw InvalidArgument("explicit table needs matching q and z of length >= 2");
  return {std::move(q), std::move(z), false};
}

}  // namespace pulsefield

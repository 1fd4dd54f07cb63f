#pragma once

#include <cstddef>
#include <vector>

#include "pulsefield/phase_response.hpp"
#include "pulsefield/quantile.hpp"

namespace pulsefield {

/// Steady profile plus ε·sin(mode·π·η)·η(1−η). The bump and its
/// η-derivative vanish at both ends, so boundary values and first-order
/// compatibility carry over from the steady state.
QuantileProfile perturbed_steady(const PhaseResponse& k, std::size_t cells, double epsilon, int mode);

/// Density = linear floor with 1/ρ(0) = 1/n_init + K(0) and
/// 1/ρ(Φ_F) = 1/n_init + K(Φ_F), plus the remaining mass as a Beta(a, b) bump
/// rescaled to [0, Φ_F]. Needs a, b > 1.
QuantileProfile beta_like(const PhaseResponse& k, std::size_t cells, double a, double b, double n_init);

/// Profile from explicit nodal Q and Z tables.
QuantileProfile explicit_table(std::vector<double> q, std::vector<double> z);

}  // namespace pulsefield

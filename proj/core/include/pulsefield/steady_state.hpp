#pragma once

#include <cstddef>

#include "pulsefield/phase_response.hpp"
#include "pulsefield/quantile.hpp"

namespace pulsefield {

struct Existence {
  bool exists = false;
  double harmonic_integral = 0.0;
  /// ∫1/K equals 1 to within `kBoundaryTol`; classified as no steady state.
  bool on_boundary = false;

  static constexpr double kBoundaryTol = 1e-9;
};

Existence steady_state_exists(const PhaseResponse& k);

/// First η at which q' = K(q) + 1/rate, q(0) = 0, reaches Φ_F.
/// `rate` may be +∞ (the 1/rate = 0 limit).
double first_hitting_eta(const PhaseResponse& k, double rate);

struct SteadyState {
  double n_star = 0.0;
  QuantileProfile profile;
};

SteadyState solve_steady_state(const PhaseResponse& k, std::size_t cells);

}  // namespace pulsefield

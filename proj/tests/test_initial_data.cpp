#include <doctest.h>

#include <cmath>

#include "pulsefield/errors.hpp"
#include "pulsefield/initial_data.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/steady_state.hpp"

using namespace pulsefield;

TEST_CASE("perturbed steady data keeps endpoints and compatibility") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto ss = solve_steady_state(k, 200);
  for (int mode : {1, 2, 5}) {
    const auto p = perturbed_steady(k, 200, 0.05, mode);
    CHECK(p.q.front() == 0.0);
    CHECK(p.q.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.z.front() == doctest::Approx(ss.profile.z.front()).epsilon(1e-12));
    CHECK(p.z.back() == doctest::Approx(ss.profile.z.back()).epsilon(1e-12));
    CHECK_NOTHROW(validate_initial(p, k));
    const double eta = 0.3;
    const std::size_t j = 60;
    CHECK(p.q[j] - ss.profile.q[j] ==
          doctest::Approx(0.05 * std::sin(mode * std::numbers::pi * eta) * eta * (1 - eta)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(perturbed_steady(k, 50, 0.05, 0), InvalidArgument);
}

TEST_CASE("beta-like data") {
  const PhaseResponse k(Affine{0.75, 0.2}, 1.0);
  const auto p = beta_like(k, 200, 3.0, 3.0, 1.0);
  const auto check = validate_initial(p, k);
  CHECK(check.n_init == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mass_from_profile(p) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(beta_like(k, 200, 1.0, 3.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(beta_like(k, 200, 3.0, 3.0, 3.0), InvalidArgument);
}

TEST_CASE("explicit tables") {
  CHECK_THROWS_AS(explicit_table({0.0, 1.0}, {1.0}), InvalidArgument);
  const auto p = explicit_table({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0});
  CHECK(p.cells() == 2);
}

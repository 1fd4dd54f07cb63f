#include <doctest.h>

#include <cmath>

#include "pulsefield/diagnostics.hpp"
#include "pulsefield/errors.hpp"
#include "pulsefield/initial_data.hpp"
#include "pulsefield/steady_state.hpp"
#include "support.hpp"

using namespace pulsefield;
using testing_support::sample_profile;

namespace {

SolverConfig config(std::size_t m) {
  SolverConfig c;
  c.cells = m;
  c.snapshot_capacity = static_cast<std::size_t>(-1);
  return c;
}

TrajectoryRecord perturbed_run(const PhaseResponse& k, std::size_t m, double eps, int mode, double tau_end,
                               RunMode run_mode = RunMode::original) {
  return run(make_initial_state(perturbed_steady(k, m, eps, mode), k, run_mode), tau_end, k, config(m));
}

}  // namespace

TEST_CASE("fitted rate recovers an exact exponential") {
  DistanceSeries s;
  for (int i = 0; i <= 40; ++i) {
    s.tau.push_back(0.05 * i);
    s.distance.push_back(3.0 * std::exp(-0.7 * 0.05 * i));
  }
  CHECK(fitted_log_rate(s) == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("affine K: the band collapses to the exact rate") {
  const PhaseResponse k(Affine{-0.5, 1.0}, 1.0);
  const auto a = perturbed_run(k, 200, 0.05, 1, 2.0);
  const auto b = perturbed_run(k, 200, -0.04, 2, 2.0);
  const auto band = contraction_band(a, b, k);
  CHECK(band.report.passed);
  CHECK(band.k_min == doctest::Approx(-0.5));
  CHECK(band.k_max == doctest::Approx(-0.5));
  CHECK(band.fitted_rate == doctest::Approx(-0.5).epsilon(0.02));
  const double c = calibrate_slack_c(a, b, k);
  CHECK(c <= kFrozenSlackC);
  CHECK(c > 0.5 * kFrozenSlackC);
  CHECK_THROWS_AS(contraction_band(a, a, k), DegenerateDistance);
}

TEST_CASE("concave decreasing K: fitted rate inside the band") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto a = perturbed_run(k, 200, 0.05, 1, 3.0);
  const auto b = perturbed_run(k, 200, -0.03, 2, 3.0);
  const auto band = contraction_band(a, b, k);
  CHECK(band.report.passed);
  CHECK(band.fitted_rate >= band.k_min - 0.05);
  CHECK(band.fitted_rate <= band.k_max + 0.05);
}

TEST_CASE("exact L2 rate for affine K") {
  const PhaseResponse k(Affine{-0.5, 1.0}, 1.0);
  const auto a = perturbed_run(k, 800, 0.05, 1, 2.0);
  const auto b = perturbed_run(k, 800, -0.04, 2, 2.0);
  CHECK(l2_rate_check(a, b, k).passed);
  // Halving time ln 2 / 0.5.
  const auto series = common_distance_series(a, b, &modified_l2_distance);
  const std::size_t half = static_cast<std::size_t>(std::lround(std::log(2.0) / 0.5 * 800));
  CHECK(series.distance[half] / series.distance[0] == doctest::Approx(0.5).epsilon(2e-3));

  const PhaseResponse flat(Affine{0.0, 0.5}, 1.0);
  const auto fa = perturbed_run(flat, 200, 0.05, 1, 1.5);
  const auto fb = perturbed_run(flat, 200, -0.03, 3, 1.5);
  CHECK(l2_rate_check(fa, fb, flat).passed);
  const auto fs = common_distance_series(fa, fb, &modified_l2_distance);
  CHECK(fs.distance.back() == doctest::Approx(fs.distance.front()).epsilon(1e-3));

  const PhaseResponse grow(Affine{0.5, 0.5}, 1.0);
  const auto ga = perturbed_run(grow, 800, 0.02, 1, 1.0, RunMode::relaxed);
  const auto gb = perturbed_run(grow, 800, -0.02, 2, 1.0, RunMode::relaxed);
  CHECK(l2_rate_check(ga, gb, grow).passed);

  const PhaseResponse quad(Quadratic{1.2, -0.4, -0.1}, 1.0);
  CHECK_THROWS_AS(l2_rate_check(ga, gb, quad), NotAffine);
}

TEST_CASE("moment examples") {
  const PhaseResponse half(Affine{0.0, 0.5}, 1.0);
  const auto uni = sample_profile([](double e) { return e; }, [](double) { return 1.0; }, 100);
  CHECK(moment(uni, half, MomentKind::identity) == doctest::Approx(0.5));
  CHECK(moment(uni, half, MomentKind::inverse_k) == doctest::Approx(0.5 / 0.5));

  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto ss = solve_steady_state(k, 200);
  const auto rec = run(make_initial_state(ss.profile, k, RunMode::original), 1.0, k, config(200));
  for (auto kind : {MomentKind::identity, MomentKind::inverse_k}) {
    const auto ms = moment_series(rec, k, kind);
    for (double v : ms.value) CHECK(v == doctest::Approx(ms.value.front()).epsilon(1e-9));
    CHECK(ms.max_residual <= 1e-6);
  }
}

TEST_CASE("moment identity residual shrinks with the grid") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto coarse = moment_series(perturbed_run(k, 100, 0.05, 1, 1.5), k, MomentKind::identity);
  const auto fine = moment_series(perturbed_run(k, 200, 0.05, 1, 1.5), k, MomentKind::identity);
  CHECK(fine.max_residual < coarse.max_residual);
  CHECK(coarse.max_residual < 0.05);
}

TEST_CASE("blow-up bounds for K = 2") {
  const PhaseResponse k(Affine{0.0, 2.0}, 1.0);
  const auto init = beta_like(k, 200, 3.0, 3.0, 2.0);
  const auto apriori = blowup_bounds(k, init);
  CHECK(apriori.bound_value("characteristics") == doctest::Approx(0.5));
  const double mean_q = moment(init, k, MomentKind::identity);
  CHECK(apriori.bound_value("moment1_apriori") == doctest::Approx(1.0 - mean_q));
  const auto rec = run(make_initial_state(init, k, RunMode::original), 1.0, k, config(200));
  const auto rep = blowup_bounds(k, init, &rec);
  CHECK(rep.passed);
  CHECK(rep.measured_value("moment1_lhs") <= rep.bound_value("moment1_rhs") + 2.0 / 200 * 2.0);
}

TEST_CASE("blow-up bounds need a hypothesis to hold") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  CHECK_THROWS_AS(blowup_bounds(k, solve_steady_state(k, 50).profile), InapplicableBound);
}

TEST_CASE("bounded BV check") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto a = perturbed_run(k, 100, 0.05, 1, 1.0);
  const auto b = perturbed_run(k, 100, -0.05, 3, 1.0);
  CHECK(bounded_bv_check(a, b).passed);
  const auto ss = solve_steady_state(k, 100).profile;
  CHECK(bounded_bv_check(ss, ss, 1.0).measured_value("max_bv_distance") == 0.0);
  const auto flat = sample_profile([](double) { return 0.0; }, [](double) { return 0.0; }, 100);
  const auto steep = sample_profile([](double e) { return 3.0 * e; }, [](double) { return 3.0; }, 100);
  CHECK_FALSE(bounded_bv_check(flat, steep, 1.0).passed);
}

TEST_CASE("global multiplier bounds report") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto rec = perturbed_run(k, 200, 0.05, 1, 3.0);
  const auto rep = n_bounds_check(rec, k, 10.0 / 200);
  CHECK(rep.passed);
  CHECK(rep.note.empty());
  CHECK_THROWS_AS(rep.measured_value("nope"), InvalidArgument);
}

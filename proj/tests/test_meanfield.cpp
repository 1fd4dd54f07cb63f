#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulsefield/errors.hpp"
#include "pulsefield/initial_data.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/steady_state.hpp"
#include "support.hpp"

using namespace pulsefield;
using testing_support::sample_profile;

namespace {

QuantileProfile uniform(std::size_t m) {
  return sample_profile([](double e) { return e; }, [](double) { return 1.0; }, m);
}

SolverConfig config(std::size_t m) {
  SolverConfig c;
  c.cells = m;
  return c;
}

}  // namespace

TEST_CASE("initial validation") {
  const PhaseResponse half(Affine{0.0, 0.5}, 1.0);
  CHECK(validate_initial(uniform(100), half).n_init == doctest::Approx(2.0));
  CHECK_THROWS_AS(validate_initial(uniform(100), PhaseResponse(Affine{0.0, 1.0}, 1.0)), ConstraintViolated);
  CHECK_THROWS_AS(validate_initial(uniform(100), PhaseResponse(Affine{0.75, 0.2}, 1.0)), CompatibilityViolated);
  auto gen = uniform(100);
  gen.generalized = true;
  CHECK_THROWS_AS(validate_initial(gen, half), InvalidArgument);
  auto bad = uniform(100);
  bad.q.back() = 0.9;
  CHECK_THROWS_AS(validate_initial(bad, half), InvalidArgument);
  auto negative = uniform(100);
  negative.z[10] = -1.0;
  CHECK_THROWS_AS(validate_initial(negative, half), InvalidArgument);
}

TEST_CASE("non-positive H_init produces a warning") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  const double w = 2.0 * std::numbers::pi;
  const auto p = sample_profile([&](double e) { return e + 0.8 * std::sin(w * e) / w; },
                                [&](double e) { return 1.0 + 0.8 * std::cos(w * e); }, 100);
  CHECK_FALSE(validate_initial(p, k).warnings.empty());
  CHECK(validate_initial(uniform(100), k).warnings.empty());
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.cells = 4;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.cells = 200;
  CHECK(c.effective_capacity() == std::numeric_limits<std::size_t>::max());
  c.cells = 800;
  CHECK(c.effective_capacity() == 2 * 801);
}

TEST_CASE("the steady state is a fixed point of the scheme") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  auto s = make_initial_state(uniform(200), k, RunMode::original);
  const auto cfg = config(200);
  for (int i = 0; i < 100; ++i) {
    const auto r = step(s, k, cfg);
    CHECK(r.state.n_tilde == doctest::Approx(0.5).epsilon(1e-12));
    s = r.state;
  }
  for (std::size_t j = 0; j <= 200; ++j) CHECK(std::abs(s.profile.q[j] - s.profile.eta(j)) <= 5e-12 * 100);
}

TEST_CASE("general steady states are fixed points to within 5 newton_tol per step") {
  for (const auto& k : {PhaseResponse(Affine{-0.5, 1.0}, 1.0), PhaseResponse(Quadratic{1.2, -0.4, -0.1}, 1.0)}) {
    const auto ss = solve_steady_state(k, 200);
    auto s = make_initial_state(ss.profile, k, RunMode::original);
    const auto cfg = config(200);
    double drift = 0.0;
    for (int i = 0; i < 100; ++i) {
      s = step(s, k, cfg).state;
      for (std::size_t j = 0; j <= 200; ++j) drift = std::max(drift, std::abs(s.profile.q[j] - ss.profile.q[j]));
      CHECK(1.0 / s.n_tilde == doctest::Approx(ss.n_star).epsilon(1e-6));
    }
    CHECK(drift <= 100 * 5 * cfg.newton_tol + 1e-9);
  }
}

TEST_CASE("each step enforces the boundary value") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  auto s = make_initial_state(perturbed_steady(k, 100, 0.05, 1), k, RunMode::original);
  const auto cfg = config(100);
  for (int i = 0; i < 150; ++i) {
    s = step(s, k, cfg).state;
    CHECK(std::abs(s.profile.q.back() - 1.0) <= cfg.newton_tol);
    CHECK(s.profile.q.front() == 0.0);
  }
}

TEST_CASE("decreasing K with positive H_init keeps the multiplier in the H_init range") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto init = perturbed_steady(k, 200, 0.05, 1);
  const auto h = h_profile(init, k);
  const double lo = *std::min_element(h.values.begin(), h.values.end());
  const double hi = *std::max_element(h.values.begin(), h.values.end());
  CHECK(lo > 0.0);
  const auto rec = run(make_initial_state(init, k, RunMode::original), 4.0, k, config(200));
  CHECK(rec.outcome == Outcome::completed);
  for (const auto& row : rec.rows) {
    CHECK(row.n_tilde >= lo - 10.0 / 200);
    CHECK(row.n_tilde <= hi + 10.0 / 200);
  }
  const auto osc = unit_interval_oscillation(rec);
  REQUIRE(osc.size() >= 3);
  for (std::size_t i = 1; i < osc.size(); ++i) CHECK(osc[i] <= osc[i - 1] + 1e-12);
}

TEST_CASE("increasing K makes the oscillation grow") {
  const PhaseResponse k(Quadratic{0.2, 0.3, 0.2}, 1.0);
  const auto rec = run(make_initial_state(perturbed_steady(k, 200, 0.02, 1), k, RunMode::original), 6.0, k,
                       config(200));
  const auto osc = unit_interval_oscillation(rec);
  REQUIRE(osc.size() >= 3);
  for (std::size_t i = 1; i < osc.size(); ++i) CHECK(osc[i] >= osc[i - 1] - 1e-12);
}

TEST_CASE("constant K = 2 blows up before the harmonic integral") {
  const PhaseResponse k(Affine{0.0, 2.0}, 1.0);
  const auto rec = run(make_initial_state(beta_like(k, 200, 3.0, 3.0, 2.0), k, RunMode::original), 1.0, k,
                       config(200));
  REQUIRE(rec.outcome == Outcome::blown_up);
  REQUIRE(rec.tau_star.has_value());
  CHECK(*rec.tau_star <= 0.5 + 2.0 / 200);
}

TEST_CASE("original-mode blow-up: rate grows over the last rows and the run stops at the threshold") {
  const PhaseResponse k(Affine{0.75, 0.2}, 1.0);
  const auto cfg = config(200);
  const auto rec = run(make_initial_state(beta_like(k, 200, 3.0, 3.0, 1.0), k, RunMode::original), 4.0, k, cfg);
  REQUIRE(rec.outcome == Outcome::blown_up);
  REQUIRE(rec.rows.size() > 11);
  for (std::size_t i = rec.rows.size() - 10; i < rec.rows.size(); ++i) CHECK(rec.rows[i].rate > rec.rows[i - 1].rate);
  for (std::size_t i = 1; i < rec.rows.size(); ++i) CHECK(rec.rows[i].n_tilde > cfg.blowup_eps);
  // After its initial rise the multiplier falls monotonically to the threshold.
  const auto peak = std::max_element(rec.rows.begin(), rec.rows.end(),
                                     [](const auto& a, const auto& b) { return a.n_tilde < b.n_tilde; });
  for (auto it = peak + 1; it != rec.rows.end(); ++it) CHECK(it->n_tilde < (it - 1)->n_tilde);
  // The rejected step is the one that crossed the threshold.
  const auto next = step(rec.final_state, k, cfg);
  CHECK(next.blow_up);
  CHECK(next.root <= cfg.blowup_eps);

  // τ* against a twice refined run.
  auto fine_cfg = config(400);
  const auto fine =
      run(make_initial_state(beta_like(k, 400, 3.0, 3.0, 1.0), k, RunMode::original), 4.0, k, fine_cfg);
  REQUIRE(fine.tau_star.has_value());
  CHECK(std::abs(*rec.tau_star - *fine.tau_star) <= 4.0 / 200);
}

TEST_CASE("relaxed mode continues and Q loses monotonicity") {
  const PhaseResponse k(Affine{0.75, 0.2}, 1.0);
  const auto rec = run(make_initial_state(beta_like(k, 200, 3.0, 3.0, 1.0), k, RunMode::relaxed), 4.0, k,
                       config(200));
  CHECK(rec.outcome == Outcome::relaxed_continued);
  REQUIRE(rec.first_nonphysical_row.has_value());
  REQUIRE(rec.tau_star.has_value());
  double min_z = std::numeric_limits<double>::infinity();
  for (std::size_t i = *rec.first_nonphysical_row; i < rec.rows.size(); ++i) min_z = std::min(min_z, rec.rows[i].min_z);
  CHECK(min_z < 0.0);
  CHECK(std::isnan(rec.rows[*rec.first_nonphysical_row].rate));
}

TEST_CASE("H profile identities") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  const auto s = make_initial_state(uniform(64), k, RunMode::original);
  for (double h : h_profile(s, k).values) CHECK(h == doctest::Approx(0.5));

  const PhaseResponse kq(Quadratic{1.2, -0.4, -0.1}, 1.0);
  auto st = make_initial_state(perturbed_steady(kq, 200, 0.05, 1), kq, RunMode::original);
  const auto cfg = config(200);
  for (int i = 0; i < 300; ++i) {
    st = step(st, kq, cfg).state;
    const auto h = h_profile(st, kq);
    CHECK(std::abs(h.h0 - st.n_tilde) < 10 * cfg.newton_tol);
    // The outflow identity only holds to the first-order defect of a piecewise-constant multiplier.
    CHECK(std::abs(h.hm - st.n_tilde) < 1.0 / 200);
    CHECK(explicit_n_tilde(st.profile, kq) == doctest::Approx(h.hm));
  }
}

TEST_CASE("density recovered from the profile keeps unit mass") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  for (std::size_t m : {100u, 200u}) {
    const auto rec = run(make_initial_state(perturbed_steady(k, m, 0.05, 2), k, RunMode::original), 2.0, k, config(m));
    for (const auto& s : rec.snapshots) {
      CHECK(mass_from_profile(QuantileProfile{s.q, s.z, false}) == doctest::Approx(1.0).epsilon(2.0 / m));
    }
  }
}

TEST_CASE("integral equation residual") {
  const PhaseResponse half(Affine{0.0, 0.5}, 1.0);
  const auto flat = run(make_initial_state(beta_like(half, 100, 2.0, 3.0, 1.5), half, RunMode::original), 2.5, half,
                        config(100));
  REQUIRE(flat.outcome == Outcome::completed);
  const auto r = integral_equation_residual(flat, half);
  REQUIRE(!r.points.empty());
  CHECK(r.min_kernel == 0.0);
  // With a vanishing kernel the multiplier repeats with unit period.
  for (const auto& p : r.points) {
    const auto i = static_cast<std::size_t>(std::lround(p.tau * 100));
    CHECK(p.recorded == doctest::Approx(flat.rows[i - 100].n_tilde).epsilon(1e-9));
  }
  CHECK(r.max_residual <= 1e-9);

  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto rec = run(make_initial_state(perturbed_steady(k, 100, 0.05, 1), k, RunMode::original), 3.0, k, config(100));
  const auto ir = integral_equation_residual(rec, k);
  CHECK(ir.min_kernel >= 0.0);
  CHECK(ir.max_residual <= 1e-4);

  const auto short_run = run(make_initial_state(uniform(50), half, RunMode::original), 0.5, half, config(50));
  CHECK_THROWS_AS(integral_equation_residual(short_run, half), InsufficientHistory);
}

TEST_CASE("snapshot ring keeps the most recent profiles") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  auto cfg = config(20);
  cfg.snapshot_capacity = 5;
  const auto rec = run(make_initial_state(uniform(20), k, RunMode::original), 1.0, k, cfg);
  CHECK(rec.snapshots.size() == 5);
  CHECK(rec.snapshots.back().step == 20);
  CHECK(rec.snapshot_at_step(20) != nullptr);
  CHECK(rec.snapshot_at_step(0) == nullptr);
}

TEST_CASE("grid mismatch and bad runs are rejected") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  CHECK_THROWS_AS(run(make_initial_state(uniform(20), k, RunMode::original), 1.0, k, config(40)), GridMismatch);
}

TEST_CASE("runs are deterministic") {
  const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  const auto init = perturbed_steady(k, 100, 0.05, 1);
  const auto a = run(make_initial_state(init, k, RunMode::original), 1.5, k, config(100));
  const auto b = run(make_initial_state(init, k, RunMode::original), 1.5, k, config(100));
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].n_tilde == b.rows[i].n_tilde);
  CHECK(a.final_state.profile.q == b.final_state.profile.q);
}

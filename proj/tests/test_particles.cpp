#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pulsefield/errors.hpp"
#include "pulsefield/particles.hpp"
#include "pulsefield/steady_state.hpp"
#include "support.hpp"

using namespace pulsefield;
using testing_support::sample_profile;

namespace {

QuantileProfile uniform(std::size_t m) {
  return sample_profile([](double e) { return e; }, [](double) { return 1.0; }, m);
}

void check_phase_bounds(const ParticleEnsemble& e) {
  for (double p : e.phases()) {
    CHECK(p >= 0.0);
    CHECK(p < e.phi_f());
  }
}

}  // namespace

TEST_CASE("drift to the next firing") {
  ParticleEnsemble e({0.1, 0.6}, 1.0);
  CHECK(e.advance_to_next_firing() == doctest::Approx(0.4));
  CHECK(e.phases()[0] == doctest::Approx(0.5));
  CHECK(e.phases()[1] == 1.0);
  ParticleEnsemble tied({0.7, 0.7, 0.2}, 1.0);
  CHECK(tied.advance_to_next_firing() == doctest::Approx(0.3));
  CHECK(tied.phases()[0] == 1.0);
  CHECK(tied.phases()[1] == 1.0);
  CHECK(tied.fire_and_cascade(PhaseResponse(Affine{0.0, 0.01}, 1.0)) == 2);
}

TEST_CASE("hand-computed cascades") {
  const PhaseResponse k(Affine{0.0, 0.2}, 1.0);
  ParticleEnsemble e({1.0, 0.95}, 1.0);
  CHECK(e.fire_and_cascade(k) == 2);
  CHECK(e.phases()[0] == 0.0);
  CHECK(e.phases()[1] == 0.0);
  CHECK(e.spike_log().back().cascade_size == 2);

  ParticleEnsemble small({1.0, 0.5}, 1.0);
  CHECK(small.fire_and_cascade(k) == 1);
  CHECK(small.phases()[1] == doctest::Approx(0.6));

  ParticleEnsemble sync(std::vector<double>(17, 1.0), 1.0);
  CHECK(sync.fire_and_cascade(k) == 17);
  for (double p : sync.phases()) CHECK(p == 0.0);
  CHECK(sync.total_resets() == 17);
}

TEST_CASE("sampling from profiles and distributions") {
  const auto e = init_from_profile(uniform(200), 1.0, 10000, 42);
  const auto sorted = e.sorted_phases();
  double ks = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double n = static_cast<double>(sorted.size());
    ks = std::max({ks, std::abs(sorted[i] - i / n), std::abs(sorted[i] - (i + 1) / n)});
  }
  CHECK(ks <= 1.63 / std::sqrt(10000.0));

  const auto two =
      init_from_distribution(DiscreteDistribution{{0.2, 0.8}, {0.5, 0.5}}, 1.0, 2, 0, Sampling::stratified);
  CHECK(two.sorted_phases() == std::vector<double>{0.2, 0.8});

  const auto a = init_from_profile(uniform(200), 1.0, 500, 9);
  const auto b = init_from_profile(uniform(200), 1.0, 500, 9);
  CHECK(std::equal(a.phases().begin(), a.phases().end(), b.phases().begin()));
  const auto c = init_from_profile(uniform(200), 1.0, 500, 10);
  CHECK_FALSE(std::equal(a.phases().begin(), a.phases().end(), c.phases().begin()));
}

TEST_CASE("phases stay in range and spike logs are reproducible") {
  const PhaseResponse k(Quadratic{0.6, -0.3, 0.1}, 1.0);
  auto a = init_from_profile(uniform(100), 1.0, 300, 3);
  auto b = init_from_profile(uniform(100), 1.0, 300, 3);
  for (int i = 0; i < 400; ++i) {
    a.run_events(k, 1);
    check_phase_bounds(a);
  }
  b.run_events(k, 400);
  REQUIRE(a.spike_log().size() == b.spike_log().size());
  for (std::size_t i = 0; i < a.spike_log().size(); ++i) {
    CHECK(a.spike_log()[i].t == b.spike_log()[i].t);
    CHECK(a.spike_log()[i].cascade_size == b.spike_log()[i].cascade_size);
  }
}

TEST_CASE("a single particle fires with period phi_f") {
  ParticleEnsemble e({0.25}, 2.0);
  e.run_until(PhaseResponse(Affine{0.0, 1.0}, 2.0), 9.0);
  const auto& log = e.spike_log();
  REQUIRE(log.size() == 4);
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].t == doctest::Approx(1.75 + 2.0 * i));
  CHECK(e.phases()[0] == doctest::Approx(1.25));
  CHECK(e.time() == 9.0);
}

TEST_CASE("jumps scale with the inverse population size") {
  const PhaseResponse k(Affine{0.2, 0.3}, 1.0);
  auto max_jump = [&](std::size_t n) {
    auto e = init_from_profile(uniform(100), 1.0, n, 0, Sampling::stratified);
    e.advance_to_next_firing();
    const std::vector<double> before(e.phases().begin(), e.phases().end());
    e.fire_and_cascade(k);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (e.phases()[i] > 0.0) m = std::max(m, e.phases()[i] - before[i]);
    }
    return m;
  };
  CHECK(max_jump(400) / max_jump(800) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("increasing K synchronises a small population in finite time") {
  const PhaseResponse k(Affine{0.8, 0.05}, 1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto e = init_from_profile(uniform(100), 1.0, 100, seed);
    bool synced = false;
    for (int i = 0; i < 20000 && !synced; ++i) {
      e.run_events(k, 1);
      synced = e.spike_log().back().cascade_size == e.size();
    }
    CHECK(synced);
  }
}

TEST_CASE("firing rate of the stationary ensemble") {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  const auto ss = solve_steady_state(k, 200);
  auto e = init_from_profile(ss.profile, 1.0, 10000, 20261019);
  e.run_until(k, 5.0);
  std::size_t resets = 0;
  for (const auto& s : e.spike_log()) resets += s.cascade_size;
  CHECK(resets == e.total_resets());
  const double rate = static_cast<double>(resets) / (10000.0 * 5.0);
  CHECK(empirical_firing_rate(e, 5.0) == doctest::Approx(rate));
  CHECK(std::abs(rate - 2.0) / 2.0 <= 0.05);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(ParticleEnsemble({}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ParticleEnsemble({1.5}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(init_from_profile(uniform(10), 1.0, 0, 1), InvalidArgument);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pulsefield/phase_response.hpp"
#include "pulsefield/quantile.hpp"

namespace pulsefield {

struct SpikeEvent {
  std::size_t index = 0;
  double t = 0.0;
  std::size_t cascade_size = 0;
};

enum class Sampling { iid, stratified };

/// Finite population of pulse-coupled oscillators with unit drift,
/// reset to 0 at Φ_F and jumps K(φ)/count to the others on each firing.
class ParticleEnsemble {
 public:
  ParticleEnsemble(std::vector<double> phases, double phi_f, std::uint64_t seed = 0);

  std::span<const double> phases() const { return phases_; }
  std::vector<double> sorted_phases() const;
  std::size_t size() const { return phases_.size(); }
  double phi_f() const { return phi_f_; }
  double time() const { return t_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<SpikeEvent>& spike_log() const { return log_; }
  std::size_t total_resets() const { return resets_; }

  /// Drifts every phase until the leader reaches Φ_F; leaders tied at the
  /// maximum land on Φ_F exactly. Returns the elapsed time.
  double advance_to_next_firing();

  /// Processes the cascade triggered by every phase at or above Φ_F and
  /// logs it. Returns the number of particles that fired.
  std::size_t fire_and_cascade(const PhaseResponse& k);

  /// Alternates drift and cascades until the next firing would happen after
  /// `t_end`, then drifts to `t_end`.
  void run_until(const PhaseResponse& k, double t_end);

  /// Runs exactly `events` cascades.
  void run_events(const PhaseResponse& k, std::size_t events);

 private:
  std::vector<double> phases_;
  double phi_f_;
  double t_ = 0.0;
  std::uint64_t seed_;
  std::vector<SpikeEvent> log_;
  std::size_t resets_ = 0;
  std::vector<char> fired_;
  std::vector<double> jump_;
  std::vector<std::size_t> pending_;
};

/// Uniform doubles in [0, 1) from the top 53 bits of std::mt19937_64.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

ParticleEnsemble init_from_profile(const QuantileProfile& profile, double phi_f, std::size_t count,
                                   std::uint64_t seed, Sampling sampling = Sampling::iid);

ParticleEnsemble init_from_distribution(const DiscreteDistribution& dist, double phi_f, std::size_t count,
                                        std::uint64_t seed, Sampling sampling = Sampling::iid);

QuantileProfile empirical_quantile(const ParticleEnsemble& e, std::size_t cells);

/// Resets per particle per unit time over the elapsed interval.
double empirical_firing_rate(const ParticleEnsemble& e, double elapsed);

}  // namespace pulsefield

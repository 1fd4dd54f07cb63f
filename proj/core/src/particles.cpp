#include "pulsefield/particles.hpp"

#include <algorithm>
#include <cmath>

#include "pulsefield/errors.hpp"

namespace pulsefield {

ParticleEnsemble::ParticleEnsemble(std::vector<double> phases, double phi_f, std::uint64_t seed)
    : phases_(std::move(phases)), phi_f_(phi_f), seed_(seed) {
  if (!(phi_f > 0.0)) throw InvalidArgument("phi_f must be positive");
  if (phases_.empty()) throw InvalidArgument("ensemble needs at least one particle");
  for (double p : phases_) {
    if (!(p >= 0.0 && p <= phi_f)) throw InvalidArgument("particle phase outside [0, phi_f]");
  }
  fired_.assign(phases_.size(), 0);
  jump_.assign(phases_.size(), 0.0);
}

std::vector<double> ParticleEnsemble::sorted_phases() const {
  std::vector<double> out(phases_);
  std::sort(out.begin(), out.end());
  return out;
}

double ParticleEnsemble::advance_to_next_firing() {
  const double top = *std::max_element(phases_.begin(), phases_.end());
  const double dt = phi_f_ - top;
  if (dt <= 0.0) return 0.0;
  const double below = std::nextafter(phi_f_, 0.0);
  for (double& p : phases_) {
    if (p == top) {
      p = phi_f_;
    } else {
      p += dt;
      if (p >= phi_f_) p = below;
    }
  }
  t_ += dt;
  return dt;
}

std::size_t ParticleEnsemble::fire_and_cascade(const PhaseResponse& k) {
  const std::size_t n = phases_.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  pending_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (phases_[i] >= phi_f_) pending_.push_back(i);
  }
  if (pending_.empty()) return 0;
  std::vector<std::size_t> fired_list;
  while (!pending_.empty()) {
    // Highest phase first; ties go to the lower index.
    auto best = pending_.begin();
    for (auto it = pending_.begin() + 1; it != pending_.end(); ++it) {
      if (phases_[*it] > phases_[*best] || (phases_[*it] == phases_[*best] && *it < *best)) best = it;
    }
    const std::size_t i = *best;
    pending_.erase(best);
    fired_[i] = 1;
    fired_list.push_back(i);
    phases_[i] = 0.0;
    k.values(phases_, jump_);
    for (std::size_t j = 0; j < n; ++j) {
      if (fired_[j]) continue;
      const bool was_pending = phases_[j] >= phi_f_;
      phases_[j] += jump_[j] * inv_n;
      if (!was_pending && phases_[j] >= phi_f_) pending_.push_back(j);
    }
  }
  for (std::size_t i : fired_list) fired_[i] = 0;
  resets_ += fired_list.size();
  log_.push_back({log_.size(), t_, fired_list.size()});
  return fired_list.size();
}

void ParticleEnsemble::run_until(const PhaseResponse& k, double t_end) {
  while (true) {
    const double top = *std::max_element(phases_.begin(), phases_.end());
    const double dt = phi_f_ - top;
    if (t_ + dt > t_end) break;
    advance_to_next_firing();
    fire_and_cascade(k);
  }
  const double dt = t_end - t_;
  if (dt > 0.0) {
    for (double& p : phases_) p += dt;
    t_ = t_end;
  }
}

void ParticleEnsemble::run_events(const PhaseResponse& k, std::size_t events) {
  for (std::size_t e = 0; e < events; ++e) {
    advance_to_next_firing();
    fire_and_cascade(k);
  }
}

namespace {

double clamp_phase(double p, double phi_f) {
  if (p >= phi_f) return std::nextafter(phi_f, 0.0);
  return std::max(p, 0.0);
}

std::vector<double> levels(std::size_t count, std::uint64_t seed, Sampling sampling) {
  std::vector<double> u(count);
  if (sampling == Sampling::stratified) {
    for (std::size_t i = 0; i < count; ++i) u[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
  } else {
    UniformStream rng(seed);
    for (auto& x : u) x = rng.next();
  }
  return u;
}

}  // namespace

ParticleEnsemble init_from_profile(const QuantileProfile& profile, double phi_f, std::size_t count,
                                   std::uint64_t seed, Sampling sampling) {
  if (count < 1) throw InvalidArgument("ensemble needs at least one particle");
  if (profile.cells() < 1) throw InvalidArgument("profile needs at least one cell");
  std::vector<double> phases;
  phases.reserve(count);
  for (double u : levels(count, seed, sampling)) phases.push_back(clamp_phase(interpolate_quantile(profile, u), phi_f));
  return ParticleEnsemble(std::move(phases), phi_f, seed);
}

ParticleEnsemble init_from_distribution(const DiscreteDistribution& dist, double phi_f, std::size_t count,
                                        std::uint64_t seed, Sampling sampling) {
  if (count < 1) throw InvalidArgument("ensemble needs at least one particle");
  dist.validate(phi_f);
  std::vector<double> phases;
  phases.reserve(count);
  for (double u : levels(count, seed, sampling)) phases.push_back(clamp_phase(inverse_cdf(dist, u), phi_f));
  return ParticleEnsemble(std::move(phases), phi_f, seed);
}

QuantileProfile empirical_quantile(const ParticleEnsemble& e, std::size_t cells) {
  return pseudo_inverse(DiscreteDistribution::empirical(std::vector<double>(e.phases().begin(), e.phases().end())),
                        cells);
}

double empirical_firing_rate(const ParticleEnsemble& e, double elapsed) {
  if (!(elapsed > 0.0)) throw InvalidArgument("elapsed time must be positive");
  return static_cast<double>(e.total_resets()) / (static_cast<double>(e.size()) * elapsed);
}

}  // namespace pulsefield

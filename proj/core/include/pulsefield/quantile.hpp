#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pulsefield/phase_response.hpp"

namespace pulsefield {

/// Q and Z = ∂ηQ at the nodes η_j = j/M, j = 0..M.
struct QuantileProfile {
  std::vector<double> q;
  std::vector<double> z;
  /// True for pseudo-inverses of measures with atoms or vacuum; Z may then
  /// be zero or infinite and the profile is not usable as PDE data.
  bool generalized = false;

  std::size_t cells() const { return q.empty() ? 0 : q.size() - 1; }
  double eta(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(cells()); }
};

/// Atoms at `support` with `weights`; weights sum to one.
struct DiscreteDistribution {
  std::vector<double> support;
  std::vector<double> weights;

  static DiscreteDistribution empirical(std::vector<double> points);
  void validate(double phi_f) const;
};

/// Density sampled at equally spaced nodes spanning [0, Φ_F], linear between nodes.
struct SampledDensity {
  double phi_f = 1.0;
  std::vector<double> values;
};

/// A sampled absolutely continuous part with total mass 1 − Σ atom weights,
/// plus atoms. Used for measures that mix both.
struct MixedMeasure {
  SampledDensity continuous;
  DiscreteDistribution atoms;
};

enum class ProfileGrade { pde, generalized };

QuantileProfile quantile_from_density(const SampledDensity& rho, std::size_t cells,
                                      ProfileGrade grade = ProfileGrade::pde);

/// Same transform for a density given as a callable, integrated with
/// composite Gauss-Legendre and inverted by Newton.
QuantileProfile quantile_from_density(const std::function<double(double)>& rho, double phi_f,
                                      std::size_t cells, ProfileGrade grade = ProfileGrade::pde);

/// Q(η) = inf{φ : F(φ) ≥ η}; at η = 0 the right limit (the bottom of the support) is used.
QuantileProfile pseudo_inverse(const DiscreteDistribution& dist, std::size_t cells);
QuantileProfile pseudo_inverse(const MixedMeasure& measure, std::size_t cells);

/// Evaluates the inverse CDF of a discrete distribution at a single level.
double inverse_cdf(const DiscreteDistribution& dist, double eta);

enum class LpNorm { one, two, infinity };

double wasserstein(const QuantileProfile& a, const QuantileProfile& b, LpNorm p);
double bv_distance(const QuantileProfile& a, const QuantileProfile& b);
std::vector<double> p0_project(std::span<const double> values);
std::vector<double> p0_project(const QuantileProfile& profile);
double modified_l2_distance(const QuantileProfile& a, const QuantileProfile& b);

struct IkValues {
  double i = 0.0;
  double i_k = 0.0;
};

/// I = ‖Z1 − Z2‖_{L¹} and I_K = ∫ ∂η(K(Q1) − K(Q2))·sign(Z1 − Z2), sign(0) = 0.
IkValues ik_functional(const QuantileProfile& a, const QuantileProfile& b, const PhaseResponse& k,
                       double boundary_tol = 1e-9);

/// ∫ρ dφ reassembled from the profile as Σ ½(1/Z_j + 1/Z_{j+1})(Q_{j+1} − Q_j).
double mass_from_profile(const QuantileProfile& profile);

/// Density values 1/Z_j at the phases Q_j.
std::vector<double> density_at_nodes(const QuantileProfile& profile);

/// Piecewise-linear evaluation of Q at an arbitrary level η ∈ [0, 1].
double interpolate_quantile(const QuantileProfile& profile, double eta);

}  // namespace pulsefield

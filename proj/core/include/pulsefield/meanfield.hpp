#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pulsefield/phase_response.hpp"
#include "pulsefield/quantile.hpp"

namespace pulsefield {

enum class RunMode { original, relaxed };

enum class InnerIntegrator { rk4 };

struct SolverConfig {
  std::size_t cells = 200;
  double newton_tol = 1e-12;
  int newton_max_iter = 100;
  double blowup_eps = 1e-8;
  std::size_t max_steps = 1'000'000;
  InnerIntegrator inner_integrator = InnerIntegrator::rk4;
  /// RK4 substeps per Δτ for each characteristic.
  int substeps = 1;
  /// Keep a profile snapshot every this many steps (0 disables snapshots).
  std::size_t snapshot_every = 1;
  /// Maximum retained snapshots. 0 selects the default: unlimited for
  /// cells ≤ 400, otherwise a ring of 2·(cells + 1).
  std::size_t snapshot_capacity = 0;

  void validate() const;
  std::size_t effective_capacity() const;
};

struct MeanFieldState {
  double tau = 0.0;
  double t = 0.0;
  QuantileProfile profile;
  double n_tilde = 0.0;
  RunMode mode = RunMode::original;
  std::size_t step = 0;
};

struct InitialCheck {
  double n_init = 0.0;
  std::vector<std::string> warnings;
};

/// Checks the constraint Z_M > K(Φ_F) and first-order compatibility
/// Z_M − Z_0 = K(Φ_F) − K(0) within 1e-6·Φ_F.
InitialCheck validate_initial(const QuantileProfile& q_init, const PhaseResponse& k);

/// Validates and wraps the profile as the τ = 0 state, with Ñ = Z_M − K(Φ_F).
MeanFieldState make_initial_state(const QuantileProfile& q_init, const PhaseResponse& k, RunMode mode);

struct StepResult {
  MeanFieldState state;
  double root = 0.0;
  int iterations = 0;
  /// Original mode only: the root fell to blowup_eps or below. `state` then
  /// holds the rejected proposal.
  bool blow_up = false;
};

StepResult step(const MeanFieldState& state, const PhaseResponse& k, const SolverConfig& cfg);

/// Row k holds the state at τ_k; its n_tilde is the multiplier of the step
/// ending at τ_k (row 0 carries the initial Z_M − K(Φ_F)).
struct TrajectoryRow {
  std::size_t step = 0;
  double tau = 0.0;
  double t = 0.0;
  double n_tilde = 0.0;
  double rate = 0.0;  // N = 1/Ñ, NaN when Ñ ≤ 0
  double min_z = 0.0;
  double max_z = 0.0;
  double res_compat = 0.0;    // Z_M − Z_0 − (K(Φ_F) − K(0))
  double res_boundary = 0.0;  // Q_M − Φ_F
  bool monotone = true;
};

struct Snapshot {
  std::size_t step = 0;
  double tau = 0.0;
  double t = 0.0;
  double n_tilde = 0.0;
  std::vector<double> q;
  std::vector<double> z;
};

enum class Outcome { completed, blown_up, relaxed_continued, step_limit };

std::string to_string(Outcome o);
std::string to_string(RunMode m);

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  std::deque<Snapshot> snapshots;
  Outcome outcome = Outcome::completed;
  std::optional<double> tau_star;
  std::optional<double> t_star;
  /// Relaxed mode: first row at which Ñ ≤ 0; rows from here on are non-physical.
  std::optional<std::size_t> first_nonphysical_row;
  /// Largest distance any characteristic foot strayed outside [0, Φ_F].
  double max_domain_excursion = 0.0;
  RunMode mode = RunMode::original;
  std::size_t cells = 0;
  double phi_f = 1.0;
  QuantileProfile initial;
  MeanFieldState final_state;

  /// Snapshot with the given step index, if retained.
  const Snapshot* snapshot_at_step(std::size_t step) const;
};

TrajectoryRecord run(const MeanFieldState& initial, double tau_end, const PhaseResponse& k,
                     const SolverConfig& cfg);

struct HProfile {
  std::vector<double> values;
  double h0 = 0.0;
  double hm = 0.0;
};

/// H_j = Z_j − K(Q_j).
HProfile h_profile(const MeanFieldState& state, const PhaseResponse& k);
HProfile h_profile(const QuantileProfile& profile, const PhaseResponse& k);

/// Ñ recovered from the boundary derivative, Z_M − K(Φ_F). Cross-check only.
double explicit_n_tilde(const QuantileProfile& profile, const PhaseResponse& k);

struct IntegralResidualPoint {
  double tau = 0.0;
  double recorded = 0.0;
  double recomputed = 0.0;
  double residual = 0.0;
  double kernel_identity_residual = 0.0;
  double min_kernel = 0.0;
};

struct IntegralResidual {
  std::vector<IntegralResidualPoint> points;
  double max_residual = 0.0;
  double max_kernel_identity_residual = 0.0;
  double min_kernel = 0.0;
};

/// Recomputes Ñ(τ) from the linear integral equation along diagonal
/// characteristics for every stored τ > 1 whose full unit history is present.
IntegralResidual integral_equation_residual(const TrajectoryRecord& record, const PhaseResponse& k);

/// max − min of Ñ over each unit window [n, n+1] of the recorded rows.
std::vector<double> unit_interval_oscillation(const TrajectoryRecord& record);

}  // namespace pulsefield

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pulsefield/meanfield.hpp"
#include "pulsefield/phase_response.hpp"
#include "pulsefield/quantile.hpp"

namespace pulsefield {

struct TheoremReport {
  std::string theorem;
  std::string scenario;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> bounds;
  bool passed = false;
  double tolerance = 0.0;
  std::string note;

  double measured_value(const std::string& key) const;
  double bound_value(const std::string& key) const;
};

/// Constant of the multiplicative discretisation slack (1 + C/M)^τ, measured
/// once on the affine two-run case at M = 200 (see calibrate_slack_c) and
/// rounded up.
inline constexpr double kFrozenSlackC = 2.2;

struct DistanceSeries {
  std::vector<double> tau;
  std::vector<double> distance;
};

/// Distances at every step both runs retain a snapshot for, truncated at the
/// first non-physical row of either run.
DistanceSeries common_distance_series(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                      double (*metric)(const QuantileProfile&, const QuantileProfile&));

/// Least-squares slope of log D against τ over the first half of the series.
double fitted_log_rate(const DistanceSeries& series);

struct ContractionBand {
  double fitted_rate = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  DistanceSeries series;
  /// max over τ of D/upper and lower/D; both ≤ 1 when the band holds.
  double worst_upper_ratio = 0.0;
  double worst_lower_ratio = 0.0;
  TheoremReport report;
};

ContractionBand contraction_band(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k,
                                 double slack_c = kFrozenSlackC, const std::string& scenario = "");

/// Smallest C with both pointwise bounds holding under (1 + C/M)^τ.
double calibrate_slack_c(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k);

TheoremReport l2_rate_check(const TrajectoryRecord& a, const TrajectoryRecord& b, const PhaseResponse& k,
                            double rel_tol = 1e-3, const std::string& scenario = "");

enum class MomentKind { identity, inverse_k };

struct MomentSeries {
  std::vector<double> tau;
  std::vector<double> value;
  /// Central-difference derivative and the assembled right-hand side at
  /// interior snapshots.
  std::vector<double> derivative_tau;
  std::vector<double> derivative;
  std::vector<double> rhs;
  double max_residual = 0.0;
};

MomentSeries moment_series(const TrajectoryRecord& traj, const PhaseResponse& k, MomentKind kind);

/// ∫₀¹ m(Q) dη for a single profile.
double moment(const QuantileProfile& profile, const PhaseResponse& k, MomentKind kind);

/// A-priori upper bounds on the blow-up time and, when a trajectory is
/// supplied, checks of each against it with an additive slack of 2/M.
TheoremReport blowup_bounds(const PhaseResponse& k, const QuantileProfile& q_init,
                            const TrajectoryRecord* traj = nullptr, const std::string& scenario = "");

TheoremReport bounded_bv_check(const TrajectoryRecord& a, const TrajectoryRecord& b, const std::string& scenario = "");
TheoremReport bounded_bv_check(const QuantileProfile& a, const QuantileProfile& b, double phi_f,
                               const std::string& scenario = "");

/// min H_init − tol ≤ Ñ(τ) ≤ max H_init + tol on every recorded row.
TheoremReport n_bounds_check(const TrajectoryRecord& traj, const PhaseResponse& k, double tol,
                             const std::string& scenario = "");

}  // namespace pulsefield

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pulsefield/numerics.hpp"

namespace pulsefield {

/// K(φ) = slope·φ + intercept.
struct Affine {
  double slope = 0.0;
  double intercept = 0.0;
};

/// K(φ) = c0 + c1·φ + c2·φ².
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// K(φ) = amplitude·exp(rate·φ).
struct Exponential {
  double amplitude = 1.0;
  double rate = 0.0;
};

/// Samples of K at equally spaced nodes spanning [0, Φ_F], joined by a
/// natural cubic spline.
struct Tabulated {
  std::vector<double> samples;
};

using ResponseForm = std::variant<Affine, Quadratic, Exponential, Tabulated>;

struct ResponseConstants {
  double k_min = 0.0;
  double k_max = 0.0;
  double harmonic_integral = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  double min_slope = 0.0;
  double max_slope = 0.0;
};

/// The phase response function together with its C² extension past [0, Φ_F].
/// Immutable; copies share the spline tables.
class PhaseResponse {
 public:
  PhaseResponse(ResponseForm form, double phi_f, const QuadratureOptions& quad = {});

  double value(double phi) const { return eval(phi, 0); }
  double slope(double phi) const { return eval(phi, 1); }
  double curvature(double phi) const { return eval(phi, 2); }
  double operator()(double phi) const { return eval(phi, 0); }

  /// K, K' or K'' (order 0, 1, 2). Total on the real line.
  double eval(double phi, int order) const;

  /// Writes K(phi[i]) into out[i].
  void values(std::span<const double> phi, std::span<double> out) const;

  double phi_f() const { return phi_f_; }
  const ResponseForm& form() const { return form_; }
  const ResponseConstants& constants() const { return constants_; }

  /// Slope of K when the form is affine (a tabulated form never counts).
  std::optional<double> affine_slope() const;
  bool is_constant() const;
  std::string describe() const;

 private:
  struct Spline;

  double eval_inside(double phi, int order) const;
  double eval_outside(double phi, int order) const;

  ResponseForm form_;
  double phi_f_;
  std::shared_ptr<const Spline> spline_;
  ResponseConstants constants_;
};

/// Recomputes the derived constants with explicit quadrature options.
ResponseConstants compute_constants(const PhaseResponse& k, const QuadratureOptions& quad = {});

/// m(φ) = ∫₀^φ 1/K, tabulated once on [0, Φ_F] and interpolated with cubic
/// Hermite segments using m' = 1/K; falls back to quadrature outside.
class HarmonicPrimitive {
 public:
  explicit HarmonicPrimitive(const PhaseResponse& k, std::size_t cells = 2048);
  double operator()(double phi) const;
  double total() const { return table_.back(); }

 private:
  PhaseResponse k_;
  double h_;
  std::vector<double> table_;
  std::vector<double> inv_k_;
};

}  // namespace pulsefield

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

namespace pulsefield {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  std::size_t max_evaluations = std::size_t{1} << 20;
};

/// Adaptive Simpson with Richardson correction. Throws QuadratureFailure when
/// the evaluation budget runs out before the tolerance is met.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts = {});

/// Composite 5-point Gauss-Legendre over `cells` equal cells.
double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                      std::size_t cells = 1);

/// Composite trapezoid of nodal values on a uniform grid over [0,1].
double trapezoid_unit(std::span<const double> values);

struct RootOptions {
  double f_tol = 1e-12;
  double x_tol = 0.0;
  int max_iter = 100;
};

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton iteration kept inside a sign-change bracket, falling back to
/// bisection whenever the Newton step leaves the bracket or stalls.
/// `fdf` returns (f, f').
RootResult safeguarded_newton(const std::function<std::pair<double, double>(double)>& fdf,
                              double lo, double hi, const RootOptions& opts = {});

/// Golden-section search for a local minimiser of f on [a,b].
double golden_minimize(const std::function<double(double)>& f, double a, double b,
                       double x_tol = 1e-12);

}  // namespace pulsefield

#include "pulsefield/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "pulsefield/errors.hpp"

namespace pulsefield {

namespace {

struct SimpsonSegment {
  double a, m, b;
  double fa, fm, fb;
  double whole;
  double tol;
  int depth;
};

constexpr int kMaxDepth = 50;

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  std::size_t evals = 0;
  auto eval = [&](double x) {
    if (++evals > opts.max_evaluations) {
      throw QuadratureFailure("adaptive Simpson exceeded its evaluation budget of " +
                              std::to_string(opts.max_evaluations));
    }
    const double v = f(x);
    if (!std::isfinite(v)) throw QuadratureFailure("integrand is not finite");
    return v;
  };

  const double m = 0.5 * (a + b);
  const double fa = eval(a), fm = eval(m), fb = eval(b);
  std::vector<SimpsonSegment> stack;
  stack.push_back({a, m, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), opts.abs_tol, 0});

  double total = 0.0;
  while (!stack.empty()) {
    const SimpsonSegment s = stack.back();
    stack.pop_back();
    const double lm = 0.5 * (s.a + s.m);
    const double rm = 0.5 * (s.m + s.b);
    const double flm = eval(lm), frm = eval(rm);
    const double left = (s.m - s.a) / 6.0 * (s.fa + 4.0 * flm + s.fm);
    const double right = (s.b - s.m) / 6.0 * (s.fm + 4.0 * frm + s.fb);
    const double delta = left + right - s.whole;
    if (std::abs(delta) <= 15.0 * s.tol || s.depth >= kMaxDepth) {
      total += left + right + delta / 15.0;
      continue;
    }
    stack.push_back({s.a, lm, s.m, s.fa, flm, s.fm, left, 0.5 * s.tol, s.depth + 1});
    stack.push_back({s.m, rm, s.b, s.fm, frm, s.fb, right, 0.5 * s.tol, s.depth + 1});
  }
  return total;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                      std::size_t cells) {
  static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights{0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};
  if (cells == 0) cells = 1;
  const double h = (b - a) / static_cast<double>(cells);
  double sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double mid = a + (static_cast<double>(c) + 0.5) * h;
    double cell = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) cell += weights[i] * f(mid + 0.5 * h * nodes[i]);
    sum += 0.5 * h * cell;
  }
  return sum;
}

double trapezoid_unit(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("trapezoid needs at least two nodes");
  const std::size_t m = values.size() - 1;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t j = 1; j < m; ++j) sum += values[j];
  return sum / static_cast<double>(m);
}

RootResult safeguarded_newton(const std::function<std::pair<double, double>(double)>& fdf,
                              double lo, double hi, const RootOptions& opts) {
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  (void)dlo;
  (void)dhi;
  RootResult out;
  if (std::abs(flo) <= opts.f_tol) return {lo, flo, 0, true};
  if (std::abs(fhi) <= opts.f_tol) return {hi, fhi, 0, true};
  if ((flo > 0.0) == (fhi > 0.0)) throw RootFindFailed("root is not bracketed");
  // Orient so that f(lo) < 0 < f(hi).
  if (flo > 0.0) std::swap(lo, hi);

  double x = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [fx, dfx] = fdf(x);
  for (int it = 1; it <= opts.max_iter; ++it) {
    out.iterations = it;
    if (std::abs(fx) <= opts.f_tol) {
      out.root = x;
      out.residual = fx;
      out.converged = true;
      return out;
    }
    if (fx < 0.0) lo = x; else hi = x;
    const bool newton_outside = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
    const bool newton_slow = std::abs(2.0 * fx) > std::abs(dx_old * dfx);
    dx_old = dx;
    if (newton_outside || newton_slow || dfx == 0.0) {
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx = fx / dfx;
      x -= dx;
    }
    if (std::abs(hi - lo) <= opts.x_tol ||
        std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      std::tie(fx, dfx) = fdf(x);
      out.root = x;
      out.residual = fx;
      out.converged = std::abs(fx) <= opts.f_tol;
      return out;
    }
    std::tie(fx, dfx) = fdf(x);
  }
  out.root = x;
  out.residual = fx;
  out.converged = std::abs(fx) <= opts.f_tol;
  return out;
}

double golden_minimize(const std::function<double(double)>& f, double a, double b, double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > x_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace pulsefield

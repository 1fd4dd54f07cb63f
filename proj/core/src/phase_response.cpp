#include "pulsefield/phase_response.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pulsefield/errors.hpp"

namespace pulsefield {

struct PhaseResponse::Spline {
  double h = 0.0;
  std::vector<double> y;
  std::vector<double> m;  // second derivatives at nodes

  Spline(const std::vector<double>& samples, double phi_f) : y(samples) {
    const std::size_t n = y.size() - 1;
    h = phi_f / static_cast<double>(n);
    m.assign(n + 1, 0.0);
    if (n < 2) return;
    // Natural end conditions; tridiagonal (1, 4, 1) system for interior nodes.
    const std::size_t k = n - 1;
    std::vector<double> c(k, 0.0), d(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double rhs = 6.0 / (h * h) * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
      const double denom = 4.0 - (i > 0 ? c[i - 1] : 0.0);
      c[i] = 1.0 / denom;
      d[i] = (rhs - (i > 0 ? d[i - 1] : 0.0)) / denom;
    }
    m[k] = d[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = d[i] - c[i] * m[i + 2];
  }

  double eval(double x, int order) const {
    const std::size_t n = y.size() - 1;
    auto i = static_cast<std::size_t>(std::clamp(std::floor(x / h), 0.0, static_cast<double>(n - 1)));
    const double a = (static_cast<double>(i + 1) * h - x) / h;
    const double b = 1.0 - a;
    switch (order) {
      case 0:
        return a * y[i] + b * y[i + 1] +
               ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
      case 1:
        return (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[i] +
               (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1];
      default:
        return a * m[i] + b * m[i + 1];
    }
  }
};

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidResponse(std::string("non-finite parameter: ") + what);
}

// Smoothstep weight w(s) = 1 - 3s² + 2s³ and the moments used by the extension.
double blend_w(double s) { return 1.0 - 3.0 * s * s + 2.0 * s * s * s; }
double blend_dw(double s) { return -6.0 * s + 6.0 * s * s; }
double blend_int_w(double s) { return s - s * s * s + 0.5 * s * s * s * s; }
double blend_int_sw(double s) { return 0.5 * s * s - 0.75 * s * s * s * s + 0.4 * s * s * s * s * s; }

}  // namespace

PhaseResponse::PhaseResponse(ResponseForm form, double phi_f, const QuadratureOptions& quad)
    : form_(std::move(form)), phi_f_(phi_f) {
  if (!(phi_f > 0.0) || !std::isfinite(phi_f)) throw InvalidResponse("phi_f must be positive and finite");
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          require_finite(f.slope, "k");
          require_finite(f.intercept, "b");
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          require_finite(f.c0, "c0");
          require_finite(f.c1, "c1");
          require_finite(f.c2, "c2");
        } else if constexpr (std::is_same_v<T, Exponential>) {
          require_finite(f.amplitude, "a");
          require_finite(f.rate, "r");
        } else {
          if (f.samples.size() < 2) throw InvalidResponse("tabulated K needs at least two samples");
          for (double v : f.samples) require_finite(v, "samples");
          spline_ = std::make_shared<const Spline>(f.samples, phi_f_);
        }
      },
      form_);

  constexpr std::size_t kSamples = 10000;
  std::vector<double> xs(kSamples + 1), vs(kSamples + 1);
  for (std::size_t i = 0; i <= kSamples; ++i) {
    xs[i] = phi_f_ * static_cast<double>(i) / kSamples;
    vs[i] = eval_inside(xs[i], 0);
    if (!(vs[i] > 0.0)) {
      std::ostringstream os;
      os << "K must be positive on [0, phi_f]; K(" << xs[i] << ") = " << vs[i];
      throw InvalidResponse(os.str());
    }
  }
  double lo = *std::min_element(vs.begin(), vs.end());
  double hi = *std::max_element(vs.begin(), vs.end());
  for (std::size_t i = 1; i < kSamples; ++i) {
    if (vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1]) {
      const double x = golden_minimize([&](double p) { return eval_inside(p, 0); }, xs[i - 1], xs[i + 1]);
      const double v = eval_inside(x, 0);
      if (!(v > 0.0)) {
        std::ostringstream os;
        os << "K must be positive on [0, phi_f]; refined minimum K(" << x << ") = " << v;
        throw InvalidResponse(os.str());
      }
      lo = std::min(lo, v);
    }
    if (vs[i] >= vs[i - 1] && vs[i] >= vs[i + 1]) {
      const double x = golden_minimize([&](double p) { return -eval_inside(p, 0); }, xs[i - 1], xs[i + 1]);
      hi = std::max(hi, eval_inside(x, 0));
    }
  }
  constants_ = compute_constants(*this, quad);
  constants_.min_value = lo;
  constants_.max_value = hi;
}

double PhaseResponse::eval_inside(double phi, int order) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          if (order == 0) return f.slope * phi + f.intercept;
          return order == 1 ? f.slope : 0.0;
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          if (order == 0) return f.c0 + phi * (f.c1 + phi * f.c2);
          return order == 1 ? f.c1 + 2.0 * f.c2 * phi : 2.0 * f.c2;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          const double base = f.amplitude * std::exp(f.rate * phi);
          return order == 0 ? base : (order == 1 ? f.rate * base : f.rate * f.rate * base);
        } else {
          return spline_->eval(phi, order);
        }
      },
      form_);
}

double PhaseResponse::eval_outside(double phi, int order) const {
  const double margin = 0.5 * phi_f_;
  const bool right = phi > phi_f_;
  const double end = right ? phi_f_ : 0.0;
  const double k0 = eval_inside(end, 0);
  const double k1 = eval_inside(end, 1);
  const double k2 = eval_inside(end, 2);
  const double dist = right ? phi - phi_f_ : -phi;
  const double s = std::min(dist / margin, 1.0);
  const double x = phi - end;  // signed offset from the endpoint
  switch (order) {
    case 0: {
      const double a = k1 * margin * blend_int_w(s);
      const double c = k2 * margin * margin * blend_int_sw(s);
      return right ? k0 + a + c : k0 - a + c;
    }
    case 1:
      return (k1 + k2 * x) * blend_w(s);
    default: {
      if (s >= 1.0) return 0.0;
      const double ds_dx = right ? 1.0 / margin : -1.0 / margin;
      return k2 * blend_w(s) + (k1 + k2 * x) * blend_dw(s) * ds_dx;
    }
  }
}

double PhaseResponse::eval(double phi, int order) const {
  if (order < 0 || order > 2) throw InvalidArgument("derivative order must be 0, 1 or 2");
  if (phi >= 0.0 && phi <= phi_f_) return eval_inside(phi, order);
  return eval_outside(phi, order);
}

void PhaseResponse::values(std::span<const double> phi, std::span<double> out) const {
  if (out.size() < phi.size()) throw InvalidArgument("output span too small");
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          for (std::size_t i = 0; i < phi.size(); ++i) {
            const double p = phi[i];
            out[i] = (p >= 0.0 && p <= phi_f_) ? f.slope * p + f.intercept : eval_outside(p, 0);
          }
        } else {
          for (std::size_t i = 0; i < phi.size(); ++i) out[i] = eval(phi[i], 0);
        }
      },
      form_);
}

std::optional<double> PhaseResponse::affine_slope() const {
  if (const auto* a = std::get_if<Affine>(&form_)) return a->slope;
  if (const auto* q = std::get_if<Quadratic>(&form_); q && q->c2 == 0.0) return q->c1;
  if (const auto* e = std::get_if<Exponential>(&form_); e && e->rate == 0.0) return 0.0;
  return std::nullopt;
}

bool PhaseResponse::is_constant() const {
  const auto s = affine_slope();
  return s && *s == 0.0;
}

std::string PhaseResponse::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          os << "affine(k=" << f.slope << ", b=" << f.intercept << ")";
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          os << "quadratic(c0=" << f.c0 << ", c1=" << f.c1 << ", c2=" << f.c2 << ")";
        } else if constexpr (std::is_same_v<T, Exponential>) {
          os << "exponential(a=" << f.amplitude << ", r=" << f.rate << ")";
        } else {
          os << "tabulated(" << f.samples.size() << " samples)";
        }
      },
      form_);
  os << " on [0, " << phi_f_ << "]";
  return os.str();
}

ResponseConstants compute_constants(const PhaseResponse& k, const QuadratureOptions& quad) {
  ResponseConstants c;
  const double phi_f = k.phi_f();
  const double slope0 = k.eval(0.0, 1);
  if (const auto s = k.affine_slope()) {
    c.k_min = c.k_max = *s;
  } else {
    const double neg = adaptive_simpson([&](double p) { return std::min(k.eval(p, 2), 0.0); }, 0.0, phi_f, quad);
    const double pos = adaptive_simpson([&](double p) { return std::max(k.eval(p, 2), 0.0); }, 0.0, phi_f, quad);
    c.k_min = slope0 + neg;
    c.k_max = slope0 + pos;
  }
  if (k.is_constant()) {
    c.harmonic_integral = phi_f / k.eval(0.0, 0);
  } else {
    c.harmonic_integral = adaptive_simpson([&](double p) { return 1.0 / k.eval(p, 0); }, 0.0, phi_f, quad);
  }

  constexpr std::size_t kSamples = 10000;
  double smin = slope0, smax = slope0, vmin = k.eval(0.0, 0), vmax = vmin;
  for (std::size_t i = 0; i <= kSamples; ++i) {
    const double p = phi_f * static_cast<double>(i) / kSamples;
    const double s = k.eval(p, 1);
    const double v = k.eval(p, 0);
    smin = std::min(smin, s);
    smax = std::max(smax, s);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  c.min_slope = smin;
  c.max_slope = smax;
  c.min_value = vmin;
  c.max_value = vmax;
  return c;
}

HarmonicPrimitive::HarmonicPrimitive(const PhaseResponse& k, std::size_t cells) : k_(k) {
  if (cells < 1) cells = 1;
  h_ = k.phi_f() / static_cast<double>(cells);
  table_.assign(cells + 1, 0.0);
  inv_k_.assign(cells + 1, 0.0);
  for (std::size_t i = 0; i <= cells; ++i) inv_k_[i] = 1.0 / k.eval(h_ * static_cast<double>(i), 0);
  auto inv = [&](double p) { return 1.0 / k_.eval(p, 0); };
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = h_ * static_cast<double>(i);
    table_[i + 1] = table_[i] + gauss_legendre(inv, a, a + h_, 1);
  }
}

double HarmonicPrimitive::operator()(double phi) const {
  auto inv = [&](double p) { return 1.0 / k_.eval(p, 0); };
  const double phi_f = k_.phi_f();
  if (phi < 0.0) return -gauss_legendre(inv, phi, 0.0, 16);
  if (phi > phi_f) return table_.back() + gauss_legendre(inv, phi_f, phi, 16);
  const std::size_t n = table_.size() - 1;
  auto i = static_cast<std::size_t>(std::min(std::floor(phi / h_), static_cast<double>(n - 1)));
  const double t = (phi - h_ * static_cast<double>(i)) / h_;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * table_[i] + h10 * h_ * inv_k_[i] + h01 * table_[i + 1] + h11 * h_ * inv_k_[i + 1];
}

}  // namespace pulsefield

#include "pulsefield/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pulsefield/errors.hpp"

namespace pulsefield {

namespace {

constexpr double kNormTol = 1e-8;
constexpr double kRenormTol = 1e-4;
constexpr double kInf = std::numeric_limits<double>::infinity();

double normalisation_factor(double mass) {
  if (!std::isfinite(mass) || std::abs(mass - 1.0) > kRenormTol) {
    std::ostringstream os;
    os.precision(12);
    os << "density integrates to " << mass << ", expected 1";
    throw NotNormalized(os.str());
  }
  return std::abs(mass - 1.0) > kNormTol ? 1.0 / mass : 1.0;
}

// Solves a·s² + b·s = r for the smallest s ≥ 0 (b ≥ 0, r ≥ 0), clamped to [0, h].
double solve_cell(double rho_left, double rho_right, double h, double r) {
  if (r <= 0.0) return 0.0;
  const double a = 0.5 * (rho_right - rho_left) / h;
  const double b = rho_left;
  double s;
  if (std::abs(a) * h <= 1e-15 * std::max(b, 1e-300)) {
    s = b > 0.0 ? r / b : h;
  } else {
    const double disc = std::max(b * b + 4.0 * a * r, 0.0);
    const double denom = b + std::sqrt(disc);
    s = denom > 0.0 ? 2.0 * r / denom : h;
  }
  return std::clamp(s, 0.0, h);
}

void difference_quotient_z(QuantileProfile& p) {
  const std::size_t m = p.cells();
  const double inv_h = static_cast<double>(m);
  p.z.assign(m + 1, 0.0);
  if (m == 0) return;
  p.z[0] = (p.q[1] - p.q[0]) * inv_h;
  p.z[m] = (p.q[m] - p.q[m - 1]) * inv_h;
  for (std::size_t j = 1; j < m; ++j) p.z[j] = 0.5 * (p.q[j + 1] - p.q[j - 1]) * inv_h;
}

void require_cells(std::size_t cells) {
  if (cells < 1) throw InvalidArgument("profile needs at least one cell");
}

void require_same_grid(const QuantileProfile& a, const QuantileProfile& b) {
  if (a.q.size() != b.q.size() || a.z.size() != b.z.size() || a.q.size() < 2) {
    throw GridMismatch("profiles live on different grids (" + std::to_string(a.cells()) + " vs " +
                       std::to_string(b.cells()) + " cells)");
  }
}

}  // namespace

DiscreteDistribution DiscreteDistribution::empirical(std::vector<double> points) {
  if (points.empty()) throw InvalidArgument("empirical measure needs at least one point");
  DiscreteDistribution d;
  const double w = 1.0 / static_cast<double>(points.size());
  d.weights.assign(points.size(), w);
  d.support = std::move(points);
  return d;
}

void DiscreteDistribution::validate(double phi_f) const {
  if (support.empty() || support.size() != weights.size()) {
    throw InvalidArgument("distribution needs matching, non-empty support and weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw InvalidArgument("distribution weights must be non-negative");
    if (!(support[i] >= 0.0 && support[i] <= phi_f)) throw InvalidArgument("atom outside [0, phi_f]");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw NotNormalized("distribution weights do not sum to 1");
}

QuantileProfile quantile_from_density(const SampledDensity& rho, std::size_t cells, ProfileGrade grade) {
  require_cells(cells);
  const auto& v = rho.values;
  if (v.size() < 2) throw InvalidArgument("sampled density needs at least two nodes");
  if (!(rho.phi_f > 0.0)) throw InvalidArgument("phi_f must be positive");
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw NonPositiveDensity("density samples must be finite and non-negative");
    if (grade == ProfileGrade::pde && x <= 0.0) {
      throw NonPositiveDensity("PDE-grade profile requested from a density with zeros");
    }
  }
  const std::size_t n = v.size() - 1;
  const double h = rho.phi_f / static_cast<double>(n);
  std::vector<double> f(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) f[i + 1] = f[i] + 0.5 * h * (v[i] + v[i + 1]);
  const double scale = normalisation_factor(f[n]);
  std::vector<double> r(v);
  for (auto& x : r) x *= scale;
  for (auto& x : f) x *= scale;
  f[n] = 1.0;

  auto rho_at = [&](double phi) {
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(phi / h), 0.0, static_cast<double>(n - 1)));
    const double t = (phi - h * static_cast<double>(i)) / h;
    return (1.0 - t) * r[i] + t * r[i + 1];
  };

  QuantileProfile out;
  out.generalized = grade == ProfileGrade::generalized;
  out.q.assign(cells + 1, 0.0);
  for (std::size_t j = 0; j <= cells; ++j) {
    const double eta = static_cast<double>(j) / static_cast<double>(cells);
    if (j == 0) {
      const auto it = std::upper_bound(f.begin(), f.end(), 0.0);
      const std::size_t i = static_cast<std::size_t>(it - f.begin());
      out.q[j] = h * static_cast<double>(i == 0 ? 0 : i - 1);
      continue;
    }
    if (j == cells && grade == ProfileGrade::pde) {
      out.q[j] = rho.phi_f;
      continue;
    }
    auto it = std::lower_bound(f.begin() + 1, f.end(), eta);
    if (it == f.end()) it = f.end() - 1;
    const std::size_t i = static_cast<std::size_t>(it - f.begin());
    const double s = solve_cell(r[i - 1], r[i], h, eta - f[i - 1]);
    out.q[j] = std::min(h * static_cast<double>(i - 1) + s, rho.phi_f);
  }
  out.z.assign(cells + 1, 0.0);
  for (std::size_t j = 0; j <= cells; ++j) {
    const double d = rho_at(out.q[j]);
    out.z[j] = d > 0.0 ? 1.0 / d : kInf;
  }
  return out;
}

QuantileProfile quantile_from_density(const std::function<double(double)>& rho, double phi_f,
                                      std::size_t cells, ProfileGrade grade) {
  require_cells(cells);
  if (!(phi_f > 0.0)) throw InvalidArgument("phi_f must be positive");
  const std::size_t n = std::max<std::size_t>(4096, 16 * cells);
  const double h = phi_f / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = rho(h * static_cast<double>(i));
    if (!(x >= 0.0) || !std::isfinite(x)) throw NonPositiveDensity("density must be finite and non-negative");
    if (grade == ProfileGrade::pde && x <= 0.0) {
      throw NonPositiveDensity("PDE-grade profile requested from a density with zeros");
    }
  }
  std::vector<double> f(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = h * static_cast<double>(i);
    f[i + 1] = f[i] + gauss_legendre(rho, a, a + h, 1);
  }
  const double scale = normalisation_factor(f[n]);
  const double total = f[n];

  QuantileProfile out;
  out.generalized = grade == ProfileGrade::generalized;
  out.q.assign(cells + 1, 0.0);
  out.z.assign(cells + 1, 0.0);
  for (std::size_t j = 1; j <= cells; ++j) {
    if (j == cells && grade == ProfileGrade::pde) {
      out.q[j] = phi_f;
      break;
    }
    const double target = static_cast<double>(j) / static_cast<double>(cells) * total;
    auto it = std::lower_bound(f.begin() + 1, f.end(), target);
    if (it == f.end()) it = f.end() - 1;
    const std::size_t i = static_cast<std::size_t>(it - f.begin());
    const double a = h * static_cast<double>(i - 1);
    const double base = f[i - 1] - target;
    auto fdf = [&](double x) { return std::pair{base + gauss_legendre(rho, a, x, 1), rho(x)}; };
    const auto res = safeguarded_newton(fdf, a, a + h, {1e-15 * std::max(1.0, total), 1e-15, 200});
    out.q[j] = res.root;
  }
  for (std::size_t j = 0; j <= cells; ++j) {
    const double d = rho(out.q[j]) * scale;
    out.z[j] = d > 0.0 ? 1.0 / d : kInf;
  }
  return out;
}

double inverse_cdf(const DiscreteDistribution& dist, double eta) {
  std::vector<std::size_t> order(dist.support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dist.support[a] < dist.support[b]; });
  double c = 0.0;
  for (std::size_t k : order) {
    c += dist.weights[k];
    if (dist.weights[k] > 0.0 && (c >= eta - 1e-12 || eta <= 0.0)) return dist.support[k];
  }
  return dist.support[order.back()];
}

QuantileProfile pseudo_inverse(const DiscreteDistribution& dist, std::size_t cells) {
  require_cells(cells);
  if (dist.support.empty() || dist.support.size() != dist.weights.size()) {
    throw InvalidArgument("distribution needs matching, non-empty support and weights");
  }
  QuantileProfile out;
  out.generalized = true;
  out.q.assign(cells + 1, 0.0);

  const bool equal_weights =
      std::all_of(dist.weights.begin(), dist.weights.end(), [&](double w) { return w == dist.weights.front(); });
  if (equal_weights) {
    // Order statistics at ⌈η_j·count⌉ in exact integer arithmetic.
    std::vector<double> sorted(dist.support);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t count = sorted.size();
    for (std::size_t j = 0; j <= cells; ++j) {
      const std::size_t rank = (j * count + cells - 1) / cells;
      out.q[j] = sorted[rank == 0 ? 0 : rank - 1];
    }
  } else {
    std::vector<std::size_t> order(dist.support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dist.support[a] < dist.support[b]; });
    std::vector<double> cum;
    std::vector<double> pts;
    double c = 0.0;
    for (std::size_t k : order) {
      if (dist.weights[k] <= 0.0) continue;
      c += dist.weights[k];
      cum.push_back(c);
      pts.push_back(dist.support[k]);
    }
    for (std::size_t j = 0; j <= cells; ++j) {
      const double eta = static_cast<double>(j) / static_cast<double>(cells);
      std::size_t k = 0;
      if (j > 0) {
        while (k + 1 < cum.size() && cum[k] < eta - 1e-12) ++k;
      }
      out.q[j] = pts[k];
    }
  }
  difference_quotient_z(out);
  return out;
}

QuantileProfile pseudo_inverse(const MixedMeasure& measure, std::size_t cells) {
  require_cells(cells);
  const auto& v = measure.continuous.values;
  const double phi_f = measure.continuous.phi_f;
  if (v.size() < 2) throw InvalidArgument("sampled density needs at least two nodes");
  if (measure.atoms.support.size() != measure.atoms.weights.size()) {
    throw InvalidArgument("atoms need matching support and weights");
  }
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw NonPositiveDensity("density samples must be finite and non-negative");
  }
  const std::size_t n = v.size() - 1;
  const double h = phi_f / static_cast<double>(n);
  double cont_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) cont_mass += 0.5 * h * (v[i] + v[i + 1]);
  const double atom_mass = std::accumulate(measure.atoms.weights.begin(), measure.atoms.weights.end(), 0.0);
  const double scale = normalisation_factor(cont_mass + atom_mass);
  std::vector<double> r(v);
  for (auto& x : r) x *= scale;

  // Breakpoints: density nodes plus atom positions.
  struct Atom {
    double x, w;
  };
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < measure.atoms.support.size(); ++k) {
    const double x = measure.atoms.support[k];
    if (!(x >= 0.0 && x <= phi_f)) throw InvalidArgument("atom outside [0, phi_f]");
    atoms.push_back({x, measure.atoms.weights[k] * scale});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  auto rho_at = [&](double phi) {
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(phi / h), 0.0, static_cast<double>(n - 1)));
    const double t = (phi - h * static_cast<double>(i)) / h;
    return (1.0 - t) * r[i] + t * r[i + 1];
  };
  std::vector<double> xs;
  for (std::size_t i = 0; i <= n; ++i) xs.push_back(h * static_cast<double>(i));
  for (const auto& a : atoms) xs.push_back(a.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  auto quantile = [&](double eta, bool bottom) {
    double before = 0.0;  // F just left of xs[s]
    std::size_t next_atom = 0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const double x = xs[s];
      double at = before;
      while (next_atom < atoms.size() && atoms[next_atom].x <= x) at += atoms[next_atom++].w;
      const bool has_mass_right = s + 1 < xs.size() && (rho_at(x) > 0.0 || rho_at(xs[s + 1]) > 0.0);
      if (bottom ? (at > 0.0 || has_mass_right) : at >= eta - 1e-12) return x;
      if (s + 1 == xs.size()) return x;
      const double xr = xs[s + 1];
      const double rl = rho_at(x), rr = rho_at(xr);
      const double seg = 0.5 * (xr - x) * (rl + rr);
      if (!bottom && at + seg >= eta - 1e-12) return x + solve_cell(rl, rr, xr - x, eta - at);
      before = at + seg;
    }
    return xs.back();
  };

  QuantileProfile out;
  out.generalized = true;
  out.q.assign(cells + 1, 0.0);
  for (std::size_t j = 0; j <= cells; ++j) {
    out.q[j] = quantile(static_cast<double>(j) / static_cast<double>(cells), j == 0);
  }
  difference_quotient_z(out);
  return out;
}

double wasserstein(const QuantileProfile& a, const QuantileProfile& b, LpNorm p) {
  require_same_grid(a, b);
  const std::size_t m = a.cells();
  std::vector<double> d(m + 1);
  for (std::size_t j = 0; j <= m; ++j) d[j] = std::abs(a.q[j] - b.q[j]);
  switch (p) {
    case LpNorm::one:
      return trapezoid_unit(d);
    case LpNorm::two:
      for (auto& x : d) x *= x;
      return std::sqrt(trapezoid_unit(d));
    default:
      return *std::max_element(d.begin(), d.end());
  }
}

double bv_distance(const QuantileProfile& a, const QuantileProfile& b) {
  require_same_grid(a, b);
  std::vector<double> d(a.z.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = std::abs(a.z[j] - b.z[j]);
  return trapezoid_unit(d);
}

std::vector<double> p0_project(std::span<const double> values) {
  const double mean = trapezoid_unit(values);
  std::vector<double> out(values.begin(), values.end());
  for (auto& x : out) x -= mean;
  return out;
}

std::vector<double> p0_project(const QuantileProfile& profile) { return p0_project(std::span<const double>(profile.q)); }

double modified_l2_distance(const QuantileProfile& a, const QuantileProfile& b) {
  require_same_grid(a, b);
  std::vector<double> d(a.q.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.q[j] - b.q[j];
  auto c = p0_project(std::span<const double>(d));
  for (auto& x : c) x *= x;
  return std::sqrt(trapezoid_unit(c));
}

IkValues ik_functional(const QuantileProfile& a, const QuantileProfile& b, const PhaseResponse& k,
                       double boundary_tol) {
  require_same_grid(a, b);
  const std::size_t m = a.cells();
  if (std::abs(a.q[0] - b.q[0]) > boundary_tol || std::abs(a.q[m] - b.q[m]) > boundary_tol) {
    throw HypothesisViolated("profiles must share boundary values Q(0) and Q(1)");
  }
  std::vector<double> absdiff(m + 1), integrand(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    const double dz = a.z[j] - b.z[j];
    const double sign = dz > 0.0 ? 1.0 : (dz < 0.0 ? -1.0 : 0.0);
    absdiff[j] = std::abs(dz);
    integrand[j] = (k.slope(a.q[j]) * a.z[j] - k.slope(b.q[j]) * b.z[j]) * sign;
  }
  return {trapezoid_unit(absdiff), trapezoid_unit(integrand)};
}

double mass_from_profile(const QuantileProfile& profile) {
  double mass = 0.0;
  for (std::size_t j = 0; j + 1 < profile.q.size(); ++j) {
    mass += 0.5 * (1.0 / profile.z[j] + 1.0 / profile.z[j + 1]) * (profile.q[j + 1] - profile.q[j]);
  }
  return mass;
}

std::vector<double> density_at_nodes(const QuantileProfile& profile) {
  std::vector<double> out(profile.z.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = 1.0 / profile.z[j];
  return out;
}

double interpolate_quantile(const QuantileProfile& profile, double eta) {
  const std::size_t m = profile.cells();
  const double x = std::clamp(eta, 0.0, 1.0) * static_cast<double>(m);
  const auto j = static_cast<std::size_t>(std::min(std::floor(x), static_cast<double>(m - 1)));
  const double t = x - static_cast<double>(j);
  return (1.0 - t) * profile.q[j] + t * profile.q[j + 1];
}

}  // namespace pulsefield

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "pulsefield/quantile.hpp"

namespace testing_support {

inline pulsefield::QuantileProfile sample_profile(const std::function<double(double)>& q,
                                                  const std::function<double(double)>& z, std::size_t cells) {
  pulsefield::QuantileProfile p;
  for (std::size_t j = 0; j <= cells; ++j) {
    const double eta = static_cast<double>(j) / static_cast<double>(cells);
    p.q.push_back(q(eta));
    p.z.push_back(z(eta));
  }
  return p;
}

/// Q = Φ_F(η + Σ c_n sin(nπη)/(nπ)), Z = Φ_F(1 + Σ c_n cos(nπη)).
struct FourierProfile {
  double phi_f = 1.0;
  std::vector<double> c;

  double q(double eta) const {
    double s = eta;
    for (std::size_t n = 1; n <= c.size(); ++n) {
      const double w = static_cast<double>(n) * std::numbers::pi;
      s += c[n - 1] * std::sin(w * eta) / w;
    }
    return phi_f * s;
  }
  double z(double eta) const {
    double s = 1.0;
    for (std::size_t n = 1; n <= c.size(); ++n) s += c[n - 1] * std::cos(static_cast<double>(n) * std::numbers::pi * eta);
    return phi_f * s;
  }
  pulsefield::QuantileProfile sample(std::size_t cells) const {
    return sample_profile([this](double e) { return q(e); }, [this](double e) { return z(e); }, cells);
  }

  static FourierProfile random(std::mt19937_64& rng, double phi_f, std::size_t modes = 3) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FourierProfile f{phi_f, {}};
    double total = 0.0;
    for (std::size_t i = 0; i < modes; ++i) {
      f.c.push_back(u(rng));
      total += std::abs(f.c.back());
    }
    const double scale = 0.9 / std::max(total, 0.9);
    for (auto& x : f.c) x *= scale;
    return f;
  }
};

/// Midpoint rule with n cells on [a, b].
inline double riemann(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(a + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

}  // namespace testing_support

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "strichartz/spectral.hpp"

namespace testing {

using strichartz::Complex;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::vector<Complex> random_datum(std::size_t n, std::uint64_t seed, bool real = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Complex> u(n);
  for (auto& z : u) z = Complex(g(rng), real ? 0.0 : g(rng));
  return u;
}

/// O(N^2) evolution through the continuous-convention DFT, one time at a time.
inline std::vector<Complex> naive_evolve_1d(const std::vector<Complex>& u0, const strichartz::SpaceTimeGrid& g,
                                            strichartz::PropagatorKind kind, double gamma, double t) {
  const std::size_t n = g.n();
  const auto xi = g.frequencies();
  std::vector<Complex> hat(n), out(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      hat[k] += u0[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(j * k % n) / double(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::abs(xi[k]);
    const double mult = gamma == 0.0 ? 1.0 : (a == 0.0 ? 0.0 : std::pow(a, gamma));
    const double phase = kind == strichartz::PropagatorKind::Airy ? t * xi[k] * xi[k] * xi[k] : -t * xi[k] * xi[k];
    hat[k] *= mult * std::polar(1.0, phase);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k)
      out[j] += hat[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(j * k % n) / double(n));
    out[j] /= double(n);
  }
  return out;
}

}  // namespace testing

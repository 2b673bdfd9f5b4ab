#include "strichartz/constants.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "strichartz/error.hpp"

namespace strichartz {
namespace {

constexpr double kTol = 1e-12;

bool same(double a, double b) { return std::abs(a - b) <= kTol; }

}  // namespace

bool is_schrodinger_admissible(int d, double q, double r) {
  if (!std::isfinite(q) || !std::isfinite(r) || q < 2.0 || r < 2.0) return false;
  return std::abs(2.0 / q + d / r - 0.5 * d) <= kTol;
}

std::optional<double> airy_gamma(double q, double r) {
  if (!std::isfinite(q) || !std::isfinite(r) || q <= 0.0 || r <= 0.0) return std::nullopt;
  const double g = 3.0 / q + 1.0 / r - 0.5;
  if (g <= -0.5 || g > 1.0 / q + kTol) return std::nullopt;
  return std::abs(g) <= kTol ? 0.0 : g;
}

double tilde_S(int d, double q, double r) {
  if (!(q > 0.0) || !(r > 0.0)) throw InvalidArgument("exponents must be positive");
  return std::pow(2.0 / r, d / (2.0 * r)) * std::pow(0.5, 1.0 / q);
}

double a_factor(double r) {
  if (!(r >= 2.0) || !std::isfinite(r)) throw InvalidArgument("a_r requires finite r >= 2");
  // Ratio of Gamma values through lgamma so that large r cannot overflow.
  const double log_ratio = std::lgamma(0.5 * (r + 1.0)) - std::lgamma(0.5 * (r + 2.0));
  return std::numbers::sqrt2 * std::pow(std::numbers::pi, -1.0 / (2.0 * r)) * std::exp(log_ratio / r);
}

double tilde_A(double q, double r) {
  if (!is_schrodinger_admissible(1, q, r))
    throw InvalidArgument("tilde_A requires 1/q + 1/(2r) = 1/4");
  return std::pow(3.0, -1.0 / q) * a_factor(r) * tilde_S(1, q, r);
}

double admissible_q(double r) {
  const double inv = 0.25 - 0.5 / r;
  if (!(inv > 0.0) || inv > 0.5) throw InvalidArgument("r must exceed 2 on the admissibility curve");
  return 1.0 / inv;
}

std::span<const KnownConstant> known_constants() {
  using std::numbers::pi;
  static const std::array<KnownConstant, 8> table{{
      {1, 6, 6, ConstantType::Strichartz, std::pow(12.0, -1.0 / 12.0)},
      {2, 4, 4, ConstantType::Strichartz, std::pow(2.0, -0.5)},
      {1, 8, 4, ConstantType::Strichartz, std::pow(2.0, -0.25)},
      {1, 12, 6, ConstantType::SobolevStrichartz, std::pow(6.0 * pi, -1.0 / 12.0)},
      {1, 16, 4, ConstantType::SobolevStrichartz, std::pow(8.0 * pi, -1.0 / 16.0)},
      {2, 6, 6, ConstantType::SobolevStrichartz, std::pow(12.0 * pi, -1.0 / 6.0)},
      {2, 8, 4, ConstantType::SobolevStrichartz, std::pow(16.0 * pi, -1.0 / 8.0)},
      {4, 4, 4, ConstantType::SobolevStrichartz, std::pow(32.0 * pi, -0.25)},
  }};
  return table;
}

std::optional<double> known_constant(int d, double q, double r) {
  for (const auto& row : known_constants())
    if (row.d == d && same(row.q, q) && same(row.r, r)) return row.value;
  return std::nullopt;
}

}  // namespace strichartz

#pragma once

#include <optional>
#include <span>

namespace strichartz {

/// 2/q + d/r = d/2 to 1e-12 with 2 <= q, r < infinity.
bool is_schrodinger_admissible(int d, double q, double r);

/// gamma = 3/q + 1/r - 1/2 when -1/2 < gamma <= 1/q.
std::optional<double> airy_gamma(double q, double r);

/// Gaussian value (2/r)^{d/(2r)} (1/2)^{1/q}.
double tilde_S(int d, double q, double r);

/// 2^{1/2} pi^{-1/(2r)} (Gamma((r+1)/2) / Gamma((r+2)/2))^{1/r}, r >= 2.
double a_factor(double r);

/// 3^{-1/q} a_r tilde_S(1, q, r); requires (1, q, r) admissible.
double tilde_A(double q, double r);

/// Temporal exponent on the d = 1 Schrodinger admissibility curve.
double admissible_q(double r);

enum class ConstantType { Strichartz, SobolevStrichartz };

struct KnownConstant {
  int d;
  double q, r;
  ConstantType type;
  double value;
};

/// The eight tabulated sharp constants.
std::span<const KnownConstant> known_constants();
std::optional<double> known_constant(int d, double q, double r);

}  // namespace strichartz

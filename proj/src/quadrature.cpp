#include "strichartz/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "strichartz/error.hpp"

namespace strichartz {
namespace {

double ipow(double s, unsigned n) {
  double out = 1.0;
  while (n) {
    if (n & 1u) out *= s;
    s *= s;
    n >>= 1u;
  }
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

template <int K>
double sum_ipow(std::span<const Complex> v, double inv) {
  double sum = 0.0;
  for (const auto& z : v) {
    const double s = (z.real() * z.real() + z.imag() * z.imag()) * inv;
    double p = s;
    for (int i = 1; i < K; ++i) p *= s;
    sum += p;
  }
  return sum;
}

}  // namespace

double sum_pow(std::span<const Complex> v, double inv, double e) {
  if (e == 2.0) return sum_ipow<2>(v, inv);
  if (e == 3.0) return sum_ipow<3>(v, inv);
  if (e == 4.0) return sum_ipow<4>(v, inv);
  if (e == 5.0) return sum_ipow<5>(v, inv);
  if (e == 6.0) return sum_ipow<6>(v, inv);
  double sum = 0.0;
  for (const auto& z : v) sum += pow_nonneg((z.real() * z.real() + z.imag() * z.imag()) * inv, e);
  return sum;
}

void validate(const NormSpec& spec) {
  if (!std::isfinite(spec.q) || !std::isfinite(spec.r) || spec.q < 2.0 || spec.r < 2.0)
    throw InvalidArgument("mixed-norm exponents must be finite and >= 2");
}

double pow_nonneg(double s, double e) {
  const double twice = 2.0 * e;
  if (twice == std::floor(twice) && twice >= 0.0 && twice <= 128.0) {
    const auto t = static_cast<unsigned>(twice);
    const double base = ipow(s, t / 2);
    return t % 2 ? base * std::sqrt(s) : base;
  }
  return std::pow(s, e);
}

double l2_norm(std::span<const Complex> u, double dx, int dim) {
  double sum = 0.0;
  for (const auto& z : u) sum += std::norm(z);
  require_finite(sum, "L2 norm input");
  return std::sqrt((dim == 2 ? dx * dx : dx) * sum);
}

double slice_lr_norm(std::span<const Complex> v, double r, double cell_volume) {
  double peak2 = 0.0;
  for (const auto& z : v) {
    const double a = std::norm(z);
    if (!(a <= peak2)) peak2 = a;  // also catches NaN
  }
  require_finite(peak2, "field sample");
  if (peak2 == 0.0) return 0.0;
  const double inv = 1.0 / peak2;
  const double sum = sum_pow(v, inv, 0.5 * r);
  return std::sqrt(peak2) * std::pow(cell_volume * sum, 1.0 / r);
}

double time_weight(std::size_t l, std::size_t m, QuadratureRule rule) {
  if (rule == QuadratureRule::Trapezoid && (l == 0 || l + 1 == m)) return 0.5;
  return 1.0;
}

double combine_lq(std::span<const double> a, double q, double dt, QuadratureRule rule) {
  const double peak = a.empty() ? 0.0 : *std::max_element(a.begin(), a.end());
  require_finite(peak, "slice norm");
  if (peak == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) sum += time_weight(l, a.size(), rule) * pow_nonneg(a[l] / peak, q);
  const double out = peak * std::pow(dt * sum, 1.0 / q);
  require_finite(out, "mixed norm");
  return out;
}

double mixed_norm(const ComplexField& field, const NormSpec& spec, QuadratureRule rule) {
  validate(spec);
  const auto& g = field.grid();
  std::vector<double> a(g.m());
  for (std::size_t l = 0; l < g.m(); ++l) a[l] = slice_lr_norm(field.slice(l), spec.r, g.cell_volume());
  return combine_lq(a, spec.q, g.dt(), rule);
}

}  // namespace strichartz

#pragma once

#include <span>

#include "strichartz/spectral.hpp"

namespace strichartz {

/// Exponents of the mixed norm L^q_t L^r_x.
struct NormSpec {
  double q = 6.0;
  double r = 6.0;
};

void validate(const NormSpec& spec);

/// Rectangle weights every sample by dt. Trapezoid halves the weights of the
/// first and last time samples; in space the periodic grid makes the two rules
/// coincide, so only the time axis differs.
enum class QuadratureRule { Rectangle, Trapezoid };

/// (dx^d sum |u_j|^2)^(1/2).
double l2_norm(std::span<const Complex> u, double dx, int dim);

/// (cell sum |v_j|^r)^(1/r), rescaled by max |v_j| so large r cannot overflow.
double slice_lr_norm(std::span<const Complex> v, double r, double cell_volume);

/// (dt sum_l w_l a_l^q)^(1/q) over per-slice norms a_l, rescaled by max a_l.
double combine_lq(std::span<const double> slice_norms, double q, double dt,
                  QuadratureRule rule = QuadratureRule::Rectangle);

/// Time weight of slice l in units of dt.
double time_weight(std::size_t l, std::size_t m, QuadratureRule rule);

double mixed_norm(const ComplexField& field, const NormSpec& spec,
                  QuadratureRule rule = QuadratureRule::Rectangle);

/// s^(e) for s >= 0 with exact repeated-multiplication paths when 2e is a
/// small integer.
double pow_nonneg(double s, double e);

/// sum_j (inv |v_j|^2)^e.
double sum_pow(std::span<const Complex> v, double inv, double e);

}  // namespace strichartz

#pragma once

#include <span>
#include <string>
#include <vector>

#include "strichartz/profiles.hpp"
#include "strichartz/quadrature.hpp"
#include "strichartz/spectral.hpp"

namespace strichartz {

struct RatioConfig {
  SpaceTimeGrid grid;
  PropagatorKind kind = PropagatorKind::Schrodinger;
  double gamma = 0.0;
  NormSpec spec;
  QuadratureRule rule = QuadratureRule::Rectangle;
  Precision precision = Precision::Double;
  /// Airy runs at the scaling-critical gamma; checked by validate().
  bool critical = true;
};

/// Throws InvalidArgument naming the violated relation.
void validate(const RatioConfig& cfg);

/// Default lattices: Schrodinger d=1 (R=30, T=1, N=M=1024), d=2 (R=10, T=1,
/// N=128, M=32), Airy (R=500, T=5, N=8192, M=1024).
SpaceTimeGrid default_grid(PropagatorKind kind, int dim);

/// Default grid, gamma from airy_gamma for Airy, 0 for Schrodinger.
RatioConfig default_config(PropagatorKind kind, int dim, double q, double r);

/// Mixed norm of the evolved datum, streamed slice by slice.
double evolved_mixed_norm(std::span<const Complex> u0, const RatioConfig& cfg);

/// mixed_norm(evolve(u0)) / l2_norm(u0).
double strichartz_ratio(std::span<const Complex> u0, const RatioConfig& cfg);
double strichartz_ratio(const ProfileSpec& profile, const RatioConfig& cfg);

/// Share of the discrete spectral mass carried by |xi| below half the Nyquist
/// frequency. Values near 1 mean the datum is well inside the resolved band.
double resolved_spectral_fraction(std::span<const Complex> u0, const SpaceTimeGrid& grid);

struct SweepRow {
  double parameter = 0.0;
  double ratio = 0.0;
  double reference = 0.0;
  double gap = 0.0;  // reference - ratio
  double resolved_fraction = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string reference_label;
  std::vector<std::string> notes;
};

/// Ratios of Q_{p,1}; the reference column is R[e^{-|x|}] on the same config.
SweepResult sweep_soliton(std::span<const double> ps, const RatioConfig& cfg);

/// Ratios of B(0, .; alpha, beta, 0, 0); the reference is tilde_A(q, r).
SweepResult sweep_breather(std::span<const double> alphas, const RatioConfig& cfg, double beta = 1.0);

struct ScalingOptions {
  /// Shift applied to the rescaled datum, u(lambda (x - shift)).
  double shift = 0.0;
  /// Shrink the time window by lambda^k (k = 3 Airy, 2 Schrodinger) so both
  /// runs cover the same part of the unscaled solution.
  bool scale_time = true;
};

/// |R[lambda^{d/2} u(lambda x)] - R[u]| / R[u].
double scaling_invariance_check(const ProfileSpec& profile, double lambda, const RatioConfig& cfg,
                                const ScalingOptions& options = {});

struct HermiteStabilityRow {
  int n = 0;
  double half_time = 0.0;
  double ratio = 0.0;
};

/// Ratios of single Hermite functions f_0..f_{n_max} for each time half-width;
/// the spatial lattice of cfg is kept and only T (with dt) changes.
std::vector<HermiteStabilityRow> hermite_time_stability(int n_max, std::span<const double> half_times,
                                                        const RatioConfig& cfg);

/// R = 2500, N = 16384, M = 1024 lattice used for the stability study.
SpaceTimeGrid hermite_stability_grid(double half_time);

/// The same config on a different lattice.
RatioConfig with_grid(const RatioConfig& cfg, const SpaceTimeGrid& grid);

}  // namespace strichartz

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "strichartz/error.hpp"
#include "strichartz/spectral.hpp"

namespace strichartz {

using Point = std::pair<double, double>;

/// gap ~ C alpha^{-kappa}; residual is the RMS of the log residuals.
struct FitResult {
  double C = 0.0;
  double kappa = 0.0;
  double residual = 0.0;
  std::size_t n_points = 0;
};

/// A nonpositive gap: the ratio reached or crossed its reference bound.
class BoundCrossing : public Error {
 public:
  BoundCrossing(const std::string& what, double parameter, double gap)
      : Error(what), parameter(parameter), gap(gap) {}
  double parameter;
  double gap;
};

/// Ordinary least squares on (ln alpha, ln gap); needs >= 3 points.
FitResult power_law_fit(std::span<const Point> points);

/// Points with lo <= alpha <= hi.
std::vector<Point> fit_window(std::span<const Point> points, double lo, double hi);

struct BreatherFit {
  double alpha = 0.0;
  double beta = 0.0;
  double t0 = 0.0;
  double x0 = 0.0;  // x2 phase of the envelope
  double amplitude = 1.0;
  /// L2 distance (dx weighted) between the samples and the scaled breather.
  double residual = 0.0;
  std::size_t starts = 0;
};

struct BreatherFitOptions {
  std::vector<double> alpha_starts{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0};
  std::vector<double> beta_starts{0.5, 1.0};
  std::vector<double> t0_starts{-0.3, 0.0, 0.3};
  /// Also fit a free amplitude (closed-form projection); off forces 1.
  bool free_amplitude = true;
  std::size_t max_iterations = 200;
};

/// Levenberg-Marquardt with a central-difference Jacobian from every start;
/// the envelope phase is started at the centre of mass of |u|^2. Throws
/// NumericalError if no start produces a finite fit.
BreatherFit fit_breather_to_profile(std::span<const Complex> samples, const SpaceTimeGrid& grid,
                                    const BreatherFitOptions& options = {});

/// Refines one start; exposed for testing monotone refinement.
BreatherFit refine_breather_fit(std::span<const Complex> samples, const SpaceTimeGrid& grid, const BreatherFit& start,
                                const BreatherFitOptions& options = {});

/// Root of tilde_A(q(r), r) - tilde_S(1, q(r), r) along 1/q = 1/4 - 1/(2r).
double crossover_radius(double lo = 6.0, double hi = 20.0, double tol = 1e-10);

struct MonotonicityReport {
  std::size_t steps = 0;
  std::size_t violations = 0;  // drops larger than the tolerance
  std::size_t flat_steps = 0;  // changes within the tolerance
  bool all_flat = false;
  std::optional<std::size_t> first_violation;  // index i of the pair (i, i+1)
  bool strictly_increasing() const { return violations == 0 && flat_steps == 0 && steps > 0; }
};

MonotonicityReport monotonicity_report(std::span<const Point> series, double tolerance = 1e-6);

}  // namespace strichartz

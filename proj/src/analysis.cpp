#include "strichartz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "strichartz/constants.hpp"
#include "strichartz/profiles.hpp"

namespace strichartz {

FitResult power_law_fit(std::span<const Point> points) {
  if (points.size() < 3) throw InvalidArgument("power-law fit needs at least 3 points");
  for (const auto& [a, g] : points) {
    if (!(a > 0.0)) throw InvalidArgument("power-law fit needs positive abscissae");
    if (!(g > 0.0)) {
      std::ostringstream os;
      os << "gap " << g << " at parameter " << a << " is not positive: the ratio reached the bound";
      throw BoundCrossing(os.str(), a, g);
    }
  }
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [a, g] : points) {
    sx += std::log(a);
    sy += std::log(g);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [a, g] : points) {
    const double dx = std::log(a) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(g) - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("power-law fit needs at least two distinct abscissae");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (const auto& [a, g] : points) {
    const double r = std::log(g) - (intercept + slope * std::log(a));
    ss += r * r;
  }
  return {std::exp(intercept), -slope, std::sqrt(ss / n), points.size()};
}

std::vector<Point> fit_window(std::span<const Point> points, double lo, double hi) {
  std::vector<Point> out;
  for (const auto& p : points)
    if (p.first >= lo && p.first <= hi) out.push_back(p);
  return out;
}

namespace {

struct FitProblem {
  std::span<const Complex> u;
  std::vector<double> x;
  double dx;
  bool free_amplitude;

  // Residual of the best scaled breather; returns the amplitude used.
  double residual(const Eigen::Vector4d& p, Eigen::VectorXd& r) const {
    const std::size_t n = x.size();
    r.resize(static_cast<Eigen::Index>(2 * n));
    std::vector<double> b(n);
    double bb = 0.0, bu = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = breather(p[2], x[j], p[0], p[1], 0.0, p[3]);
      bb += b[j] * b[j];
      bu += b[j] * u[j].real();
    }
    const double amp = free_amplitude ? (bb > 0.0 ? bu / bb : 0.0) : 1.0;
    const double sq = std::sqrt(dx);
    for (std::size_t j = 0; j < n; ++j) {
      r[static_cast<Eigen::Index>(2 * j)] = sq * (amp * b[j] - u[j].real());
      r[static_cast<Eigen::Index>(2 * j + 1)] = -sq * u[j].imag();
    }
    return amp;
  }
};

bool admissible(const Eigen::Vector4d& p) { return p[0] > 1e-3 && p[1] > 1e-3 && std::isfinite(p.sum()); }

}  // namespace

BreatherFit refine_breather_fit(std::span<const Complex> samples, const SpaceTimeGrid& grid, const BreatherFit& start,
                                const BreatherFitOptions& opt) {
  if (grid.dim() != 1 || samples.size() != grid.n()) throw InvalidArgument("breather fit needs 1-D samples on the grid");
  FitProblem prob{samples, grid.positions(), grid.dx(), opt.free_amplitude};
  Eigen::Vector4d p(start.alpha, start.beta, start.t0, start.x0);
  Eigen::VectorXd r, rt;
  prob.residual(p, r);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  Eigen::MatrixXd J(r.size(), 4);
  for (std::size_t it = 0; it < opt.max_iterations && std::isfinite(cost); ++it) {
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
      Eigen::Vector4d pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      Eigen::VectorXd rp, rm;
      prob.residual(pp, rp);
      prob.residual(pm, rm);
      J.col(k) = (rp - rm) / (2.0 * h);
    }
    const Eigen::Matrix4d JtJ = J.transpose() * J;
    const Eigen::Vector4d Jtr = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::Matrix4d A = JtJ;
      A.diagonal() += mu * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d step = A.ldlt().solve(-Jtr);
      const Eigen::Vector4d trial = p + step;
      if (admissible(trial)) {
        prob.residual(trial, rt);
        const double c = rt.squaredNorm();
        if (c < cost) {
          const double gain = (cost - c) / std::max(cost, 1e-300);
          p = trial;
          r = rt;
          cost = c;
          mu = std::max(mu / 3.0, 1e-12);
          improved = true;
          if (gain < 1e-14) it = opt.max_iterations;
          break;
        }
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  BreatherFit out;
  out.alpha = p[0];
  out.beta = p[1];
  out.t0 = p[2];
  out.x0 = p[3];
  out.amplitude = prob.residual(p, r);
  out.residual = std::sqrt(r.squaredNorm());
  out.starts = 1;
  return out;
}

BreatherFit fit_breather_to_profile(std::span<const Complex> samples, const SpaceTimeGrid& grid,
                                    const BreatherFitOptions& opt) {
  if (grid.dim() != 1 || samples.size() != grid.n()) throw InvalidArgument("breather fit needs 1-D samples on the grid");
  double mass = 0.0, first = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double w = std::norm(samples[j]);
    mass += w;
    first += w * grid.x(j);
  }
  if (!(mass > 0.0)) throw InvalidArgument("cannot fit a breather to a zero profile");
  const double centre = first / mass;

  std::vector<BreatherFit> starts;
  for (double a : opt.alpha_starts)
    for (double b : opt.beta_starts)
      for (double t : opt.t0_starts) {
        // Place the envelope centre -(x2 + gamma t)/beta at the centre of mass.
        const double gam = b * (3.0 * a * a - b * b);
        starts.push_back({a, b, t, -b * centre - gam * t, 1.0, 0.0, 0});
      }
  std::vector<BreatherFit> fits(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) fits[i] = refine_breather_fit(samples, grid, starts[i], opt);
  const BreatherFit* best = nullptr;
  for (const auto& f : fits)
    if (std::isfinite(f.residual) && (!best || f.residual < best->residual)) best = &f;
  if (!best) throw NumericalError("no breather fit start converged");
  BreatherFit out = *best;
  out.starts = starts.size();
  return out;
}

double crossover_radius(double lo, double hi, double tol) {
  auto f = [](double r) {
    const double q = admissible_q(r);
    return tilde_A(q, r) - tilde_S(1, q, r);
  };
  double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0.0) throw NumericalError("crossover is not bracketed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

MonotonicityReport monotonicity_report(std::span<const Point> series, double tolerance) {
  MonotonicityReport rep;
  if (series.size() < 2) return rep;
  rep.steps = series.size() - 1;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double d = series[i + 1].second - series[i].second;
    if (std::abs(d) <= tolerance) {
      ++rep.flat_steps;
    } else if (d < 0.0) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = i;
    }
  }
  rep.all_flat = rep.flat_steps == rep.steps;
  return rep;
}

}  // namespace strichartz

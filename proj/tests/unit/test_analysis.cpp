#include <cmath>
#include <random>

#include "doctest.h"
#include "strichartz/analysis.hpp"
#include "strichartz/error.hpp"
#include "strichartz/profiles.hpp"

using namespace strichartz;

namespace {

std::vector<Point> power_law(double C, double kappa, std::vector<double> alphas) {
  std::vector<Point> pts;
  for (double a : alphas) pts.emplace_back(a, C * std::pow(a, -kappa));
  return pts;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("exact power law is recovered") {
    const auto pts = power_law(0.37, 0.9, {2, 3, 4, 5, 6, 8, 10, 15});
    const auto fit = power_law_fit(pts);
    CHECK(std::abs(fit.kappa - 0.9) < 1e-10);
    CHECK(std::abs(fit.C - 0.37) < 1e-10);
    CHECK(fit.residual < 1e-10);
    CHECK(fit.n_points == 8);
  }

  TEST_CASE("noisy power law") {
    // Oracle: 1% multiplicative noise keeps kappa within 0.02.
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::size_t outside = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      auto pts = power_law(0.5, 0.9, {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
      for (auto& p : pts) p.second *= 1.0 + noise(rng);
      if (std::abs(power_law_fit(pts).kappa - 0.9) > 0.02) ++outside;
    }
    CHECK(outside < 10);
  }

  TEST_CASE("fit is equivariant under scaling") {
    const std::vector<Point> pts{{2, 0.1}, {3, 0.07}, {5, 0.045}, {9, 0.02}};
    const auto base = power_law_fit(pts);
    auto scaled = pts;
    for (auto& p : scaled) p.second *= 7.5;
    const auto f = power_law_fit(scaled);
    CHECK(std::abs(f.kappa - base.kappa) < 1e-12);
    CHECK(std::abs(f.C / base.C - 7.5) < 1e-12);
    auto stretched = pts;
    for (auto& p : stretched) p.first *= 3.0;
    const auto g = power_law_fit(stretched);
    CHECK(std::abs(g.kappa - base.kappa) < 1e-12);
  }

  TEST_CASE("bad inputs") {
    const std::vector<Point> two{{2, 0.1}, {3, 0.05}};
    CHECK_THROWS_AS(power_law_fit(two), InvalidArgument);
    const std::vector<Point> crossing{{2, 0.1}, {3, 0.05}, {4, -1e-4}, {5, 0.01}};
    try {
      power_law_fit(crossing);
      FAIL("expected a bound crossing");
    } catch (const BoundCrossing& e) {
      CHECK(e.parameter == 4.0);
      CHECK(e.gap == -1e-4);
    }
    const std::vector<Point> zero{{2, 0.1}, {3, 0.0}, {4, 0.01}};
    CHECK_THROWS_AS(power_law_fit(zero), BoundCrossing);
    const std::vector<Point> same{{2, 0.1}, {2, 0.2}, {2, 0.3}};
    CHECK_THROWS_AS(power_law_fit(same), InvalidArgument);
  }

  TEST_CASE("fit window") {
    const auto pts = power_law(1, 1, {1, 2, 3, 4, 5});
    const auto w = fit_window(pts, 2, 4);
    REQUIRE(w.size() == 3);
    CHECK(w.front().first == 2);
    CHECK(w.back().first == 4);
  }

  TEST_CASE("breather self fit") {
    const auto grid = make_grid(20, 1, 1024, 8, 1);
    const auto u = sample(profile::Breather{4, 1, 0, 0, 0}, grid);
    const auto fit = fit_breather_to_profile(u, grid);
    CHECK(fit.residual < 1e-8);
    CHECK(std::abs(fit.alpha - 4) < 1e-6);
    CHECK(std::abs(fit.beta - 1) < 1e-6);
    CHECK(std::abs(fit.amplitude - 1) < 1e-6);
    CHECK(fit.starts == 12 * 2 * 3);

    BreatherFitOptions fixed;
    fixed.free_amplitude = false;
    const auto f2 = fit_breather_to_profile(u, grid, fixed);
    CHECK(f2.amplitude == 1.0);
    CHECK(f2.residual < 1e-8);
  }

  TEST_CASE("refinement never increases the residual") {
    const auto grid = make_grid(20, 1, 512, 8, 1);
    const auto u = sample(profile::Breather{2.5, 1.3, 0, 0.4, 0}, grid);
    const BreatherFit start{2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0};
    const auto zero = refine_breather_fit(u, grid, start, BreatherFitOptions{{}, {}, {}, true, 0});
    double prev = zero.residual;
    for (std::size_t iters : {1, 2, 4, 8, 16, 64}) {
      BreatherFitOptions o;
      o.max_iterations = iters;
      const double r = refine_breather_fit(u, grid, start, o).residual;
      CHECK(r <= prev * (1 + 1e-12));
      prev = r;
    }
    const std::vector<Complex> empty(grid.n());
    CHECK_THROWS_AS(fit_breather_to_profile(empty, grid), InvalidArgument);
    CHECK_THROWS_AS(fit_breather_to_profile(std::vector<Complex>(3), grid), InvalidArgument);
  }

  TEST_CASE("monotonicity report") {
    const std::vector<Point> up{{1, 0.1}, {2, 0.2}, {3, 0.3}};
    CHECK(monotonicity_report(up).strictly_increasing());
    const std::vector<Point> dip{{1, 0.1}, {2, 0.3}, {3, 0.2}, {4, 0.1}};
    const auto r = monotonicity_report(dip);
    CHECK(r.violations == 2);
    CHECK(r.first_violation == 1);
    const std::vector<Point> flat{{1, 0.5}, {2, 0.5 + 1e-9}, {3, 0.5}};
    const auto f = monotonicity_report(flat);
    CHECK(f.all_flat);
    CHECK(f.violations == 0);
    CHECK_FALSE(f.strictly_increasing());
    CHECK(monotonicity_report(std::vector<Point>{{1, 1}}).steps == 0);
  }

  TEST_CASE("crossover radius") {
    // mpmath root at 50 digits.
    CHECK(std::abs(crossover_radius() - 14.18486630656269154) < 1e-8);
    CHECK_THROWS_AS(crossover_radius(6, 10), NumericalError);
  }
}

#include "../common/pipelines.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "strichartz/error.hpp"
#include "strichartz/grad.hpp"

using namespace strichartz;
namespace g = strichartz::grad;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng) + shift;
  return v;
}

void check_program(const g::ScalarProgram& p, const std::vector<double>& x, double tol = 1e-6) {
  const auto c = testing::fd_check(p, x);
  CHECK(c.checked > 0);
  CHECK(c.worst < tol);
}

}  // namespace

TEST_SUITE("grad") {
  TEST_CASE("sum of squares") {
    const auto x = randn(7, 1);
    const auto vg = g::gradient([](g::Tape&, g::Var p) { return g::sum_squares(p); }, x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(vg.gradient[i] == doctest::Approx(2 * x[i]).epsilon(1e-15));
  }

  TEST_CASE("norm of a unitary transform") {
    const auto x = randn(32, 2);
    const auto vg = g::gradient(
        [](g::Tape&, g::Var p) { return g::l2_norm(g::dft(g::pairs_to_complex(p), 16, 1, true), 1.0); }, x);
    double n = 0.0;
    for (double v : x) n += v * v;
    n = std::sqrt(n);
    CHECK(vg.value == doctest::Approx(n).epsilon(1e-13));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(vg.gradient[i] - x[i] / n) < 1e-13);
  }

  TEST_CASE("elementwise primitives against finite differences") {
    const auto x = randn(6, 3, 2.0);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::mul(g::sqrt(g::square(p)), g::tanh(p))); }, x);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::exp(g::scale(p, -0.3))); }, x);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::pow(g::add_constant(g::square(p), 0.5), 1.7)); }, x);
    check_program(
        [](g::Tape&, g::Var p) {
          return g::sum(g::divide_scalar(g::sub(p, g::add_constant(g::neg(p), 1.0)), g::pick(p, 2)));
        },
        x);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::mul_scalar(g::slice(p, 1, 3), g::pick(p, 0))); }, x);
    const std::vector<double> w{0.3, -1, 2, 0.5, 0.1, 4};
    check_program([w](g::Tape&, g::Var p) { return g::weighted_sum(g::square(p), w); }, x);
    check_program([](g::Tape&, g::Var p) { return g::sum_squares(g::row_sums(g::square(p), 2, 3)); }, x);
  }

  TEST_CASE("complex primitives against finite differences") {
    const auto x = randn(16, 4);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::abs_pow(g::pairs_to_complex(p), 3.0)); }, x);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::abs_complex(g::pairs_to_complex(p))); }, x);
    check_program(
        [](g::Tape&, g::Var p) {
          g::Var z = g::complex_from_parts(g::slice(p, 0, 8), g::slice(p, 8, 8));
          return g::sum_squares(g::idft(g::dft(z, 8, 1), 8, 1));
        },
        x);
    check_program(
        [](g::Tape&, g::Var p) {
          g::Var z = g::dft(g::pairs_to_complex(p), 8, 1);
          return g::add(g::sum(g::pow(g::square(g::real_part(z)), 1.5)), g::sum_squares(g::imag_part(z)));
        },
        x);
    check_program([](g::Tape&, g::Var p) { return g::sum_squares(g::pick_complex(g::pairs_to_complex(p), 3)); }, x);
    const auto y = randn(32, 5);
    check_program([](g::Tape&, g::Var p) { return g::sum(g::abs_pow(g::dft(g::pairs_to_complex(p), 4, 2), 2.5)); },
                  y);
  }

  TEST_CASE("network layers against finite differences") {
    const std::size_t batch = 4, in = 3, out = 4;
    auto x = randn(batch * in + out * in + out + 3 * out, 6);
    check_program(
        [=](g::Tape&, g::Var p) {
          g::Var X = g::slice(p, 0, batch * in);
          g::Var W = g::slice(p, batch * in, out * in);
          g::Var b = g::slice(p, batch * in + out * in, out);
          const std::size_t o = batch * in + out * in + out;
          g::Var z = g::affine(X, W, b, batch);
          g::Var h = g::wavelet(z, g::slice(p, o, out), g::slice(p, o + out, out), g::slice(p, o + 2 * out, out), batch);
          return g::sum_squares(g::pair_average(h, batch / 2, out));
        },
        std::vector<double>(x.begin(), x.begin() + static_cast<long>(batch * in + out * in + out + 3 * out)), 1e-6);
    // Shared activation parameters.
    auto y = randn(8 + 3, 7);
    check_program(
        [](g::Tape&, g::Var p) {
          return g::sum(g::wavelet(g::slice(p, 0, 8), g::slice(p, 8, 1), g::slice(p, 9, 1), g::slice(p, 10, 1), 4));
        },
        y);
    auto A = std::make_shared<const Eigen::MatrixXd>(Eigen::MatrixXd::Random(5, 3));
    check_program([A](g::Tape&, g::Var p) { return g::sum_squares(g::linear_map(A, p)); }, randn(3, 8));
  }

  TEST_CASE("evolution and mixed norm, composed and fused") {
    auto grid = make_grid(5, 0.5, 64, 8, 1);
    for (auto kind : {PropagatorKind::Airy, PropagatorKind::Schrodinger}) {
      auto ev = std::make_shared<const Evolver>(grid, kind, kind == PropagatorKind::Airy ? 1.0 / 6 : 0.0);
      const auto x = randn(128, 9);
      for (auto rule : {QuadratureRule::Rectangle, QuadratureRule::Trapezoid}) {
        g::ScalarProgram composed = [&](g::Tape&, g::Var p) {
          return g::mixed_norm(g::evolve(g::pairs_to_complex(p), ev), grid, {6, 6}, rule);
        };
        g::ScalarProgram fused = [&](g::Tape&, g::Var p) {
          return g::evolved_mixed_norm(g::pairs_to_complex(p), ev, {6, 6}, rule);
        };
        const auto a = g::gradient(composed, x), b = g::gradient(fused, x);
        CHECK(testing::rel_err(a.value, b.value) < 1e-13);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(a.gradient[i] - b.gradient[i]) < 1e-12);
        check_program(fused, x, 1e-5);
      }
    }
  }

  TEST_CASE("random end-to-end pipelines") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto p = testing::random_pipeline(s);
      const auto c = testing::fd_check(p.program, p.params);
      INFO(p.description);
      CHECK(c.checked > 0);
      CHECK(c.worst <= 1e-4);
    }
  }

  TEST_CASE("ratio gradient is orthogonal to uniform scaling") {
    auto grid = make_grid(6, 0.5, 64, 8, 1);
    auto ev = std::make_shared<const Evolver>(grid, PropagatorKind::Airy, 1.0 / 6);
    const auto x = randn(128, 10);
    const auto vg = g::gradient(
        [&](g::Tape&, g::Var p) {
          g::Var u = g::pairs_to_complex(p);
          return g::evolved_mixed_norm(g::divide_scalar(u, g::l2_norm(u, grid.dx())), ev, {6, 6});
        },
        x);
    double dot = 0.0, n = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += vg.gradient[i] * x[i], n += x[i] * x[i];
    CHECK(std::abs(dot) / std::sqrt(n) < 1e-8);
  }

  TEST_CASE("pullback is linear in the cotangent") {
    const auto x = randn(128, 11);
    auto grid = make_grid(6, 0.5, 64, 8, 1);
    auto ev = std::make_shared<const Evolver>(grid, PropagatorKind::Schrodinger, 0.0);
    auto ds = g::differentiate([&](g::Tape&, g::Var p) { return g::evolved_mixed_norm(g::pairs_to_complex(p), ev, {8, 4}); },
                               x);
    const auto ga = ds.pullback(0.7), gb = ds.pullback(-1.9), gab = ds.pullback(0.7 - 1.9), g0 = ds.pullback(0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(gab[i] - (ga[i] + gb[i])) < 1e-12 * (1 + std::abs(gab[i])));
      CHECK(g0[i] == 0.0);
    }
  }

  TEST_CASE("removable singularity of |v|^r at zero") {
    std::vector<double> x{0.0, 0.0, 1.0, -2.0};
    for (double r : {2.0, 3.0, 6.0}) {
      const auto vg = g::gradient([r](g::Tape&, g::Var p) { return g::sum(g::abs_pow(g::pairs_to_complex(p), r)); }, x);
      CHECK(vg.gradient[0] == 0.0);
      CHECK(vg.gradient[1] == 0.0);
      for (double v : vg.gradient) CHECK(std::isfinite(v));
    }
    const auto ab = g::gradient([](g::Tape&, g::Var p) { return g::sum(g::abs_complex(g::pairs_to_complex(p))); }, x);
    CHECK(ab.gradient[0] == 0.0);
  }

  TEST_CASE("guarded quotients and foreign handles") {
    std::vector<double> x{1.0, 2.0, 1e-15};
    CHECK_THROWS_AS(g::gradient([](g::Tape&, g::Var p) { return g::sum(g::divide_scalar(p, g::pick(p, 2))); }, x),
                    GradError);
    g::Tape other;
    g::Var foreign = other.leaf({1.0});
    CHECK_THROWS_AS(g::gradient([&](g::Tape&, g::Var p) { return g::add(g::sum(p), foreign); }, x), GradError);
    CHECK_THROWS_AS(g::gradient([](g::Tape&, g::Var p) { return p; }, x), GradError);
    std::vector<double> bad{1.0, INFINITY};
    CHECK_THROWS_AS(g::gradient([](g::Tape&, g::Var p) { return g::sum(g::exp(p)); }, bad), NumericalError);
  }
}

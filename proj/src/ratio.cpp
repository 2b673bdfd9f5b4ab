#include "strichartz/ratio.hpp"

#include <cmath>
#include <sstream>

#include <tbb/parallel_for.h>

#include "strichartz/constants.hpp"
#include "strichartz/error.hpp"
#include "strichartz/fft.hpp"

namespace strichartz {

void validate(const RatioConfig& cfg) {
  validate(cfg.spec);
  const double q = cfg.spec.q, r = cfg.spec.r;
  if (cfg.kind == PropagatorKind::Schrodinger) {
    if (!is_schrodinger_admissible(cfg.grid.dim(), q, r)) {
      std::ostringstream os;
      os << "(d,q,r) = (" << cfg.grid.dim() << "," << q << "," << r << ") violates 2/q + d/r = d/2";
      throw InvalidArgument(os.str());
    }
    if (cfg.gamma != 0.0) throw InvalidArgument("Schrodinger runs use gamma = 0");
    return;
  }
  if (cfg.grid.dim() != 1) throw InvalidArgument("the Airy group requires d = 1");
  if (cfg.critical) {
    const auto g = airy_gamma(q, r);
    if (!g) {
      std::ostringstream os;
      os << "(q,r) = (" << q << "," << r << ") violates -gamma + 3/q + 1/r = 1/2 with -1/2 < gamma <= 1/q";
      throw InvalidArgument(os.str());
    }
    if (std::abs(*g - cfg.gamma) > 1e-12) throw InvalidArgument("gamma differs from the critical value 3/q + 1/r - 1/2");
  }
  if (cfg.gamma < 0.0) throw InvalidArgument("negative gamma is not supported");
}

SpaceTimeGrid default_grid(PropagatorKind kind, int dim) {
  if (kind == PropagatorKind::Airy) return make_grid(500.0, 5.0, 8192, 1024, 1);
  if (dim == 2) return make_grid(10.0, 1.0, 128, 32, 2);
  return make_grid(30.0, 1.0, 1024, 1024, 1);
}

RatioConfig default_config(PropagatorKind kind, int dim, double q, double r) {
  RatioConfig cfg{default_grid(kind, dim), kind, 0.0, NormSpec{q, r}};
  if (kind == PropagatorKind::Airy) {
    const auto g = airy_gamma(q, r);
    if (!g) throw InvalidArgument("no critical gamma for this (q, r)");
    cfg.gamma = *g;
  }
  return cfg;
}

RatioConfig with_grid(const RatioConfig& cfg, const SpaceTimeGrid& grid) {
  RatioConfig out = cfg;
  out.grid = grid;
  return out;
}

double evolved_mixed_norm(std::span<const Complex> u0, const RatioConfig& cfg) {
  validate(cfg.spec);
  const Evolver ev(cfg.grid, cfg.kind, cfg.gamma, cfg.precision);
  std::vector<double> a(cfg.grid.m());
  const double cell = cfg.grid.cell_volume();
  ev.for_each_slice(u0, [&](std::size_t l, std::span<const Complex> v) { a[l] = slice_lr_norm(v, cfg.spec.r, cell); });
  return combine_lq(a, cfg.spec.q, cfg.grid.dt(), cfg.rule);
}

double strichartz_ratio(std::span<const Complex> u0, const RatioConfig& cfg) {
  const double mass = l2_norm(u0, cfg.grid.dx(), cfg.grid.dim());
  if (!(mass > 1e-12)) throw InvalidArgument("datum has vanishing L2 norm");
  return evolved_mixed_norm(u0, cfg) / mass;
}

double strichartz_ratio(const ProfileSpec& profile, const RatioConfig& cfg) {
  return strichartz_ratio(sample(profile, cfg.grid), cfg);
}

double resolved_spectral_fraction(std::span<const Complex> u0, const SpaceTimeGrid& grid) {
  const std::size_t s = grid.spatial_size();
  if (u0.size() != s) throw InvalidArgument("datum size does not match the grid");
  fft::Buffer<double> in(u0.begin(), u0.end()), out(s);
  fft::Plan<double>(grid.n(), grid.dim(), fft::Direction::Forward).execute(in.data(), out.data());
  const auto xi = grid.frequencies();
  const double cut = 0.5 * std::abs(xi[grid.n() / 2]);
  double inner = 0.0, total = 0.0;
  for (std::size_t k = 0; k < s; ++k) {
    const double mass = std::norm(out[k]);
    double sq;
    if (grid.dim() == 1) {
      sq = xi[k] * xi[k];
    } else {
      const double a = xi[k / grid.n()], b = xi[k % grid.n()];
      sq = a * a + b * b;
    }
    total += mass;
    if (sq <= cut * cut) inner += mass;
  }
  return total > 0.0 ? inner / total : 1.0;
}

namespace {

template <class MakeProfile>
std::vector<SweepRow> sweep(std::span<const double> params, const RatioConfig& cfg, MakeProfile make) {
  std::vector<SweepRow> rows(params.size());
  tbb::parallel_for(std::size_t{0}, params.size(), [&](std::size_t i) {
    const auto u0 = sample(make(params[i]), cfg.grid);
    rows[i].parameter = params[i];
    rows[i].ratio = strichartz_ratio(u0, cfg);
    rows[i].resolved_fraction = resolved_spectral_fraction(u0, cfg.grid);
  });
  return rows;
}

}  // namespace

SweepResult sweep_soliton(std::span<const double> ps, const RatioConfig& cfg) {
  validate(cfg);
  SweepResult out;
  out.rows = sweep(ps, cfg, [](double p) { return ProfileSpec{profile::Soliton{p, 1.0, 0.0}}; });
  const double limit = strichartz_ratio(ProfileSpec{profile::SolitonLimit{}}, cfg);
  for (auto& row : out.rows) {
    row.reference = limit;
    row.gap = limit - row.ratio;
  }
  out.reference_label = "soliton-limit";
  out.notes.push_back("reference e^{-|x|} has a slowly decaying spectrum; its ratio is slow-converging in N and M");
  return out;
}

SweepResult sweep_breather(std::span<const double> alphas, const RatioConfig& cfg, double beta) {
  validate(cfg);
  if (cfg.kind != PropagatorKind::Airy) throw InvalidArgument("breather sweeps use the Airy group");
  SweepResult out;
  out.rows = sweep(alphas, cfg, [beta](double a) { return ProfileSpec{profile::Breather{a, beta, 0.0, 0.0, 0.0}}; });
  const double bound = tilde_A(cfg.spec.q, cfg.spec.r);
  for (auto& row : out.rows) {
    row.reference = bound;
    row.gap = bound - row.ratio;
  }
  out.reference_label = "tilde_A";
  return out;
}

double scaling_invariance_check(const ProfileSpec& profile, double lambda, const RatioConfig& cfg,
                                const ScalingOptions& options) {
  if (!(lambda > 0.0)) throw InvalidArgument("scaling factor must be positive");
  validate(profile);
  const auto& g = cfg.grid;
  const double base = strichartz_ratio(sample(profile, g), cfg);

  const double amp = std::pow(lambda, 0.5 * g.dim());
  std::vector<Complex> scaled(g.spatial_size());
  if (g.dim() == 1) {
    for (std::size_t j = 0; j < g.n(); ++j) scaled[j] = amp * evaluate(profile, lambda * (g.x(j) - options.shift));
  } else {
    if (!std::holds_alternative<profile::Gaussian>(profile))
      throw InvalidArgument("only the Gaussian profile is defined in two dimensions");
    for (std::size_t a = 0; a < g.n(); ++a)
      for (std::size_t b = 0; b < g.n(); ++b)
        scaled[a * g.n() + b] = amp * gaussian2(lambda * (g.x(a) - options.shift), lambda * (g.x(b) - options.shift));
  }
  RatioConfig scaled_cfg = cfg;
  if (options.scale_time) {
    const double k = cfg.kind == PropagatorKind::Airy ? 3.0 : 2.0;
    scaled_cfg.grid = make_grid(g.half_width(), g.half_time() / std::pow(lambda, k), g.n(), g.m(), g.dim());
  }
  const double value = strichartz_ratio(scaled, scaled_cfg);
  return std::abs(value - base) / base;
}

SpaceTimeGrid hermite_stability_grid(double half_time) { return make_grid(2500.0, half_time, 16384, 1024, 1); }

std::vector<HermiteStabilityRow> hermite_time_stability(int n_max, std::span<const double> half_times,
                                                        const RatioConfig& cfg) {
  validate(cfg);
  if (n_max < 0 || n_max > kMaxHermiteDegree) throw InvalidArgument("Hermite degree must lie in [0, 60]");
  const auto& g = cfg.grid;
  std::vector<std::vector<Complex>> data(static_cast<std::size_t>(n_max) + 1,
                                         std::vector<Complex>(g.n()));
  for (std::size_t j = 0; j < g.n(); ++j) {
    const auto f = hermite_fns(n_max, g.x(j));
    for (int n = 0; n <= n_max; ++n) data[static_cast<std::size_t>(n)][j] = f[static_cast<std::size_t>(n)];
  }
  std::vector<HermiteStabilityRow> rows;
  for (int n = 0; n <= n_max; ++n)
    for (double T : half_times) rows.push_back({n, T, 0.0});
  tbb::parallel_for(std::size_t{0}, rows.size(), [&](std::size_t i) {
    auto& row = rows[i];
    const auto local = with_grid(cfg, make_grid(g.half_width(), row.half_time, g.n(), g.m(), 1));
    row.ratio = strichartz_ratio(data[static_cast<std::size_t>(row.n)], local);
  });
  return rows;
}

}  // namespace strichartz

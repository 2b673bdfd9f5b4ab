#include "strichartz/optimize.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "strichartz/profiles.hpp"

namespace strichartz {

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != s.m.size() || grads.size() != s.m.size())
    throw InvalidArgument("Adam state, parameters and gradients differ in length");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    params[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
  }
}

double cyclic_lr(std::size_t iter, const CyclicSchedule& sc) {
  if (sc.period == 0) throw InvalidArgument("cyclic period must be positive");
  const double frac = static_cast<double>(iter % sc.period) / static_cast<double>(sc.period);
  return sc.min_lr + (sc.max_lr - sc.min_lr) * std::abs(1.0 - 2.0 * frac);
}

TrainConfig default_train_config(const RatioConfig& ratio) {
  TrainConfig cfg{MLPArchitecture{}, default_loss_config(ratio), 2000, CyclicSchedule{}};
  cfg.arch.input_dim = ratio.grid.dim();
  return cfg;
}

double estimate_constant(const WaveletMLP& net, const RatioConfig& cfg) {
  return evolved_mixed_norm(normalized_samples(net, cfg.grid), cfg);
}

double estimate_constant(const ProfileSpec& profile, const RatioConfig& cfg) {
  return strichartz_ratio(profile, cfg);
}

namespace {

struct Snapshot {
  std::vector<double> params;
  AdamState adam;
  std::size_t iteration;
  std::size_t records;
};

}  // namespace

TrainResult train_from(const TrainConfig& cfg, WaveletMLP net, const LogCallback& on_log) {
  validate(cfg.loss.ratio);
  if (cfg.log_every == 0) throw InvalidArgument("log interval must be positive");
  const auto start = std::chrono::steady_clock::now();
  TrainHistory history;
  history.seed = net.seed();
  history.precision = cfg.loss.ratio.precision == Precision::Single ? "32" : "64";

  const std::size_t base = net.iteration();
  auto schedule = cfg.schedule;
  AdamState adam(net.parameters().size());
  Snapshot last{std::vector<double>(net.parameters().begin(), net.parameters().end()), adam, 0, 0};
  std::size_t retries = 0;

  for (std::size_t it = 0; it <= cfg.iterations;) {
    LossEvaluation ev;
    bool finite = true;
    try {
      ev = loss_and_gradient(net, cfg.loss);
      finite = std::isfinite(ev.terms.total);
      for (double g : ev.gradient) finite = finite && std::isfinite(g);
    } catch (const NumericalError&) {
      finite = false;
    }
    if (!finite) {
      if (retries == cfg.max_retries) {
        net.mutable_parameters() = last.params;
        net.set_iteration(base + last.iteration);
        throw TrainingDiverged("loss became non-finite after " + std::to_string(retries) + " retries", net);
      }
      ++retries;
      schedule.max_lr *= 0.5;
      net.mutable_parameters() = last.params;
      adam = last.adam;
      history.records.resize(last.records);
      it = last.iteration;
      continue;
    }
    const double lr = cyclic_lr(it, schedule);
    if (it % cfg.log_every == 0 || it == cfg.iterations) {
      HistoryRecord rec{base + it, ev.terms.constant, ev.terms.total, ev.terms.boundary, ev.terms.ridge, lr};
      if (cfg.loss.ratio.precision == Precision::Single) rec.constant = estimate_constant(net, cfg.loss.ratio);
      if (!history.records.empty() && history.records.back().iteration == rec.iteration) history.records.pop_back();
      history.records.push_back(rec);
      if (on_log) on_log(rec);
      last = Snapshot{std::vector<double>(net.parameters().begin(), net.parameters().end()), adam, it,
                      history.records.size() - 1};
    }
    if (it == cfg.iterations) break;
    adam_step(adam, net.mutable_parameters(), ev.gradient, lr);
    ++it;
  }
  net.set_iteration(base + cfg.iterations);
  history.restarts = retries;
  history.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(net), std::move(history)};
}

TrainResult train(const TrainConfig& cfg, std::uint64_t seed, const LogCallback& on_log) {
  return train_from(cfg, init(seed, cfg.arch), on_log);
}

grad::ValueAndGradient hermite_ratio_gradient(std::span<const double> coeffs, const RatioConfig& cfg) {
  validate(cfg);
  const auto& g = cfg.grid;
  if (g.dim() != 1) throw InvalidArgument("Hermite ansatz is one-dimensional");
  const int n_max = static_cast<int>(coeffs.size()) - 1;
  auto basis = std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(g.n()), n_max + 1);
  for (std::size_t j = 0; j < g.n(); ++j) {
    const auto f = hermite_fns(n_max, g.x(j));
    for (int n = 0; n <= n_max; ++n) (*basis)(static_cast<Eigen::Index>(j), n) = f[static_cast<std::size_t>(n)];
  }
  auto evolver = std::make_shared<const Evolver>(g, cfg.kind, cfg.gamma, Precision::Double);
  const std::shared_ptr<const Eigen::MatrixXd> A = basis;
  return grad::gradient(
      [&](grad::Tape&, grad::Var b) {
        grad::Var u = grad::real_to_complex(grad::linear_map(A, b));
        grad::Var norm = grad::l2_norm(u, g.cell_volume());
        if (!(norm.scalar() > 1e-12)) throw NumericalError("Hermite coefficients collapsed to zero");
        return grad::evolved_mixed_norm(grad::divide_scalar(u, norm), evolver, cfg.spec, cfg.rule);
      },
      coeffs);
}

HermiteResult optimize_hermite(const RatioConfig& cfg, std::uint64_t seed, const HermiteOptions& opt) {
  if (opt.n_terms < 1 || opt.n_terms > kMaxHermiteDegree + 1) throw InvalidArgument("n_terms must lie in [1, 61]");
  if (opt.restarts == 0) throw InvalidArgument("at least one restart is required");
  HermiteResult best;
  best.ratio = -1.0;
  const auto n = static_cast<std::size_t>(opt.n_terms);
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(seed * 1000003ULL + r);
    std::normal_distribution<double> normal;
    std::vector<double> b(n);
    for (auto& v : b) v = normal(rng);
    AdamState adam(n);
    double ratio = 0.0;
    for (std::size_t it = 0; it <= opt.iterations; ++it) {
      auto vg = hermite_ratio_gradient(b, cfg);
      ratio = vg.value;
      if (it == opt.iterations) break;
      for (auto& g : vg.gradient) g = -g;
      adam_step(adam, b, vg.gradient, opt.lr);
    }
    best.restart_ratios.push_back(ratio);
    if (ratio > best.ratio) {
      best.ratio = ratio;
      best.coeffs = b;
      best.best_restart = r;
    }
  }
  // Scale so the sampled profile has unit discrete L2 norm.
  std::vector<Complex> u(cfg.grid.n());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = hermite_sum(best.coeffs, cfg.grid.x(j));
  const double norm = l2_norm(u, cfg.grid.dx(), 1);
  for (auto& c : best.coeffs) c /= norm;
  return best;
}

}  // namespace strichartz

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "strichartz/ansatz.hpp"
#include "strichartz/error.hpp"
#include "strichartz/ratio.hpp"

namespace strichartz {

struct AdamState {
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  std::vector<double> m, v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of params in place (descent direction).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// Triangular wave between min_lr and max_lr, starting at max_lr.
struct CyclicSchedule {
  double min_lr = 1e-5;
  double max_lr = 1e-3;
  std::size_t period = 1000;
};

double cyclic_lr(std::size_t iter, const CyclicSchedule& schedule = {});

struct HistoryRecord {
  std::size_t iteration = 0;
  double constant = 0.0;
  double loss = 0.0;
  double boundary = 0.0;
  double ridge = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRecord> records;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string precision = "64";
  double wall_clock_seconds = 0.0;
  std::size_t restarts = 0;
};

struct TrainConfig {
  MLPArchitecture arch;
  LossConfig loss;
  std::size_t iterations = 2000;
  CyclicSchedule schedule;
  std::size_t log_every = 100;
  std::size_t max_retries = 2;
};

TrainConfig default_train_config(const RatioConfig& ratio);

struct TrainResult {
  WaveletMLP net;
  TrainHistory history;
};

/// Raised when the loss stays non-finite after every retry; carries the last
/// network whose loss was finite.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& what, WaveletMLP last_valid)
      : DivergenceError(what), last_valid(std::move(last_valid)) {}
  WaveletMLP last_valid;
};

using LogCallback = std::function<void(const HistoryRecord&)>;

/// Adam on the loss with the cyclic schedule. The constant is logged every
/// log_every iterations starting at 0, and at the last iteration. A
/// non-finite loss restores the last logged state, halves max_lr and retries.
TrainResult train(const TrainConfig& cfg, std::uint64_t seed, const LogCallback& on_log = {});

/// Continues training an existing network for cfg.iterations more steps.
TrainResult train_from(const TrainConfig& cfg, WaveletMLP net, const LogCallback& on_log = {});

/// Mixed norm of the normalized evolved datum, in the config's precision.
double estimate_constant(const WaveletMLP& net, const RatioConfig& cfg);
double estimate_constant(const ProfileSpec& profile, const RatioConfig& cfg);

struct HermiteOptions {
  int n_terms = 21;
  std::size_t iterations = 300;
  double lr = 0.02;
  std::size_t restarts = 5;
};

struct HermiteResult {
  std::vector<double> coeffs;  // unit l2 norm of the sampled profile
  double ratio = 0.0;
  std::size_t best_restart = 0;
  std::vector<double> restart_ratios;
};

/// Maximizes strichartz_ratio(hermite_sum(b)) over b by Adam, from
/// independent standard normal starts; keeps the best.
HermiteResult optimize_hermite(const RatioConfig& cfg, std::uint64_t seed, const HermiteOptions& options = {});

/// Differentiable ratio of a Hermite sum with the given coefficients.
grad::ValueAndGradient hermite_ratio_gradient(std::span<const double> coeffs, const RatioConfig& cfg);

}  // namespace strichartz

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "strichartz/grad.hpp"
#include "strichartz/ratio.hpp"

namespace strichartz {

enum class Activation { Wavelet, Tanh };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);

struct MLPArchitecture {
  int input_dim = 1;   // d
  int output_dim = 1;  // k: 1 real, 2 (re, im)
  int width = 20;
  int depth = 4;  // hidden layers
  Activation activation = Activation::Wavelet;
  bool symmetrize = true;
  /// One (s0, w0, b0) triple per hidden layer instead of one per neuron.
  bool shared_activation = false;
  /// Recorded for ablations; only "uniform-fan" is implemented.
  std::string init_scheme = "uniform-fan";
};

void validate(const MLPArchitecture& arch);

/// Named slice of the flat parameter vector, row-major with the given shape.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;
  std::size_t count() const;
};

/// Layer i (1-based) has W<i> (out x in) and beta<i> (out). Hidden layer i
/// also owns log_s0_<i>, w0_<i>, b0_<i>; s0 = exp(log_s0) stays positive.
std::vector<ParameterBlock> parameter_layout(const MLPArchitecture& arch);
std::size_t parameter_count(const MLPArchitecture& arch);

class WaveletMLP {
 public:
  WaveletMLP(MLPArchitecture arch, std::vector<double> params, std::uint64_t seed = 0, std::size_t iteration = 0);

  const MLPArchitecture& architecture() const { return arch_; }
  const std::vector<ParameterBlock>& layout() const { return layout_; }
  std::span<const double> parameters() const { return params_; }
  std::vector<double>& mutable_parameters() { return params_; }
  const ParameterBlock& block(const std::string& name) const;
  std::span<const double> values(const std::string& name) const;

  std::uint64_t seed() const { return seed_; }
  std::size_t iteration() const { return iteration_; }
  void set_iteration(std::size_t it) { iteration_ = it; }

 private:
  MLPArchitecture arch_;
  std::vector<ParameterBlock> layout_;
  std::vector<double> params_;
  std::uint64_t seed_;
  std::size_t iteration_;
};

/// Weights U(-a, a) with a = sqrt(6/(fan_in + fan_out)), biases 0,
/// s0 = 1/sqrt(2), w0 = 1, b0 ~ U(-pi/2, pi/2). Deterministic in the seed.
WaveletMLP init(std::uint64_t seed, const MLPArchitecture& arch);

/// Wavelet: e^{-(s0 x)^2} sin(w0 x + b0); tanh: tanh(x).
double activation_eval(double x, double s0, double w0, double b0, Activation kind);

/// Network value at one point (length d), symmetrized if configured.
Complex forward(const WaveletMLP& net, std::span<const double> x);

/// Network values on every spatial grid point (row-major for d = 2).
std::vector<Complex> raw_samples(const WaveletMLP& net, const SpaceTimeGrid& grid);

/// raw_samples divided by their discrete L2 norm.
std::vector<Complex> normalized_samples(const WaveletMLP& net, const SpaceTimeGrid& grid);

/// Records the raw complex samples as a function of the parameter node.
grad::Var record_samples(grad::Tape& tape, grad::Var params, const MLPArchitecture& arch, const SpaceTimeGrid& grid);

enum class BoundaryKind { Airy, Schrodinger };

struct LossConfig {
  double ridge = 1e-6;
  BoundaryKind boundary = BoundaryKind::Airy;
  double boundary_weight = 1.0;
  RatioConfig ratio;
};

LossConfig default_loss_config(const RatioConfig& ratio);

struct LossTerms {
  double total = 0.0;
  double constant = 0.0;  // mixed norm of the normalized evolved datum
  double boundary = 0.0;
  double ridge = 0.0;
};

/// Records -J + boundary + ridge on a tape for parameters given as a node.
/// The boundary acts on the normalized sample at the origin:
/// Airy |phi(0) - 1|^2, Schrodinger (|phi(0)| - 1)^2.
grad::Var record_loss(grad::Tape& tape, grad::Var params, const MLPArchitecture& arch, const LossConfig& cfg,
                      LossTerms* terms = nullptr);

grad::DifferentiableScalar loss(const WaveletMLP& net, const LossConfig& cfg, LossTerms* terms = nullptr);

struct LossEvaluation {
  LossTerms terms;
  std::vector<double> gradient;
};

LossEvaluation loss_and_gradient(const WaveletMLP& net, const LossConfig& cfg);

nlohmann::json checkpoint_json(const WaveletMLP& net);
WaveletMLP checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const WaveletMLP& net, const std::filesystem::path& path);
WaveletMLP load_checkpoint(const std::filesystem::path& path);

}  // namespace strichartz

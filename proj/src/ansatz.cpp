#include "strichartz/ansatz.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "strichartz/error.hpp"

namespace strichartz {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string layer_name(const char* stem, int i) { return stem + std::to_string(i); }

// Sample points, with the mirrored copy appended when symmetrizing.
RowMatrix input_points(const MLPArchitecture& arch, const SpaceTimeGrid& grid) {
  if (grid.dim() != arch.input_dim) throw InvalidArgument("network input dimension differs from the grid dimension");
  const std::size_t b = grid.spatial_size();
  RowMatrix X(static_cast<Eigen::Index>(arch.symmetrize ? 2 * b : b), arch.input_dim);
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (arch.input_dim == 1) {
      X(row, 0) = grid.x(i);
    } else {
      X(row, 0) = grid.x(i / grid.n());
      X(row, 1) = grid.x(i % grid.n());
    }
  }
  if (arch.symmetrize) X.bottomRows(static_cast<Eigen::Index>(b)) = -X.topRows(static_cast<Eigen::Index>(b));
  return X;
}

// Plain evaluation of the unsymmetrized network on the rows of X.
RowMatrix evaluate_rows(const WaveletMLP& net, const RowMatrix& X) {
  const auto& arch = net.architecture();
  RowMatrix h = X;
  for (int i = 1; i <= arch.depth + 1; ++i) {
    const auto& wb = net.block(layer_name("W", i));
    Eigen::Map<const RowMatrix> W(net.parameters().data() + wb.offset, static_cast<Eigen::Index>(wb.shape[0]),
                                  static_cast<Eigen::Index>(wb.shape[1]));
    const auto bias = net.values(layer_name("beta", i));
    RowMatrix z = h * W.transpose();
    z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    if (i == arch.depth + 1) return z;
    const auto ls = net.values(layer_name("log_s0_", i));
    const auto w0 = net.values(layer_name("w0_", i));
    const auto b0 = net.values(layer_name("b0_", i));
    auto at = [](std::span<const double> p, Eigen::Index j) { return p.size() == 1 ? p[0] : p[static_cast<std::size_t>(j)]; };
    for (Eigen::Index r = 0; r < z.rows(); ++r)
      for (Eigen::Index c = 0; c < z.cols(); ++c)
        z(r, c) = activation_eval(z(r, c), std::exp(at(ls, c)), at(w0, c), at(b0, c), arch.activation);
    h = std::move(z);
  }
  return h;
}

std::vector<Complex> to_samples(const MLPArchitecture& arch, const RowMatrix& y, std::size_t b) {
  std::vector<Complex> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto m = static_cast<Eigen::Index>(i + b);
    double re = y(r, 0), im = arch.output_dim == 2 ? y(r, 1) : 0.0;
    if (arch.symmetrize) {
      re = 0.5 * (re + y(m, 0));
      if (arch.output_dim == 2) im = 0.5 * (im + y(m, 1));
    }
    out[i] = Complex(re, im);
  }
  return out;
}

}  // namespace

const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "wavelet"; }

Activation parse_activation(const std::string& name) {
  if (name == "wavelet") return Activation::Wavelet;
  if (name == "tanh") return Activation::Tanh;
  throw InvalidArgument("unknown activation '" + name + "' (expected wavelet or tanh)");
}

void validate(const MLPArchitecture& arch) {
  if (arch.input_dim != 1 && arch.input_dim != 2) throw InvalidArgument("network input dimension must be 1 or 2");
  if (arch.output_dim != 1 && arch.output_dim != 2) throw InvalidArgument("network output dimension must be 1 or 2");
  if (arch.width < 1 || arch.depth < 1) throw InvalidArgument("network width and depth must be positive");
  if (arch.init_scheme != "uniform-fan") throw InvalidArgument("unknown init scheme '" + arch.init_scheme + "'");
}

std::size_t ParameterBlock::count() const {
  std::size_t c = 1;
  for (auto s : shape) c *= s;
  return c;
}

std::vector<ParameterBlock> parameter_layout(const MLPArchitecture& arch) {
  validate(arch);
  std::vector<ParameterBlock> blocks;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    blocks.push_back({std::move(name), offset, std::move(shape)});
    offset += blocks.back().count();
  };
  const auto w = static_cast<std::size_t>(arch.width);
  for (int i = 1; i <= arch.depth + 1; ++i) {
    const std::size_t in = i == 1 ? static_cast<std::size_t>(arch.input_dim) : w;
    const std::size_t out = i == arch.depth + 1 ? static_cast<std::size_t>(arch.output_dim) : w;
    add(layer_name("W", i), {out, in});
    add(layer_name("beta", i), {out});
  }
  const std::size_t act = arch.shared_activation ? 1 : w;
  for (int i = 1; i <= arch.depth; ++i) {
    add(layer_name("log_s0_", i), {act});
    add(layer_name("w0_", i), {act});
    add(layer_name("b0_", i), {act});
  }
  return blocks;
}

std::size_t parameter_count(const MLPArchitecture& arch) {
  const auto layout = parameter_layout(arch);
  return layout.back().offset + layout.back().count();
}

WaveletMLP::WaveletMLP(MLPArchitecture arch, std::vector<double> params, std::uint64_t seed, std::size_t iteration)
    : arch_(std::move(arch)), layout_(parameter_layout(arch_)), params_(std::move(params)), seed_(seed),
      iteration_(iteration) {
  if (params_.size() != parameter_count(arch_)) throw InvalidArgument("parameter vector does not match the architecture");
}

const ParameterBlock& WaveletMLP::block(const std::string& name) const {
  for (const auto& b : layout_)
    if (b.name == name) return b;
  throw InvalidArgument("no parameter block named '" + name + "'");
}

std::span<const double> WaveletMLP::values(const std::string& name) const {
  const auto& b = block(name);
  return std::span<const double>(params_).subspan(b.offset, b.count());
}

WaveletMLP init(std::uint64_t seed, const MLPArchitecture& arch) {
  const auto layout = parameter_layout(arch);
  std::vector<double> p(parameter_count(arch), 0.0);
  std::mt19937_64 rng(seed);
  for (const auto& b : layout) {
    auto* dst = p.data() + b.offset;
    if (b.name[0] == 'W') {
      const double a = std::sqrt(6.0 / static_cast<double>(b.shape[0] + b.shape[1]));
      std::uniform_real_distribution<double> u(-a, a);
      for (std::size_t i = 0; i < b.count(); ++i) dst[i] = u(rng);
    } else if (b.name.rfind("log_s0_", 0) == 0) {
      std::fill_n(dst, b.count(), std::log(1.0 / std::numbers::sqrt2));
    } else if (b.name.rfind("w0_", 0) == 0) {
      std::fill_n(dst, b.count(), 1.0);
    } else if (b.name.rfind("b0_", 0) == 0) {
      std::uniform_real_distribution<double> u(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
      for (std::size_t i = 0; i < b.count(); ++i) dst[i] = u(rng);
    }
  }
  return WaveletMLP(arch, std::move(p), seed, 0);
}

double activation_eval(double x, double s0, double w0, double b0, Activation kind) {
  if (kind == Activation::Tanh) return std::tanh(x);
  return std::exp(-(s0 * x) * (s0 * x)) * std::sin(w0 * x + b0);
}

Complex forward(const WaveletMLP& net, std::span<const double> x) {
  const auto& arch = net.architecture();
  if (x.size() != static_cast<std::size_t>(arch.input_dim)) throw InvalidArgument("point dimension mismatch");
  RowMatrix X(arch.symmetrize ? 2 : 1, arch.input_dim);
  for (int c = 0; c < arch.input_dim; ++c) {
    X(0, c) = x[static_cast<std::size_t>(c)];
    if (arch.symmetrize) X(1, c) = -x[static_cast<std::size_t>(c)];
  }
  return to_samples(arch, evaluate_rows(net, X), 1)[0];
}

std::vector<Complex> raw_samples(const WaveletMLP& net, const SpaceTimeGrid& grid) {
  const auto& arch = net.architecture();
  return to_samples(arch, evaluate_rows(net, input_points(arch, grid)), grid.spatial_size());
}

std::vector<Complex> normalized_samples(const WaveletMLP& net, const SpaceTimeGrid& grid) {
  auto u = raw_samples(net, grid);
  const double norm = l2_norm(u, grid.dx(), grid.dim());
  if (!(norm > 1e-12)) throw NumericalError("network output vanishes on the grid");
  for (auto& z : u) z /= norm;
  return u;
}

grad::Var record_samples(grad::Tape& tape, grad::Var params, const MLPArchitecture& arch, const SpaceTimeGrid& grid) {
  const auto layout = parameter_layout(arch);
  if (params.size() != parameter_count(arch)) throw GradError("parameter node does not match the architecture");
  auto block = [&](const std::string& name) {
    for (const auto& b : layout)
      if (b.name == name) return grad::slice(params, b.offset, b.count());
    throw InvalidArgument("missing parameter block " + name);
  };
  const RowMatrix X = input_points(arch, grid);
  const auto batch = static_cast<std::size_t>(X.rows());
  grad::Var h = tape.constant(std::vector<double>(X.data(), X.data() + X.size()));
  for (int i = 1; i <= arch.depth + 1; ++i) {
    grad::Var z = grad::affine(h, block(layer_name("W", i)), block(layer_name("beta", i)), batch);
    if (i == arch.depth + 1) {
      h = z;
      break;
    }
    h = arch.activation == Activation::Tanh
            ? grad::tanh(z)
            : grad::wavelet(z, block(layer_name("log_s0_", i)), block(layer_name("w0_", i)),
                            block(layer_name("b0_", i)), batch);
  }
  const std::size_t b = grid.spatial_size();
  const auto k = static_cast<std::size_t>(arch.output_dim);
  if (arch.symmetrize) h = grad::pair_average(h, b, k);
  return k == 1 ? grad::real_to_complex(h) : grad::pairs_to_complex(h);
}

LossConfig default_loss_config(const RatioConfig& ratio) {
  const auto boundary = ratio.kind == PropagatorKind::Airy ? BoundaryKind::Airy : BoundaryKind::Schrodinger;
  return LossConfig{1e-6, boundary, 1.0, ratio};
}

grad::Var record_loss(grad::Tape& tape, grad::Var params, const MLPArchitecture& arch, const LossConfig& cfg,
                      LossTerms* terms) {
  if (cfg.ridge < 0.0) throw InvalidArgument("ridge weight must be nonnegative");
  const auto& g = cfg.ratio.grid;
  grad::Var u = record_samples(tape, params, arch, g);
  grad::Var norm = grad::l2_norm(u, g.cell_volume());
  if (!(norm.scalar() > 1e-12)) throw NumericalError("network output vanishes on the grid");
  grad::Var un = grad::divide_scalar(u, norm);
  // Gradients always run in double precision.
  auto evolver = std::make_shared<const Evolver>(g, cfg.ratio.kind, cfg.ratio.gamma, Precision::Double);
  grad::Var J = grad::evolved_mixed_norm(un, evolver, cfg.ratio.spec, cfg.ratio.rule);

  grad::Var phi0 = grad::pick_complex(un, g.origin_index());
  grad::Var boundary =
      cfg.boundary == BoundaryKind::Airy
          ? grad::sum_squares(grad::sub(phi0, tape.constant({1.0, 0.0}, true)))
          : grad::square(grad::add_constant(grad::abs_complex(phi0), -1.0));
  grad::Var ridge = grad::scale(grad::sum_squares(params), cfg.ridge);
  grad::Var total = grad::add(grad::add(grad::neg(J), grad::scale(boundary, cfg.boundary_weight)), ridge);
  if (terms) *terms = {total.scalar(), J.scalar(), boundary.scalar(), ridge.scalar()};
  return total;
}

grad::DifferentiableScalar loss(const WaveletMLP& net, const LossConfig& cfg, LossTerms* terms) {
  const auto arch = net.architecture();
  return grad::differentiate(
      [&](grad::Tape& tape, grad::Var p) { return record_loss(tape, p, arch, cfg, terms); }, net.parameters());
}

LossEvaluation loss_and_gradient(const WaveletMLP& net, const LossConfig& cfg) {
  LossEvaluation out;
  auto ds = loss(net, cfg, &out.terms);
  out.gradient = ds.pullback(1.0);
  return out;
}

nlohmann::json checkpoint_json(const WaveletMLP& net) {
  const auto& a = net.architecture();
  nlohmann::json params = nlohmann::json::array();
  for (const auto& b : net.layout()) {
    const auto v = net.values(b.name);
    params.push_back({{"name", b.name}, {"shape", b.shape}, {"values", std::vector<double>(v.begin(), v.end())}});
  }
  return {{"format", "strichartz-mlp"},
          {"version", 1},
          {"architecture",
           {{"input_dim", a.input_dim},
            {"output_dim", a.output_dim},
            {"widths", std::vector<int>(static_cast<std::size_t>(a.depth), a.width)},
            {"activation", to_string(a.activation)},
            {"symmetrize", a.symmetrize},
            {"shared_activation", a.shared_activation},
            {"init_scheme", a.init_scheme}}},
          {"seed", net.seed()},
          {"iteration", net.iteration()},
          {"parameters", params}};
}

WaveletMLP checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "strichartz-mlp") throw InvalidArgument("not a network checkpoint");
  const auto& ja = j.at("architecture");
  MLPArchitecture a;
  a.input_dim = ja.at("input_dim").get<int>();
  a.output_dim = ja.at("output_dim").get<int>();
  const auto widths = ja.at("widths").get<std::vector<int>>();
  if (widths.empty()) throw InvalidArgument("checkpoint has no hidden layers");
  for (int w : widths)
    if (w != widths.front()) throw InvalidArgument("checkpoint hidden widths must be equal");
  a.width = widths.front();
  a.depth = static_cast<int>(widths.size());
  a.activation = parse_activation(ja.at("activation").get<std::string>());
  a.symmetrize = ja.at("symmetrize").get<bool>();
  a.shared_activation = ja.value("shared_activation", false);
  a.init_scheme = ja.value("init_scheme", std::string("uniform-fan"));
  const auto layout = parameter_layout(a);
  std::vector<double> p(parameter_count(a));
  const auto& blocks = j.at("parameters");
  if (blocks.size() != layout.size()) throw InvalidArgument("checkpoint parameter blocks do not match the architecture");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& jb = blocks[i];
    if (jb.at("name").get<std::string>() != layout[i].name ||
        jb.at("shape").get<std::vector<std::size_t>>() != layout[i].shape)
      throw InvalidArgument("checkpoint block '" + layout[i].name + "' has the wrong name or shape");
    const auto v = jb.at("values").get<std::vector<double>>();
    if (v.size() != layout[i].count()) throw InvalidArgument("checkpoint block size mismatch");
    std::copy(v.begin(), v.end(), p.begin() + static_cast<std::ptrdiff_t>(layout[i].offset));
  }
  return WaveletMLP(a, std::move(p), j.at("seed").get<std::uint64_t>(), j.at("iteration").get<std::size_t>());
}

void save_checkpoint(const WaveletMLP& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_json(net).dump(1) << '\n';
}

WaveletMLP load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace strichartz

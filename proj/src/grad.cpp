#include "strichartz/grad.hpp"

#include <algorithm>
#include <cmath>

#include "strichartz/error.hpp"
#include "strichartz/fft.hpp"

namespace strichartz::grad {
namespace {

constexpr double kMinDenominator = 1e-14;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::span<const Complex> as_complex(const std::vector<double>& v) {
  return {reinterpret_cast<const Complex*>(v.data()), v.size() / 2};
}

std::span<Complex> as_complex(std::vector<double>& v) { return {reinterpret_cast<Complex*>(v.data()), v.size() / 2}; }

std::span<const Complex> as_complex(std::span<const double> v) {
  return {reinterpret_cast<const Complex*>(v.data()), v.size() / 2};
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) throw GradError("operands belong to different tapes");
  a.tape()->check(a);
  a.tape()->check(b);
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw GradError("variable is not attached to a tape");
  a.tape()->check(a);
  return *a.tape();
}

void require_real(Var a, const char* op) {
  if (a.is_complex()) throw GradError(std::string(op) + " expects a real operand");
}

void require_complex(Var a, const char* op) {
  if (!a.is_complex()) throw GradError(std::string(op) + " expects a complex operand");
}

void require_scalar(Var s, const char* op) {
  if (s.is_complex() || s.size() != 1) throw GradError(std::string(op) + " expects a real scalar");
}

void same_shape(Var a, Var b, const char* op) {
  if (a.size() != b.size() || a.is_complex() != b.is_complex())
    throw GradError(std::string(op) + ": operand shapes differ");
}

template <class F, class D>
Var unary(Var a, F f, D df) {
  Tape& t = tape_of(a);
  require_real(a, "elementwise op");
  const auto& x = t.val(a);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.record(std::move(y), false, {a}, [a, df](Tape& tp, std::span<const double> g) {
    const auto& x = tp.val(a);
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i]);
  });
}

}  // namespace

std::span<const double> Var::value() const { return tape_->nodes_[id_].value; }
std::span<const Complex> Var::complex_value() const { return as_complex(tape_->nodes_[id_].value); }
std::size_t Var::size() const { return tape_->nodes_[id_].value.size(); }
std::size_t Var::length() const { return is_complex() ? size() / 2 : size(); }
bool Var::is_complex() const { return tape_->nodes_[id_].is_complex; }
double Var::scalar() const {
  if (size() != 1) throw GradError("node is not a real scalar");
  return value()[0];
}

void Tape::check(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw GradError("variable does not belong to this tape");
}

Var Tape::leaf(std::vector<double> values) {
  nodes_.push_back(Node{std::move(values), {}, false, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(std::vector<double> values, bool is_complex) {
  if (is_complex && values.size() % 2) throw GradError("complex constant needs an even number of doubles");
  nodes_.push_back(Node{std::move(values), {}, is_complex, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::complex_constant(std::span<const Complex> values) {
  std::vector<double> flat(2 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    flat[2 * i] = values[i].real();
    flat[2 * i + 1] = values[i].imag();
  }
  return constant(std::move(flat), true);
}

Var Tape::record(std::vector<double> value, bool is_complex, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (Var v : inputs) {
    check(v);
    needs = needs || nodes_[v.id()].requires_grad;
  }
  for (double x : value)
    if (!std::isfinite(x)) throw NumericalError("non-finite value recorded on the gradient tape");
  nodes_.push_back(Node{std::move(value), {}, is_complex, needs, needs ? std::move(backward) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::adj(Var v) {
  auto& node = nodes_[v.id()];
  if (node.adjoint.empty()) node.adjoint.assign(node.value.size(), 0.0);
  return node.adjoint;
}

void Tape::backward(Var output, double seed) {
  check(output);
  if (output.size() != 1 || output.is_complex()) throw GradError("backward needs a real scalar output");
  for (auto& n : nodes_) n.adjoint.clear();
  adj(output)[0] = seed;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.backward && !n.adjoint.empty()) n.backward(*this, n.adjoint);
  }
}

std::vector<double> Tape::adjoint(Var v) const {
  check(v);
  const auto& n = nodes_[v.id()];
  return n.adjoint.empty() ? std::vector<double>(n.value.size(), 0.0) : n.adjoint;
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  same_shape(a, b, "add");
  std::vector<double> y(t.val(a));
  const auto& xb = t.val(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += xb[i];
  return t.record(std::move(y), a.is_complex(), {a, b}, [a, b](Tape& tp, std::span<const double> g) {
    for (Var v : {a, b})
      if (tp.requires_grad(v)) {
        auto& gv = tp.adj(v);
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
  });
}

Var sub(Var a, Var b) { return add(a, neg(b)); }

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  same_shape(a, b, "mul");
  require_real(a, "mul");
  std::vector<double> y(t.val(a));
  const auto& xb = t.val(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= xb[i];
  return t.record(std::move(y), false, {a, b}, [a, b](Tape& tp, std::span<const double> g) {
    const auto& xa = tp.val(a);
    const auto& xb = tp.val(b);
    if (tp.requires_grad(a)) {
      auto& ga = tp.adj(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * xb[i];
    }
    if (tp.requires_grad(b)) {
      auto& gb = tp.adj(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xa[i];
    }
  });
}

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  std::vector<double> y(t.val(a));
  for (auto& v : y) v *= c;
  return t.record(std::move(y), a.is_complex(), {a}, [a, c](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_constant(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var sqrt(Var a) {
  for (double x : a.value())
    if (x < 0.0) throw GradError("sqrt of a negative value");
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double x) {
                 if (x < kMinDenominator) throw GradError("sqrt derivative at zero");
                 return 0.5 / std::sqrt(x);
               });
}

Var pow(Var a, double p) {
  for (double x : a.value())
    if (x < 0.0) throw GradError("pow expects nonnegative values");
  return unary(a, [p](double x) { return std::pow(x, p); },
               [p](double x) {
                 if (x == 0.0) {
                   if (p > 1.0) return 0.0;
                   if (p == 1.0) return 1.0;
                   throw GradError("pow derivative is unbounded at zero");
                 }
                 return p * std::pow(x, p - 1.0);
               });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double x) {
                 const double th = std::tanh(x);
                 return 1.0 - th * th;
               });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var mul_scalar(Var a, Var s) {
  Tape& t = same_tape(a, s);
  require_scalar(s, "mul_scalar");
  const double sv = t.val(s)[0];
  std::vector<double> y(t.val(a));
  for (auto& v : y) v *= sv;
  return t.record(std::move(y), a.is_complex(), {a, s}, [a, s](Tape& tp, std::span<const double> g) {
    const auto& xa = tp.val(a);
    const double sv = tp.val(s)[0];
    if (tp.requires_grad(a)) {
      auto& ga = tp.adj(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv;
    }
    if (tp.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xa[i];
      tp.adj(s)[0] += acc;
    }
  });
}

Var divide_scalar(Var a, Var s) {
  Tape& t = same_tape(a, s);
  require_scalar(s, "divide_scalar");
  const double sv = t.val(s)[0];
  if (std::abs(sv) < kMinDenominator) throw GradError("denominator below 1e-14");
  std::vector<double> y(t.val(a));
  for (auto& v : y) v /= sv;
  return t.record(std::move(y), a.is_complex(), {a, s}, [a, s](Tape& tp, std::span<const double> g) {
    const auto& xa = tp.val(a);
    const double sv = tp.val(s)[0];
    if (tp.requires_grad(a)) {
      auto& ga = tp.adj(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / sv;
    }
    if (tp.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xa[i];
      tp.adj(s)[0] -= acc / (sv * sv);
    }
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  require_real(a, "sum");
  double s = 0.0;
  for (double x : t.val(a)) s += x;
  return t.record({s}, false, {a}, [a](Tape& tp, std::span<const double> g) {
    for (auto& v : tp.adj(a)) v += g[0];
  });
}

Var sum_squares(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double x : t.val(a)) s += x * x;
  return t.record({s}, false, {a}, [a](Tape& tp, std::span<const double> g) {
    const auto& x = tp.val(a);
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += 2.0 * g[0] * x[i];
  });
}

Var weighted_sum(Var a, std::span<const double> w) {
  Tape& t = tape_of(a);
  require_real(a, "weighted_sum");
  if (w.size() != a.size()) throw GradError("weighted_sum: weight count differs from operand size");
  std::vector<double> weights(w.begin(), w.end());
  double s = 0.0;
  const auto& x = t.val(a);
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return t.record({s}, false, {a}, [a, weights = std::move(weights)](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * weights[i];
  });
}

Var row_sums(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  require_real(a, "row_sums");
  if (rows * cols != a.size()) throw GradError("row_sums: shape does not match operand size");
  const auto& x = t.val(a);
  std::vector<double> y(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) y[i] += x[i * cols + j];
  return t.record(std::move(y), false, {a}, [a, rows, cols](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[i];
  });
}

Var slice(Var a, std::size_t offset, std::size_t count) {
  Tape& t = tape_of(a);
  require_real(a, "slice");
  if (offset + count > a.size()) throw GradError("slice out of range");
  const auto& x = t.val(a);
  std::vector<double> y(x.begin() + static_cast<std::ptrdiff_t>(offset),
                        x.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return t.record(std::move(y), false, {a}, [a, offset](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var pick(Var a, std::size_t index) {
  require_real(a, "pick");
  return slice(a, index, 1);
}

Var pick_complex(Var a, std::size_t index) {
  Tape& t = tape_of(a);
  require_complex(a, "pick_complex");
  if (index >= a.length()) throw GradError("pick_complex out of range");
  const auto& x = t.val(a);
  return t.record({x[2 * index], x[2 * index + 1]}, true, {a}, [a, index](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    ga[2 * index] += g[0];
    ga[2 * index + 1] += g[1];
  });
}

Var real_to_complex(Var a) {
  Tape& t = tape_of(a);
  require_real(a, "real_to_complex");
  const auto& x = t.val(a);
  std::vector<double> y(2 * x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) y[2 * i] = x[i];
  return t.record(std::move(y), true, {a}, [a](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[2 * i];
  });
}

Var pairs_to_complex(Var a) {
  Tape& t = tape_of(a);
  require_real(a, "pairs_to_complex");
  if (a.size() % 2) throw GradError("pairs_to_complex needs an even number of entries");
  return t.record(t.val(a), true, {a}, [a](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
  });
}

Var complex_from_parts(Var re, Var im) {
  Tape& t = same_tape(re, im);
  same_shape(re, im, "complex_from_parts");
  require_real(re, "complex_from_parts");
  const auto& xr = t.val(re);
  const auto& xi = t.val(im);
  std::vector<double> y(2 * xr.size());
  for (std::size_t i = 0; i < xr.size(); ++i) {
    y[2 * i] = xr[i];
    y[2 * i + 1] = xi[i];
  }
  return t.record(std::move(y), true, {re, im}, [re, im](Tape& tp, std::span<const double> g) {
    if (tp.requires_grad(re)) {
      auto& gr = tp.adj(re);
      for (std::size_t i = 0; i < gr.size(); ++i) gr[i] += g[2 * i];
    }
    if (tp.requires_grad(im)) {
      auto& gi = tp.adj(im);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[2 * i + 1];
    }
  });
}

namespace {

Var component(Var a, std::size_t which) {
  Tape& t = tape_of(a);
  require_complex(a, "real_part/imag_part");
  const auto& x = t.val(a);
  std::vector<double> y(x.size() / 2);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[2 * i + which];
  return t.record(std::move(y), false, {a}, [a, which](Tape& tp, std::span<const double> g) {
    auto& ga = tp.adj(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[2 * i + which] += g[i];
  });
}

}  // namespace

Var real_part(Var a) { return component(a, 0); }
Var imag_part(Var a) { return component(a, 1); }

Var abs_complex(Var a) {
  Tape& t = tape_of(a);
  require_complex(a, "abs_complex");
  const auto z = as_complex(t.val(a));
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::abs(z[i]);
  return t.record(std::move(y), false, {a}, [a](Tape& tp, std::span<const double> g) {
    const auto z = as_complex(tp.val(a));
    auto gz = as_complex(tp.adj(a));
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double m = std::abs(z[i]);
      if (m > 0.0) gz[i] += g[i] * z[i] / m;
    }
  });
}

Var abs_pow(Var a, double r) {
  Tape& t = tape_of(a);
  if (!(r >= 2.0)) throw GradError("abs_pow requires r >= 2");
  const bool cplx = a.is_complex();
  const auto& x = t.val(a);
  const std::size_t n = a.length();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m2 = cplx ? x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1] : x[i] * x[i];
    y[i] = pow_nonneg(m2, 0.5 * r);
  }
  return t.record(std::move(y), false, {a}, [a, r, cplx, n](Tape& tp, std::span<const double> g) {
    const auto& x = tp.val(a);
    auto& ga = tp.adj(a);
    // d|v|^r = r |v|^{r-2} v, which vanishes at v = 0 for r > 2.
    for (std::size_t i = 0; i < n; ++i) {
      if (cplx) {
        const double m2 = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1];
        const double f = g[i] * r * pow_nonneg(m2, 0.5 * (r - 2.0));
        ga[2 * i] += f * x[2 * i];
        ga[2 * i + 1] += f * x[2 * i + 1];
      } else {
        ga[i] += g[i] * r * pow_nonneg(x[i] * x[i], 0.5 * (r - 2.0)) * x[i];
      }
    }
  });
}

Var affine(Var x, Var W, Var b, std::size_t batch) {
  Tape& t = same_tape(x, W);
  same_tape(x, b);
  require_real(x, "affine");
  const std::size_t out = b.size();
  if (batch == 0 || x.size() % batch) throw GradError("affine: batch does not divide the input size");
  const std::size_t in = x.size() / batch;
  if (W.size() != out * in) throw GradError("affine: weight shape mismatch");
  std::vector<double> y(batch * out);
  {
    ConstMap X(t.val(x).data(), batch, in), Wm(t.val(W).data(), out, in);
    MutMap Y(y.data(), batch, out);
    Y.noalias() = X * Wm.transpose();
    Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(t.val(b).data(), out);
  }
  return t.record(std::move(y), false, {x, W, b}, [=](Tape& tp, std::span<const double> g) {
    ConstMap G(g.data(), batch, out);
    ConstMap X(tp.val(x).data(), batch, in), Wm(tp.val(W).data(), out, in);
    if (tp.requires_grad(x)) MutMap(tp.adj(x).data(), batch, in).noalias() += G * Wm;
    if (tp.requires_grad(W)) MutMap(tp.adj(W).data(), out, in).noalias() += G.transpose() * X;
    if (tp.requires_grad(b)) Eigen::Map<Eigen::RowVectorXd>(tp.adj(b).data(), out) += G.colwise().sum();
  });
}

Var wavelet(Var z, Var log_s, Var w, Var b, std::size_t batch) {
  Tape& t = same_tape(z, log_s);
  same_tape(z, w);
  same_tape(z, b);
  require_real(z, "wavelet");
  if (batch == 0 || z.size() % batch) throw GradError("wavelet: batch does not divide the input size");
  const std::size_t width = z.size() / batch;
  for (Var p : {log_s, w, b})
    if (p.size() != width && p.size() != 1) throw GradError("wavelet: parameter count must be 1 or the layer width");
  const auto& zs = t.val(z);
  const auto& ls = t.val(log_s);
  const auto& ws = t.val(w);
  const auto& bs = t.val(b);
  auto at = [](const std::vector<double>& p, std::size_t j) { return p.size() == 1 ? p[0] : p[j]; };
  std::vector<double> scale(width);
  for (std::size_t j = 0; j < width; ++j) scale[j] = std::exp(at(ls, j));
  std::vector<double> y(zs.size());
  auto envcos = std::make_shared<std::vector<double>>(zs.size());
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t k = i * width + j;
      const double sz = scale[j] * zs[k];
      const double env = std::exp(-sz * sz);
      const double arg = at(ws, j) * zs[k] + at(bs, j);
      y[k] = env * std::sin(arg);
      (*envcos)[k] = env * std::cos(arg);
    }
  return t.record(y, false, {z, log_s, w, b}, [=](Tape& tp, std::span<const double> g) {
    const auto& zs = tp.val(z);
    const auto& ws = tp.val(w);
    const bool gz = tp.requires_grad(z), gl = tp.requires_grad(log_s), gw = tp.requires_grad(w),
               gb = tp.requires_grad(b);
    std::vector<double> dl(width, 0.0), dw(width, 0.0), db(width, 0.0);
    std::vector<double>* az = gz ? &tp.adj(z) : nullptr;
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        const std::size_t k = i * width + j;
        const double s2 = scale[j] * scale[j];
        const double zz = zs[k];
        const double ys = y[k], yc = (*envcos)[k];
        const double gk = g[k];
        if (az) (*az)[k] += gk * (at(ws, j) * yc - 2.0 * s2 * zz * ys);
        dl[j] -= gk * 2.0 * s2 * zz * zz * ys;
        dw[j] += gk * yc * zz;
        db[j] += gk * yc;
      }
    auto scatter = [&](Var p, bool needed, const std::vector<double>& d) {
      if (!needed) return;
      auto& ap = tp.adj(p);
      for (std::size_t j = 0; j < width; ++j) ap[ap.size() == 1 ? 0 : j] += d[j];
    };
    scatter(log_s, gl, dl);
    scatter(w, gw, dw);
    scatter(b, gb, db);
  });
}

Var pair_average(Var y, std::size_t half, std::size_t cols) {
  Tape& t = tape_of(y);
  require_real(y, "pair_average");
  if (y.size() != 2 * half * cols) throw GradError("pair_average: shape mismatch");
  const auto& x = t.val(y);
  std::vector<double> out(half * cols);
  for (std::size_t i = 0; i < half * cols; ++i) out[i] = 0.5 * (x[i] + x[i + half * cols]);
  return t.record(std::move(out), false, {y}, [y, half, cols](Tape& tp, std::span<const double> g) {
    auto& gy = tp.adj(y);
    for (std::size_t i = 0; i < half * cols; ++i) {
      gy[i] += 0.5 * g[i];
      gy[i + half * cols] += 0.5 * g[i];
    }
  });
}

Var linear_map(std::shared_ptr<const Eigen::MatrixXd> A, Var x) {
  Tape& t = tape_of(x);
  require_real(x, "linear_map");
  if (static_cast<std::size_t>(A->cols()) != x.size()) throw GradError("linear_map: shape mismatch");
  std::vector<double> y(static_cast<std::size_t>(A->rows()));
  Eigen::Map<Eigen::VectorXd>(y.data(), A->rows()).noalias() =
      *A * Eigen::Map<const Eigen::VectorXd>(t.val(x).data(), A->cols());
  return t.record(std::move(y), false, {x}, [A, x](Tape& tp, std::span<const double> g) {
    Eigen::Map<Eigen::VectorXd>(tp.adj(x).data(), A->cols()).noalias() +=
        A->transpose() * Eigen::Map<const Eigen::VectorXd>(g.data(), A->rows());
  });
}

namespace {

// Transform of interleaved complex data with an extra scale factor.
std::vector<double> transform(const std::vector<double>& x, std::size_t n, int rank, fft::Direction dir, double scale) {
  const auto z = as_complex(x);
  fft::Buffer<double> in(z.begin(), z.end()), out(z.size());
  fft::Plan<double>(n, rank, dir).execute(in.data(), out.data());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    y[2 * i] = scale * out[i].real();
    y[2 * i + 1] = scale * out[i].imag();
  }
  return y;
}

Var spectral(Var a, std::size_t n, int rank, fft::Direction dir, double scale) {
  Tape& t = tape_of(a);
  require_complex(a, "dft/idft");
  const std::size_t size = rank == 1 ? n : n * n;
  if (a.length() != size) throw GradError("dft: length does not match the transform shape");
  // The adjoint of an unscaled DFT in one direction is the unscaled DFT in
  // the other, so the pullback reuses the same scale.
  const auto back = dir == fft::Direction::Forward ? fft::Direction::Backward : fft::Direction::Forward;
  return t.record(transform(t.val(a), n, rank, dir, scale), true, {a},
                  [a, n, rank, back, scale](Tape& tp, std::span<const double> g) {
                    const auto y = transform(std::vector<double>(g.begin(), g.end()), n, rank, back, scale);
                    auto& ga = tp.adj(a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += y[i];
                  });
}

}  // namespace

Var dft(Var a, std::size_t n, int rank, bool unitary) {
  const double size = static_cast<double>(rank == 1 ? n : n * n);
  return spectral(a, n, rank, fft::Direction::Forward, unitary ? 1.0 / std::sqrt(size) : 1.0);
}

Var idft(Var a, std::size_t n, int rank, bool unitary) {
  const double size = static_cast<double>(rank == 1 ? n : n * n);
  return spectral(a, n, rank, fft::Direction::Backward, unitary ? 1.0 / std::sqrt(size) : 1.0 / size);
}

Var evolve(Var u0, std::shared_ptr<const Evolver> evolver) {
  Tape& t = tape_of(u0);
  require_complex(u0, "evolve");
  const auto field = evolver->evolve(u0.complex_value());
  const auto values = field.values();
  std::vector<double> y(2 * values.size());
  std::copy_n(reinterpret_cast<const double*>(values.data()), y.size(), y.data());
  return t.record(std::move(y), true, {u0}, [u0, evolver](Tape& tp, std::span<const double> g) {
    const auto back = evolver->adjoint(as_complex(g));
    auto ga = as_complex(tp.adj(u0));
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += back[i];
  });
}

Var mixed_norm(Var field, const SpaceTimeGrid& grid, const NormSpec& spec, QuadratureRule rule) {
  Tape& t = tape_of(field);
  require_complex(field, "mixed_norm");
  validate(spec);
  const std::size_t s = grid.spatial_size(), m = grid.m();
  if (field.length() != s * m) throw GradError("mixed_norm: field does not match the grid");
  const double cell = grid.cell_volume(), dt = grid.dt();
  const auto z = field.complex_value();
  std::vector<double> a(m);
  for (std::size_t l = 0; l < m; ++l) a[l] = slice_lr_norm(z.subspan(l * s, s), spec.r, cell);
  const double J = combine_lq(a, spec.q, dt, rule);
  return t.record({J}, false, {field}, [=, a = std::move(a)](Tape& tp, std::span<const double> g) {
    if (J == 0.0) return;
    const auto z = as_complex(tp.val(field));
    auto gz = as_complex(tp.adj(field));
    const double q = spec.q, r = spec.r;
    for (std::size_t l = 0; l < m; ++l) {
      if (a[l] == 0.0) continue;
      // dJ/da_l = dt w_l (a_l/J)^{q-1}; da_l/dv = cell (|v|/a_l)^{r-2} v / a_l.
      const double outer = g[0] * dt * time_weight(l, m, rule) * pow_nonneg(a[l] / J, q - 1.0) * cell / a[l];
      const double inv2 = 1.0 / (a[l] * a[l]);
      for (std::size_t j = 0; j < s; ++j) {
        const Complex v = z[l * s + j];
        gz[l * s + j] += outer * pow_nonneg(std::norm(v) * inv2, 0.5 * (r - 2.0)) * v;
      }
    }
  });
}

Var evolved_mixed_norm(Var u0, std::shared_ptr<const Evolver> evolver, const NormSpec& spec, QuadratureRule rule) {
  Tape& t = tape_of(u0);
  require_complex(u0, "evolved_mixed_norm");
  validate(spec);
  if (evolver->precision() != Precision::Double) throw GradError("gradients require a double-precision evolver");
  const auto& grid = evolver->grid();
  const std::size_t m = grid.m();
  const double cell = grid.cell_volume(), dt = grid.dt();
  std::vector<double> a(m);
  evolver->for_each_slice(u0.complex_value(),
                          [&](std::size_t l, std::span<const Complex> v) { a[l] = slice_lr_norm(v, spec.r, cell); });
  const double J = combine_lq(a, spec.q, dt, rule);
  return t.record({J}, false, {u0}, [=, a = std::move(a)](Tape& tp, std::span<const double> g) {
    if (J == 0.0) return;
    const double q = spec.q, r = spec.r, gbar = g[0];
    const auto back = evolver->stream_pullback(
        as_complex(tp.val(u0)), [&](std::size_t l, std::span<const Complex> v, std::span<Complex> w) {
          if (a[l] == 0.0) return;
          const double outer = gbar * dt * time_weight(l, m, rule) * pow_nonneg(a[l] / J, q - 1.0) * cell / a[l];
          const double inv2 = 1.0 / (a[l] * a[l]);
          const double e = 0.5 * (r - 2.0);
          for (std::size_t j = 0; j < v.size(); ++j) w[j] = outer * pow_nonneg(std::norm(v[j]) * inv2, e) * v[j];
        });
    auto ga = as_complex(tp.adj(u0));
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += back[i];
  });
}

Var l2_norm(Var u, double cell_volume) { return sqrt(scale(sum_squares(u), cell_volume)); }

DifferentiableScalar differentiate(const ScalarProgram& program, std::span<const double> params) {
  auto tape = std::make_shared<Tape>();
  Var p = tape->leaf(std::vector<double>(params.begin(), params.end()));
  Var out = program(*tape, p);
  tape->check(out);
  if (out.size() != 1 || out.is_complex()) throw GradError("program must return a real scalar");
  DifferentiableScalar result;
  result.value = out.scalar();
  result.pullback = [tape, p, out](double cotangent) {
    tape->backward(out, cotangent);
    return tape->adjoint(p);
  };
  return result;
}

ValueAndGradient gradient(const ScalarProgram& program, std::span<const double> params) {
  auto ds = differentiate(program, params);
  return {ds.value, ds.pullback(1.0)};
}

}  // namespace strichartz::grad

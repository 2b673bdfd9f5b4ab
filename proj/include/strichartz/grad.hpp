#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "strichartz/quadrature.hpp"
#include "strichartz/spectral.hpp"

namespace strichartz::grad {

class Tape;

/// Handle to an array-valued node on a tape. Complex arrays are stored as
/// interleaved (re, im) pairs; their adjoints hold (dL/dre, dL/dim).
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  std::span<const double> value() const;
  std::span<const Complex> complex_value() const;
  /// Number of stored doubles.
  std::size_t size() const;
  /// Number of logical entries (size()/2 for complex nodes).
  std::size_t length() const;
  bool is_complex() const;
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Dynamically recorded program. Nodes are appended in evaluation order and
/// replayed in reverse by backward(). A tape belongs to one thread.
class Tape {
 public:
  /// Receives the tape and the adjoint of the node being replayed.
  using Backward = std::function<void(Tape&, std::span<const double> out_adjoint)>;

  Var leaf(std::vector<double> values);
  Var constant(std::vector<double> values, bool is_complex = false);
  Var complex_constant(std::span<const Complex> values);

  /// Seeds the adjoint of a scalar output and propagates to every node.
  /// Previous adjoints are cleared first.
  void backward(Var output, double seed = 1.0);

  /// Adjoint of a node after backward(); zeros if it received none.
  std::vector<double> adjoint(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

  // Building blocks for primitives.
  void check(Var v) const;
  Var record(std::vector<double> value, bool is_complex, std::initializer_list<Var> inputs, Backward backward);
  const std::vector<double>& val(Var v) const { return nodes_[v.id()].value; }
  std::vector<double>& adj(Var v);
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

 private:
  friend class Var;
  struct Node {
    std::vector<double> value;
    std::vector<double> adjoint;
    bool is_complex = false;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise arithmetic. Complex operands are allowed where the operation is
// complex-linear.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // real only
Var scale(Var a, double c);
Var add_constant(Var a, double c);  // real only
Var neg(Var a);
Var square(Var a);  // real only
Var sqrt(Var a);    // real only
Var pow(Var a, double p);  // real, a >= 0; derivative 0 at a = 0 for p > 1
Var tanh(Var a);
Var exp(Var a);

/// Vector (real or complex) times a real scalar node.
Var mul_scalar(Var a, Var s);
/// Vector divided by a real scalar node; |s| < 1e-14 raises GradError.
Var divide_scalar(Var a, Var s);

// Reductions.
Var sum(Var a);                                       // real
Var sum_squares(Var a);                               // sum of squares; |z|^2 for complex
Var weighted_sum(Var a, std::span<const double> w);   // real
Var row_sums(Var a, std::size_t rows, std::size_t cols);  // real, row-major

// Indexing and layout.
Var slice(Var a, std::size_t offset, std::size_t count);  // real
Var pick(Var a, std::size_t index);                        // real scalar
Var pick_complex(Var a, std::size_t index);                // complex scalar
Var real_to_complex(Var a);
/// Reinterprets a real array of (re, im) pairs as complex.
Var pairs_to_complex(Var a);
Var complex_from_parts(Var re, Var im);
Var real_part(Var a);
Var imag_part(Var a);
Var abs_complex(Var a);               // |z|, derivative 0 at z = 0
Var abs_pow(Var a, double r);         // |z|^r (r >= 2) for complex or real a

// Layers.
/// x: batch x in, W: out x in, b: out (row-major); returns x W^T + b.
Var affine(Var x, Var W, Var b, std::size_t batch);
/// e^{-(s z)^2} sin(w z + b) with s = exp(log_s). Parameters hold either one
/// value per column of z (batch x width) or a single shared value.
Var wavelet(Var z, Var log_s, Var w, Var b, std::size_t batch);
/// Average of rows i and i + half for a (2 half) x cols array.
Var pair_average(Var y, std::size_t half, std::size_t cols);
/// A x for a fixed matrix A and real x.
Var linear_map(std::shared_ptr<const Eigen::MatrixXd> A, Var x);

// Spectral pipeline.
/// Complex DFT over a 1-D (n) or 2-D (n x n) array. Unitary scaling divides
/// by sqrt(size); otherwise forward is unscaled and inverse divides by size.
Var dft(Var a, std::size_t n, int rank, bool unitary = false);
Var idft(Var a, std::size_t n, int rank, bool unitary = false);
/// Full evolved field (M x N^d complex) of a complex datum.
Var evolve(Var u0, std::shared_ptr<const Evolver> evolver);
/// Mixed L^q_t L^r_x norm of a complex field on a grid, differentiated in the
/// same rescaled form used by the quadrature module.
Var mixed_norm(Var field, const SpaceTimeGrid& grid, const NormSpec& spec,
               QuadratureRule rule = QuadratureRule::Rectangle);
/// mixed_norm(evolve(u0)) in one primitive that never stores the field; the
/// pullback recomputes each slice. Always double precision.
Var evolved_mixed_norm(Var u0, std::shared_ptr<const Evolver> evolver, const NormSpec& spec,
                       QuadratureRule rule = QuadratureRule::Rectangle);
/// (cell sum |u|^2)^{1/2} of a complex or real array.
Var l2_norm(Var u, double cell_volume);

/// A scalar value together with its reverse-mode pullback. pullback(c)
/// returns c times the gradient with respect to the program parameters.
struct DifferentiableScalar {
  double value = 0.0;
  std::function<std::vector<double>(double)> pullback;
};

using ScalarProgram = std::function<Var(Tape&, Var params)>;

DifferentiableScalar differentiate(const ScalarProgram& program, std::span<const double> params);

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

ValueAndGradient gradient(const ScalarProgram& program, std::span<const double> params);

}  // namespace strichartz::grad

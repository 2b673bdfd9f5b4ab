#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace strichartz {

using Complex = std::complex<double>;

enum class PropagatorKind { Schrodinger, Airy };
enum class Precision { Double, Single };

const char* to_string(PropagatorKind kind);
PropagatorKind parse_propagator(const std::string& name);

/// Uniform lattice on [-R, R)^d x [-T, T) with M time samples and N spatial
/// samples per axis. Left endpoints are included, right endpoints excluded.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(double half_width, double half_time, std::size_t n, std::size_t m, int dim);

  double half_width() const { return R_; }
  double half_time() const { return T_; }
  std::size_t n() const { return N_; }
  std::size_t m() const { return M_; }
  int dim() const { return d_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }

  double x(std::size_t j) const { return -R_ + static_cast<double>(j) * dx_; }
  double t(std::size_t l) const { return -T_ + static_cast<double>(l) * dt_; }

  /// Angular frequencies of one axis in DFT storage order:
  /// 0, 1, ..., N/2-1, -N/2, ..., -1 times 2*pi/(2R).
  std::span<const double> frequencies() const { return xi_; }

  /// Number of spatial samples, N^d.
  std::size_t spatial_size() const { return d_ == 1 ? N_ : N_ * N_; }
  /// Flat index of the origin x = 0.
  std::size_t origin_index() const { return d_ == 1 ? N_ / 2 : (N_ / 2) * N_ + N_ / 2; }
  /// Spatial volume element dx^d.
  double cell_volume() const { return d_ == 1 ? dx_ : dx_ * dx_; }

  /// One-dimensional sample positions x_0 .. x_{N-1}.
  std::vector<double> positions() const;

  bool operator==(const SpaceTimeGrid& other) const;

 private:
  double R_, T_;
  std::size_t N_, M_;
  int d_;
  double dx_, dt_;
  std::vector<double> xi_;
};

SpaceTimeGrid make_grid(double half_width, double half_time, std::size_t n, std::size_t m, int dim);

/// Fourier symbol of the group at time t for a frequency vector (length d).
/// Schrodinger: exp(-i t |xi|^2). Airy (d = 1): exp(i t xi^3).
Complex symbol(PropagatorKind kind, double t, std::span<const double> xi);

/// Time x space samples of an evolved datum, row-major M x N^d.
class ComplexField {
 public:
  ComplexField(SpaceTimeGrid grid, std::vector<Complex> values);

  const SpaceTimeGrid& grid() const { return grid_; }
  std::span<const Complex> values() const { return values_; }
  std::span<const Complex> slice(std::size_t l) const;

 private:
  SpaceTimeGrid grid_;
  std::vector<Complex> values_;
};

/// Applies |xi|^gamma * symbol(t_l, xi) to a datum for every grid time, each
/// time computed directly from t = 0. Slices are produced in parallel but each
/// one is a deterministic function of its index.
class Evolver {
 public:
  Evolver(const SpaceTimeGrid& grid, PropagatorKind kind, double gamma,
          Precision precision = Precision::Double);

  const SpaceTimeGrid& grid() const { return grid_; }
  PropagatorKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  Precision precision() const { return precision_; }

  using SliceVisitor = std::function<void(std::size_t l, std::span<const Complex> slice)>;

  /// Calls visit(l, v(t_l)) once per time index, possibly concurrently.
  void for_each_slice(std::span<const Complex> u0, const SliceVisitor& visit) const;

  /// Full field; equivalent to collecting for_each_slice.
  ComplexField evolve(std::span<const Complex> u0) const;

  /// Adjoint of u0 -> field with respect to the real inner product
  /// Re<a, b> summed over all samples: returns sum_l E_l^H w_l.
  std::vector<Complex> adjoint(std::span<const Complex> cotangent) const;

  using CotangentFn =
      std::function<void(std::size_t l, std::span<const Complex> slice, std::span<Complex> cotangent)>;

  /// Recomputes each slice v_l in double precision, asks cot for dL/dv_l and
  /// returns sum_l E_l^H (dL/dv_l) without storing the field.
  std::vector<Complex> stream_pullback(std::span<const Complex> u0, const CotangentFn& cot) const;

 private:
  template <typename Real>
  void run_slices(std::span<const Complex> u0, const SliceVisitor& visit) const;
  template <typename Real>
  std::vector<Complex> run_adjoint(std::span<const Complex> cotangent) const;
  void check_datum(std::span<const Complex> u0) const;

  SpaceTimeGrid grid_;
  PropagatorKind kind_;
  double gamma_;
  Precision precision_;
  std::vector<double> omega_;       // phase rate per spatial frequency
  std::vector<double> multiplier_;  // |xi|^gamma per spatial frequency
};

/// One-shot evolution: values[l] = IDFT(|xi|^gamma symbol(t_l) DFT(u0)).
ComplexField evolve(std::span<const Complex> u0, const SpaceTimeGrid& grid, PropagatorKind kind,
                    double gamma, Precision precision = Precision::Double);

}  // namespace strichartz

#include "strichartz/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "strichartz/error.hpp"
#include "strichartz/fft.hpp"

namespace strichartz {
namespace {

// Slices in one chunk share a phase recurrence that is re-seeded exactly at
// every chunk start, so rounding drift stays at a few ulps.
constexpr std::size_t kChunk = 32;

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

bool all_finite(std::span<const Complex> v) {
  return std::all_of(v.begin(), v.end(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

}  // namespace

const char* to_string(PropagatorKind kind) {
  return kind == PropagatorKind::Airy ? "airy" : "schrodinger";
}

PropagatorKind parse_propagator(const std::string& name) {
  if (name == "airy") return PropagatorKind::Airy;
  if (name == "schrodinger") return PropagatorKind::Schrodinger;
  throw InvalidArgument("unknown propagator '" + name + "' (expected airy or schrodinger)");
}

SpaceTimeGrid::SpaceTimeGrid(double half_width, double half_time, std::size_t n, std::size_t m, int dim)
    : R_(half_width), T_(half_time), N_(n), M_(m), d_(dim) {
  if (!(half_width > 0) || !(half_time > 0) || !std::isfinite(half_width) || !std::isfinite(half_time))
    throw InvalidArgument("grid half-widths R and T must be positive and finite");
  if (!is_power_of_two(n)) throw InvalidArgument("spatial sample count N must be a power of two >= 2");
  if (m < 2) throw InvalidArgument("temporal sample count M must be >= 2");
  if (dim != 1 && dim != 2) throw InvalidArgument("spatial dimension must be 1 or 2");
  dx_ = 2.0 * R_ / static_cast<double>(N_);
  dt_ = 2.0 * T_ / static_cast<double>(M_);
  xi_.resize(N_);
  const double k0 = 2.0 * std::numbers::pi / (2.0 * R_);
  const auto half = static_cast<std::ptrdiff_t>(N_ / 2);
  for (std::size_t k = 0; k < N_; ++k) {
    auto signed_k = static_cast<std::ptrdiff_t>(k);
    if (signed_k >= half) signed_k -= static_cast<std::ptrdiff_t>(N_);
    xi_[k] = k0 * static_cast<double>(signed_k);
  }
}

std::vector<double> SpaceTimeGrid::positions() const {
  std::vector<double> xs(N_);
  for (std::size_t j = 0; j < N_; ++j) xs[j] = x(j);
  return xs;
}

bool SpaceTimeGrid::operator==(const SpaceTimeGrid& o) const {
  return R_ == o.R_ && T_ == o.T_ && N_ == o.N_ && M_ == o.M_ && d_ == o.d_;
}

SpaceTimeGrid make_grid(double half_width, double half_time, std::size_t n, std::size_t m, int dim) {
  return SpaceTimeGrid(half_width, half_time, n, m, dim);
}

Complex symbol(PropagatorKind kind, double t, std::span<const double> xi) {
  if (kind == PropagatorKind::Airy) {
    if (xi.size() != 1) throw InvalidArgument("the Airy symbol is one-dimensional");
    return std::polar(1.0, t * xi[0] * xi[0] * xi[0]);
  }
  double sq = 0.0;
  for (double k : xi) sq += k * k;
  return std::polar(1.0, -t * sq);
}

ComplexField::ComplexField(SpaceTimeGrid grid, std::vector<Complex> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.m() * grid_.spatial_size())
    throw InvalidArgument("field shape does not match its grid");
}

std::span<const Complex> ComplexField::slice(std::size_t l) const {
  const std::size_t s = grid_.spatial_size();
  return std::span<const Complex>(values_).subspan(l * s, s);
}

Evolver::Evolver(const SpaceTimeGrid& grid, PropagatorKind kind, double gamma, Precision precision)
    : grid_(grid), kind_(kind), gamma_(gamma), precision_(precision) {
  if (kind == PropagatorKind::Airy && grid.dim() != 1)
    throw InvalidArgument("the Airy group requires spatial dimension 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be finite and >= 0");

  const auto xi = grid.frequencies();
  const std::size_t n = grid.n();
  const std::size_t s = grid.spatial_size();
  omega_.resize(s);
  multiplier_.resize(s);
  auto fill = [&](std::size_t idx, double sq, double cube) {
    omega_[idx] = kind == PropagatorKind::Airy ? cube : -sq;
    if (gamma == 0.0)
      multiplier_[idx] = 1.0;
    else
      multiplier_[idx] = sq == 0.0 ? 0.0 : std::pow(std::sqrt(sq), gamma);
  };
  if (grid.dim() == 1) {
    for (std::size_t k = 0; k < n; ++k) fill(k, xi[k] * xi[k], xi[k] * xi[k] * xi[k]);
  } else {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) fill(a * n + b, xi[a] * xi[a] + xi[b] * xi[b], 0.0);
  }
}

void Evolver::check_datum(std::span<const Complex> u0) const {
  if (u0.size() != grid_.spatial_size()) throw InvalidArgument("datum size does not match the grid");
  if (!all_finite(u0)) throw NumericalError("datum contains non-finite samples");
}

template <typename Real>
void Evolver::run_slices(std::span<const Complex> u0, const SliceVisitor& visit) const {
  using C = std::complex<Real>;
  const std::size_t s = grid_.spatial_size();
  const int rank = grid_.dim();
  const fft::Plan<Real> forward(grid_.n(), rank, fft::Direction::Forward);
  const fft::Plan<Real> inverse(grid_.n(), rank, fft::Direction::Backward);

  fft::Buffer<Real> data(s), spectrum(s);
  for (std::size_t j = 0; j < s; ++j) data[j] = C(static_cast<Real>(u0[j].real()), static_cast<Real>(u0[j].imag()));
  forward.execute(data.data(), spectrum.data());
  const Real scale = Real(1) / static_cast<Real>(s);
  for (std::size_t k = 0; k < s; ++k) spectrum[k] *= static_cast<Real>(multiplier_[k]) * scale;

  const std::size_t m = grid_.m();
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, chunks), [&](const tbb::blocked_range<std::size_t>& r) {
    fft::Buffer<Real> work(s), out(s);
    std::vector<Complex> slice(s), step(s), cur(s);
    for (std::size_t c = r.begin(); c != r.end(); ++c) {
      const std::size_t l0 = c * kChunk;
      const std::size_t l1 = std::min(m, l0 + kChunk);
      const double t0 = grid_.t(l0);
      for (std::size_t k = 0; k < s; ++k) {
        cur[k] = std::polar(1.0, t0 * omega_[k]);
        step[k] = std::polar(1.0, grid_.dt() * omega_[k]);
      }
      for (std::size_t l = l0; l < l1; ++l) {
        for (std::size_t k = 0; k < s; ++k) {
          work[k] = spectrum[k] * C(static_cast<Real>(cur[k].real()), static_cast<Real>(cur[k].imag()));
          cur[k] *= step[k];
        }
        inverse.execute(work.data(), out.data());
        for (std::size_t j = 0; j < s; ++j) slice[j] = Complex(out[j].real(), out[j].imag());
        visit(l, slice);
      }
    }
  });
}

void Evolver::for_each_slice(std::span<const Complex> u0, const SliceVisitor& visit) const {
  check_datum(u0);
  if (precision_ == Precision::Single)
    run_slices<float>(u0, visit);
  else
    run_slices<double>(u0, visit);
}

ComplexField Evolver::evolve(std::span<const Complex> u0) const {
  const std::size_t s = grid_.spatial_size();
  std::vector<Complex> values(grid_.m() * s);
  for_each_slice(u0, [&](std::size_t l, std::span<const Complex> slice) {
    std::copy(slice.begin(), slice.end(), values.begin() + static_cast<std::ptrdiff_t>(l * s));
  });
  if (!all_finite(values)) throw NumericalError("evolution produced non-finite values");
  return ComplexField(grid_, std::move(values));
}

template <typename Real>
std::vector<Complex> Evolver::run_adjoint(std::span<const Complex> cotangent) const {
  using C = std::complex<Real>;
  const std::size_t s = grid_.spatial_size();
  const std::size_t m = grid_.m();
  const int rank = grid_.dim();
  const fft::Plan<Real> forward(grid_.n(), rank, fft::Direction::Forward);
  const fft::Plan<Real> inverse(grid_.n(), rank, fft::Direction::Backward);

  // E_l = F^{-1} D_l F with D_l diagonal, so E_l^H = F^{-1} conj(D_l) F. The
  // per-chunk spectral partial sums are combined in chunk order.
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<std::vector<std::complex<double>>> partial(chunks);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, chunks), [&](const tbb::blocked_range<std::size_t>& r) {
    fft::Buffer<Real> in(s), spec(s);
    for (std::size_t c = r.begin(); c != r.end(); ++c) {
      const std::size_t l0 = c * kChunk;
      const std::size_t l1 = std::min(m, l0 + kChunk);
      std::vector<std::complex<double>> acc(s), step(s), cur(s);
      const double t0 = grid_.t(l0);
      for (std::size_t k = 0; k < s; ++k) {
        cur[k] = std::polar(1.0, -t0 * omega_[k]);
        step[k] = std::polar(1.0, -grid_.dt() * omega_[k]);
      }
      for (std::size_t l = l0; l < l1; ++l) {
        const Complex* w = cotangent.data() + l * s;
        for (std::size_t j = 0; j < s; ++j) in[j] = C(static_cast<Real>(w[j].real()), static_cast<Real>(w[j].imag()));
        forward.execute(in.data(), spec.data());
        for (std::size_t k = 0; k < s; ++k) {
          acc[k] += std::complex<double>(spec[k].real(), spec[k].imag()) * cur[k];
          cur[k] *= step[k];
        }
      }
      partial[c] = std::move(acc);
    }
  });

  fft::Buffer<Real> total(s), out(s);
  std::vector<std::complex<double>> sum(s);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < s; ++k) sum[k] += p[k];
  const double scale = 1.0 / static_cast<double>(s);
  for (std::size_t k = 0; k < s; ++k) {
    const auto z = sum[k] * (multiplier_[k] * scale);
    total[k] = C(static_cast<Real>(z.real()), static_cast<Real>(z.imag()));
  }
  inverse.execute(total.data(), out.data());
  std::vector<Complex> result(s);
  for (std::size_t j = 0; j < s; ++j) result[j] = Complex(out[j].real(), out[j].imag());
  return result;
}

std::vector<Complex> Evolver::adjoint(std::span<const Complex> cotangent) const {
  if (cotangent.size() != grid_.m() * grid_.spatial_size())
    throw InvalidArgument("cotangent shape does not match the grid");
  return precision_ == Precision::Single ? run_adjoint<float>(cotangent) : run_adjoint<double>(cotangent);
}

std::vector<Complex> Evolver::stream_pullback(std::span<const Complex> u0, const CotangentFn& cot) const {
  check_datum(u0);
  const std::size_t s = grid_.spatial_size();
  const std::size_t m = grid_.m();
  const int rank = grid_.dim();
  const fft::Plan<double> forward(grid_.n(), rank, fft::Direction::Forward);
  const fft::Plan<double> inverse(grid_.n(), rank, fft::Direction::Backward);

  fft::Buffer<double> data(u0.begin(), u0.end()), spectrum(s);
  forward.execute(data.data(), spectrum.data());
  const double scale = 1.0 / static_cast<double>(s);
  for (std::size_t k = 0; k < s; ++k) spectrum[k] *= multiplier_[k] * scale;

  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<std::vector<Complex>> partial(chunks);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, chunks), [&](const tbb::blocked_range<std::size_t>& r) {
    fft::Buffer<double> work(s), slice(s), cotangent(s), spec(s);
    std::vector<Complex> step(s), cur(s);
    for (std::size_t c = r.begin(); c != r.end(); ++c) {
      const std::size_t l0 = c * kChunk;
      const std::size_t l1 = std::min(m, l0 + kChunk);
      const double t0 = grid_.t(l0);
      for (std::size_t k = 0; k < s; ++k) {
        cur[k] = std::polar(1.0, t0 * omega_[k]);
        step[k] = std::polar(1.0, grid_.dt() * omega_[k]);
      }
      std::vector<Complex> acc(s);
      for (std::size_t l = l0; l < l1; ++l) {
        for (std::size_t k = 0; k < s; ++k) work[k] = spectrum[k] * cur[k];
        inverse.execute(work.data(), slice.data());
        std::fill(cotangent.begin(), cotangent.end(), Complex{});
        cot(l, std::span<const Complex>(slice.data(), s), std::span<Complex>(cotangent.data(), s));
        forward.execute(cotangent.data(), spec.data());
        for (std::size_t k = 0; k < s; ++k) {
          acc[k] += spec[k] * std::conj(cur[k]);
          cur[k] *= step[k];
        }
      }
      partial[c] = std::move(acc);
    }
  });

  fft::Buffer<double> total(s), out(s);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < s; ++k) total[k] += p[k];
  for (std::size_t k = 0; k < s; ++k) total[k] *= multiplier_[k] * scale;
  inverse.execute(total.data(), out.data());
  return std::vector<Complex>(out.begin(), out.end());
}

ComplexField evolve(std::span<const Complex> u0, const SpaceTimeGrid& grid, PropagatorKind kind, double gamma,
                    Precision precision) {
  return Evolver(grid, kind, gamma, precision).evolve(u0);
}

}  // namespace strichartz

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <fftw3.h>

namespace strichartz::fft {

/// Minimal allocator returning FFTW-aligned storage so that plans made on
/// scratch buffers can be executed on any buffer of the same type.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename Real>
using Buffer = std::vector<std::complex<Real>, AlignedAllocator<std::complex<Real>>>;

enum class Direction { Forward, Backward };

/// Unnormalized complex DFT of a fixed shape (1-D of length n, or 2-D n x n),
/// in double or single precision. Plans are created once per shape and cached
/// process-wide; execute() is safe to call concurrently.
template <typename Real>
class Plan {
 public:
  Plan(std::size_t n, int rank, Direction dir);

  /// Out-of-place transform; in and out must not alias. Both buffers must
  /// hold size() elements and come from an AlignedAllocator.
  void execute(const std::complex<Real>* in, std::complex<Real>* out) const;

  std::size_t size() const { return total_; }

 private:
  void* handle_ = nullptr;  // fftw_plan or fftwf_plan, owned by the cache
  std::size_t total_ = 0;
};

template <>
Plan<double>::Plan(std::size_t n, int rank, Direction dir);
template <>
Plan<float>::Plan(std::size_t n, int rank, Direction dir);
template <>
void Plan<double>::execute(const std::complex<double>* in, std::complex<double>* out) const;
template <>
void Plan<float>::execute(const std::complex<float>* in, std::complex<float>* out) const;

}  // namespace strichartz::fft

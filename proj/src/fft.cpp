#include "strichartz/fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace strichartz::fft {
namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<std::size_t, int, int>, fftw_plan> doubles;
  std::map<std::tuple<std::size_t, int, int>, fftwf_plan> singles;

  ~PlanCache() {
    for (auto& [k, p] : doubles) fftw_destroy_plan(p);
    for (auto& [k, p] : singles) fftwf_destroy_plan(p);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

template <>
Plan<double>::Plan(std::size_t n, int rank, Direction dir) {
  total_ = rank == 1 ? n : n * n;
  const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto key = std::make_tuple(n, rank, sign);
  auto it = c.doubles.find(key);
  if (it == c.doubles.end()) {
    Buffer<double> a(total_), b(total_);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const int ni = static_cast<int>(n);
    fftw_plan p = rank == 1 ? fftw_plan_dft_1d(ni, in, out, sign, FFTW_ESTIMATE)
                            : fftw_plan_dft_2d(ni, ni, in, out, sign, FFTW_ESTIMATE);
    it = c.doubles.emplace(key, p).first;
  }
  handle_ = it->second;
}

template <>
Plan<float>::Plan(std::size_t n, int rank, Direction dir) {
  total_ = rank == 1 ? n : n * n;
  const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto key = std::make_tuple(n, rank, sign);
  auto it = c.singles.find(key);
  if (it == c.singles.end()) {
    Buffer<float> a(total_), b(total_);
    auto* in = reinterpret_cast<fftwf_complex*>(a.data());
    auto* out = reinterpret_cast<fftwf_complex*>(b.data());
    const int ni = static_cast<int>(n);
    fftwf_plan p = rank == 1 ? fftwf_plan_dft_1d(ni, in, out, sign, FFTW_ESTIMATE)
                             : fftwf_plan_dft_2d(ni, ni, in, out, sign, FFTW_ESTIMATE);
    it = c.singles.emplace(key, p).first;
  }
  handle_ = it->second;
}

template <>
void Plan<double>::execute(const std::complex<double>* in, std::complex<double>* out) const {
  // FFTW never writes to the input of an out-of-place complex DFT.
  fftw_execute_dft(static_cast<fftw_plan>(handle_),
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

template <>
void Plan<float>::execute(const std::complex<float>* in, std::complex<float>* out) const {
  fftwf_execute_dft(static_cast<fftwf_plan>(handle_),
                    reinterpret_cast<fftwf_complex*>(const_cast<std::complex<float>*>(in)),
                    reinterpret_cast<fftwf_complex*>(out));
}

}  // namespace strichartz::fft

#ifndef PMF_FFT_HPP
#define PMF_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace pmf::detail {

/// Process-wide cache of FFTW plans keyed by (rank, n, sign).
///
/// Planning is serialized behind a mutex; execution goes through the
/// new-array interface, which FFTW documents as thread-safe. Plans are made
/// with FFTW_UNALIGNED so any std::vector storage can be handed in.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

  fftw_plan get(int rank, int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(rank, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(rank), n);
    std::size_t total = 1;
    for (int i = 0; i < rank; ++i) total *= static_cast<std::size_t>(n);
    std::vector<std::complex<double>> in(total), out(total);
    fftw_plan p = fftw_plan_dft(rank, dims.data(), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

/// Unnormalized complex DFT over a rank-dimensional n^rank cube, row-major.
inline void dft(int rank, int n, int sign, const std::vector<std::complex<double>>& in,
                std::vector<std::complex<double>>& out) {
  out.resize(in.size());
  fftw_plan p = FftPlanCache::instance().get(rank, n, sign);
  // FFTW does not write through `in` for out-of-place c2c plans.
  auto* src = const_cast<std::complex<double>*>(in.data());
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(src),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace pmf::detail

#endif

#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "qpos/error.hpp"

namespace qpos::detail {

// FFTW planning is not thread-safe, execution is. Plans are created once per
// (shape, direction) with FFTW_ESTIMATE | FFTW_UNALIGNED so the executed code
// path never depends on buffer alignment, which keeps results bit-stable.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(const std::vector<int>& shape, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(shape, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::size_t total = 1;
    for (int s : shape) total *= static_cast<std::size_t>(s);
    auto* scratch = fftw_alloc_complex(total);
    fftw_plan p = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), scratch, scratch, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (p == nullptr) throw Error(Errc::invariant_violation, "FFTW failed to create a plan");
    plans_.emplace(std::move(key), p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlanCache() = default;

  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

// Unnormalized in-place multi-dimensional DFT over a row-major array.
inline void fft_in_place(std::vector<std::complex<double>>& data, const std::vector<int>& shape,
                         int sign) {
  fftw_plan p = FftPlanCache::instance().plan(shape, sign);
  auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, buffer, buffer);
}

}  // namespace qpos::detail

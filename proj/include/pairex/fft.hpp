#pragma once

#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "pairex/common.hpp"

namespace pairex::detail {

// Thin cache around FFTW plans. Plans are created once per (dims, sign) with
// FFTW_ESTIMATE so the chosen algorithm does not depend on runtime timings;
// execution uses the new-array interface and is safe on distinct buffers.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  // In-place transform of `data` viewed as a row-major array of `dims`.
  // sign = FFTW_FORWARD or FFTW_BACKWARD; no normalization applied.
  void transform(const std::vector<int>& dims, int sign, cd* data) {
    fftw_plan plan = get(dims, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
  }

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const std::vector<int>& dims, int sign) {
    std::scoped_lock lock(mutex_);
    auto key = std::make_pair(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cd> scratch(total(dims));
    fftw_plan plan = fftw_plan_dft(
        static_cast<int>(dims.size()), dims.data(),
        reinterpret_cast<fftw_complex*>(scratch.data()),
        reinterpret_cast<fftw_complex*>(scratch.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  static std::size_t total(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

inline void fft_nd(const std::vector<int>& dims, int sign, cd* data) {
  FftPlans::instance().transform(dims, sign, data);
}

}  // namespace pairex::detail

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace tfsplat::detail {
namespace {

enum class Kind { kR2C, kC2R, kForward, kBackward };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Kind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<double> real(n);
    std::vector<fftw_complex> spec(n);
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::kR2C:
        plan = fftw_plan_dft_r2c_1d(len, real.data(), spec.data(), flags);
        break;
      case Kind::kC2R:
        plan = fftw_plan_dft_c2r_1d(len, spec.data(), real.data(), flags);
        break;
      case Kind::kForward:
      case Kind::kBackward: {
        std::vector<fftw_complex> out(n);
        plan = fftw_plan_dft_1d(len, spec.data(), out.data(),
                                kind == Kind::kForward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        break;
      }
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<Kind, std::size_t>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void rfft(const double* in, std::complex<double>* out, std::size_t n) {
  fftw_plan plan = cache().get(Kind::kR2C, n);
  fftw_execute_dft_r2c(plan, const_cast<double*>(in), as_fftw(out));
}

void irfft(const std::complex<double>* in, double* out, std::size_t n) {
  fftw_plan plan = cache().get(Kind::kC2R, n);
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in, in + n / 2 + 1);
  fftw_execute_dft_c2r(plan, as_fftw(scratch.data()), out);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

void cfft(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0) return;
  fftw_plan plan = cache().get(inverse ? Kind::kBackward : Kind::kForward, n);
  std::vector<std::complex<double>> out(n);
  fftw_execute_dft(plan, as_fftw(data.data()), as_fftw(out.data()));
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
  }
  data.swap(out);
}

}  // namespace tfsplat::detail

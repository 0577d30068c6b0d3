#include "pcaet/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace pcaet {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new arrays is.
// Plans are in-place and unaligned so they can run on any std::vector buffer.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int nx, int ny, int nz, FftDirection dir) {
    const auto key = std::make_tuple(nx, ny, nz, dir == FftDirection::Forward);
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int sign = dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nz == 1 ? fftw_plan_dft_2d(ny, nx, buf, buf, sign, flags)
                             : fftw_plan_dft_3d(nz, ny, nx, buf, buf, sign, flags);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void check_finite(const WaveField& f) {
  if (!f.all_finite()) throw NumericalError("non-finite field");
}

}  // namespace

void fft2_inplace(std::span<Complex> data, int nx, int ny, FftDirection dir) {
  auto plan = cache().get(nx, ny, 1, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

void fft3_inplace(std::span<Complex> data, int nx, int ny, int nz, FftDirection dir) {
  auto plan = cache().get(nx, ny, nz, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

WaveField forward_fft(const WaveField& f) {
  check_finite(f);
  WaveField out = f;
  fft2_inplace(out.values, f.grid.nx, f.grid.ny, FftDirection::Forward);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.size()));
  for (auto& v : out.values) v *= scale;
  return out;
}

WaveField inverse_fft(const WaveField& spectrum) {
  check_finite(spectrum);
  WaveField out = spectrum;
  fft2_inplace(out.values, spectrum.grid.nx, spectrum.grid.ny, FftDirection::Inverse);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spectrum.size()));
  for (auto& v : out.values) v *= scale;
  return out;
}

}  // namespace pcaet

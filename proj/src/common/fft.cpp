#include "qsense/common/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "qsense/common/errors.hpp"

namespace qsense::fft {
namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex plan_mutex;

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex);
  auto& entry = cache[n];
  if (!entry.forward) {
    double* r = fftw_alloc_real(n);
    fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
    entry.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r, c, FFTW_ESTIMATE);
    entry.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, r, FFTW_ESTIMATE);
    fftw_free(r);
    fftw_free(c);
  }
  return entry;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<std::complex<double>> forward_real(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("fft: need at least 2 samples");
  auto& plan = plans_for(n);
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(n / 2 + 1));
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute_dft_r2c(plan.forward, in.get(), out.get());
  std::vector<std::complex<double>> result(n / 2 + 1);
  for (std::size_t k = 0; k < result.size(); ++k) result[k] = {out.get()[k][0], out.get()[k][1]};
  return result;
}

std::vector<double> inverse_real(std::span<const std::complex<double>> half, std::size_t n) {
  if (n < 2 || half.size() != n / 2 + 1) throw ArgumentError("fft: spectrum size mismatch");
  auto& plan = plans_for(n);
  std::unique_ptr<fftw_complex, FftwFree> in(fftw_alloc_complex(n / 2 + 1));
  std::unique_ptr<double, FftwFree> out(fftw_alloc_real(n));
  for (std::size_t k = 0; k < half.size(); ++k) {
    in.get()[k][0] = half[k].real();
    in.get()[k][1] = half[k].imag();
  }
  fftw_execute_dft_c2r(plan.inverse, in.get(), out.get());
  return std::vector<double>(out.get(), out.get() + n);
}

}  // namespace qsense::fft

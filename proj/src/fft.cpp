#include "vibci/fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

#include "vibci/error.hpp"

namespace vibci {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw ValidationError("FFT length must be positive");
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(n);
  plans_->spectrum = fftw_alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  plans_->forward = fftw_plan_dft_r2c_1d(len, plans_->real, plans_->spectrum, FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(len, plans_->spectrum, plans_->real, FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->inverse) throw Error("FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> input, std::span<std::complex<double>> output) {
  std::copy(input.begin(), input.end(), plans_->real);
  fftw_execute(plans_->forward);
  for (std::size_t k = 0; k < bins(); ++k)
    output[k] = {plans_->spectrum[k][0], plans_->spectrum[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> input, std::span<double> output) {
  for (std::size_t k = 0; k < bins(); ++k) {
    plans_->spectrum[k][0] = input[k].real();
    plans_->spectrum[k][1] = input[k].imag();
  }
  fftw_execute(plans_->inverse);
  std::copy(plans_->real, plans_->real + n_, output.begin());
}

}  // namespace vibci

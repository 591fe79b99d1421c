#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace vibci {

/// Real-to-complex and complex-to-real transforms of a fixed length, backed
/// by FFTW. Unnormalized in both directions (inverse(forward(x)) == n * x).
/// An instance is not safe for concurrent use; separate instances are.
class RealFft {
public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// `input.size() == size()`, `output.size() == bins()`.
  void forward(std::span<const double> input, std::span<std::complex<double>> output);
  /// `input.size() == bins()`, `output.size() == size()`.
  void inverse(std::span<const std::complex<double>> input, std::span<double> output);

private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace vibci

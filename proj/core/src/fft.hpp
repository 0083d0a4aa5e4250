#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace spectralds::detail {

std::size_t next_pow2(std::size_t n);

// Real-to-complex transform pair of a fixed length with owned buffers.
// Not thread-safe per instance; plan creation is serialised internally.
template <typename Real>
class RealFft {
public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // Zero-pads `in` (length len <= size) and writes bins() coefficients.
  void forward(const Real* in, std::size_t len, std::complex<Real>* out);
  // Unnormalised inverse scaled by 1/size; writes the first len samples.
  void inverse(const std::complex<Real>* in, Real* out, std::size_t len);

private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

extern template class RealFft<double>;
extern template class RealFft<long double>;

// First T samples of the causal convolution of x with each filter.
// filters are rows of a row-major (count x filter_len) array.
void causal_convolve_bank(const double* x, std::size_t T, const double* filters,
                          std::size_t count, std::size_t filter_len, double* out,
                          std::size_t out_stride);

}  // namespace spectralds::detail

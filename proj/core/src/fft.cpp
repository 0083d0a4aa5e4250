#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace spectralds::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

template <typename Real>
struct FftwApi;

template <>
struct FftwApi<double> {
  using Complex = fftw_complex;
  using Plan = fftw_plan;
  static double* alloc_real(std::size_t n) { return fftw_alloc_real(n); }
  static Complex* alloc_complex(std::size_t n) { return fftw_alloc_complex(n); }
  static Plan r2c(int n, double* in, Complex* out) {
    return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan c2r(int n, Complex* in, double* out) {
    return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void execute(Plan p) { fftw_execute(p); }
  static void destroy(Plan p) { fftw_destroy_plan(p); }
  static void release(void* p) { fftw_free(p); }
};

template <>
struct FftwApi<long double> {
  using Complex = fftwl_complex;
  using Plan = fftwl_plan;
  static long double* alloc_real(std::size_t n) {
    return static_cast<long double*>(fftwl_malloc(sizeof(long double) * n));
  }
  static Complex* alloc_complex(std::size_t n) {
    return static_cast<Complex*>(fftwl_malloc(sizeof(Complex) * n));
  }
  static Plan r2c(int n, long double* in, Complex* out) {
    return fftwl_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan c2r(int n, Complex* in, long double* out) {
    return fftwl_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void execute(Plan p) { fftwl_execute(p); }
  static void destroy(Plan p) { fftwl_destroy_plan(p); }
  static void release(void* p) { fftwl_free(p); }
};

template <typename Real>
struct RealFft<Real>::Impl {
  using Api = FftwApi<Real>;
  Real* real = nullptr;
  typename Api::Complex* spec = nullptr;
  typename Api::Plan fwd = nullptr;
  typename Api::Plan inv = nullptr;
};

template <typename Real>
RealFft<Real>::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
  using Api = FftwApi<Real>;
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->real = Api::alloc_real(size);
  impl_->spec = Api::alloc_complex(size / 2 + 1);
  const int n = static_cast<int>(size);
  impl_->fwd = Api::r2c(n, impl_->real, impl_->spec);
  impl_->inv = Api::c2r(n, impl_->spec, impl_->real);
  if (!impl_->fwd || !impl_->inv) throw std::runtime_error("fftw planning failed");
}

template <typename Real>
RealFft<Real>::~RealFft() {
  using Api = FftwApi<Real>;
  std::lock_guard<std::mutex> lock(planner_mutex());
  Api::destroy(impl_->fwd);
  Api::destroy(impl_->inv);
  Api::release(impl_->real);
  Api::release(impl_->spec);
}

template <typename Real>
void RealFft<Real>::forward(const Real* in, std::size_t len, std::complex<Real>* out) {
  std::copy(in, in + len, impl_->real);
  std::fill(impl_->real + len, impl_->real + size_, Real(0));
  FftwApi<Real>::execute(impl_->fwd);
  auto* spec = reinterpret_cast<std::complex<Real>*>(impl_->spec);
  std::copy(spec, spec + bins(), out);
}

template <typename Real>
void RealFft<Real>::inverse(const std::complex<Real>* in, Real* out, std::size_t len) {
  std::copy(in, in + bins(), reinterpret_cast<std::complex<Real>*>(impl_->spec));
  FftwApi<Real>::execute(impl_->inv);
  const Real scale = Real(1) / static_cast<Real>(size_);
  for (std::size_t i = 0; i < len; ++i) out[i] = impl_->real[i] * scale;
}

template class RealFft<double>;
template class RealFft<long double>;

void causal_convolve_bank(const double* x, std::size_t T, const double* filters,
                          std::size_t count, std::size_t filter_len, double* out,
                          std::size_t out_stride) {
  const std::size_t taps = std::min(T, filter_len);
  RealFft<double> fft(next_pow2(2 * T));
  const std::size_t bins = fft.bins();
  std::vector<std::complex<double>> xs(bins), fs(bins), prod(bins);
  std::vector<double> y(T);
  fft.forward(x, T, xs.data());
  for (std::size_t j = 0; j < count; ++j) {
    fft.forward(filters + j * filter_len, taps, fs.data());
    for (std::size_t b = 0; b < bins; ++b) prod[b] = xs[b] * fs[b];
    fft.inverse(prod.data(), y.data(), T);
    for (std::size_t t = 0; t < T; ++t) out[t * out_stride + j] = y[t];
  }
}

}  // namespace spectralds::detail

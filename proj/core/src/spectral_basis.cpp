#include "spectralds/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <vector>

#include "fft.hpp"
#include "linalg.hpp"
#include "spectralds/error.hpp"
#include "spectralds/parallel.hpp"

namespace spectralds {

namespace {

template <typename Real>
Real hankel_value(std::size_t s) {
  if (s < (std::size_t{1} << 20)) {
    const std::uint64_t s64 = s;
    return Real(2) / static_cast<Real>(s64 * s64 * s64 - s64);
  }
  const Real sr = static_cast<Real>(s);
  return Real(2) / (sr * sr * sr - sr);
}

void check_spec(const HankelSpec& spec) {
  if (spec.L < 2) throw DomainError("Hankel size L must be at least 2");
}

// Z v as the convolution of g(s), s = 2..2L, with v reversed.
template <typename Real>
class FftHankel {
public:
  explicit FftHankel(std::size_t L)
      : L_(L), fft_(detail::next_pow2(2 * L - 1)), g_hat_(fft_.bins()), work_(fft_.bins()),
        buf_(fft_.size()) {
    std::vector<Real> g(2 * L - 1);
    for (std::size_t p = 0; p < g.size(); ++p) g[p] = hankel_value<Real>(p + 2);
    fft_.forward(g.data(), g.size(), g_hat_.data());
  }

  void apply(const Real* v, Real* out) {
    for (std::size_t q = 0; q < L_; ++q) buf_[q] = v[L_ - 1 - q];
    fft_.forward(buf_.data(), L_, work_.data());
    for (std::size_t b = 0; b < work_.size(); ++b) work_[b] *= g_hat_[b];
    fft_.inverse(work_.data(), buf_.data(), 2 * L_ - 1);
    for (std::size_t i = 0; i < L_; ++i) out[i] = buf_[i + L_ - 1];
  }

private:
  std::size_t L_;
  detail::RealFft<Real> fft_;
  std::vector<std::complex<Real>> g_hat_, work_;
  std::vector<Real> buf_;
};

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

LMatrix orthonormal_columns(const LMatrix& a) {
  Eigen::HouseholderQR<LMatrix> qr(a);
  return qr.householderQ() * LMatrix::Identity(a.rows(), a.cols());
}

SpectralBasis dense_basis(const HankelSpec& spec, std::size_t k) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hankel_matrix(spec));
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
  const auto L = static_cast<Eigen::Index>(spec.L);
  SpectralBasis basis;
  basis.L = spec.L;
  basis.k = k;
  basis.sigma.resize(static_cast<Eigen::Index>(k));
  basis.phi.resize(static_cast<Eigen::Index>(k), L);
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::Index col = L - 1 - static_cast<Eigen::Index>(j);
    basis.sigma[static_cast<Eigen::Index>(j)] = solver.eigenvalues()[col];
    basis.phi.row(static_cast<Eigen::Index>(j)) = solver.eigenvectors().col(col).transpose();
  }
  return basis;
}

// Block subspace iteration with Rayleigh-Ritz, carried out in extended precision so
// that filters with eigenvalues many orders below sigma_1 stay accurate.
SpectralBasis iterative_basis(const HankelSpec& spec, std::size_t k, const BasisOptions& options) {
  const std::size_t L = spec.L;
  const std::size_t p = std::min(L, k + options.oversample);
  const auto Li = static_cast<Eigen::Index>(L);
  const auto pi = static_cast<Eigen::Index>(p);

  std::mt19937_64 rng(0x5eedf11e75ULL ^ L);
  std::normal_distribution<double> normal;
  LMatrix q(Li, pi);
  for (Eigen::Index c = 0; c < pi; ++c)
    for (Eigen::Index r = 0; r < Li; ++r) q(r, c) = normal(rng);
  q = orthonormal_columns(q);

  const std::size_t workers = std::max<std::size_t>(1, std::min(thread_count(), p));
  auto apply_block = [&](const LMatrix& in, LMatrix& out) {
    out.resize(in.rows(), in.cols());
    parallel_for(workers, [&](std::size_t w) {
      FftHankel<long double> op(L);
      for (std::size_t c = w; c < p; c += workers)
        op.apply(in.col(static_cast<Eigen::Index>(c)).data(),
                 out.col(static_cast<Eigen::Index>(c)).data());
    });
  };

  LMatrix y, x, zx;
  LVector theta;
  long double best = std::numeric_limits<long double>::infinity();
  std::size_t stalls = 0;
  std::size_t iter = 0;
  std::vector<long double> rel(k);
  for (; iter < options.max_iterations; ++iter) {
    apply_block(q, y);
    LMatrix h = q.transpose() * y;
    h = (0.5L * (h + h.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<LMatrix> ritz(h);
    if (ritz.info() != Eigen::Success) throw ConvergenceError("Rayleigh-Ritz step failed");
    LMatrix w = ritz.eigenvectors().rowwise().reverse();
    theta = ritz.eigenvalues().reverse();
    x = q * w;
    zx = y * w;

    long double worst = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      const long double r = (zx.col(ji) - theta[ji] * x.col(ji)).norm();
      rel[j] = r / std::max(std::abs(theta[ji]), std::numeric_limits<long double>::min());
      worst = std::max(worst, rel[j]);
    }
    if (worst < 1e-17L) break;
    if (worst < 0.5L * best) {
      best = worst;
      stalls = 0;
    } else if (++stalls >= 3 && iter >= 4) {
      break;
    }
    q = orthonormal_columns(zx);
  }

  SpectralBasis basis;
  basis.L = L;
  basis.k = k;
  basis.sigma.resize(static_cast<Eigen::Index>(k));
  basis.phi.resize(static_cast<Eigen::Index>(k), Li);
  for (std::size_t j = 0; j < k; ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    basis.sigma[ji] = static_cast<double>(theta[ji]);
    LVector v = x.col(ji) / x.col(ji).norm();
    basis.phi.row(ji) = v.cast<double>().transpose();
  }

  const double sigma1 = basis.sigma[0];
  Vector residuals = eigen_residuals(basis);
  if (iter == options.max_iterations || residuals.maxCoeff() > 1e-6 * sigma1) {
    std::ostringstream msg;
    msg << "subspace iteration did not converge after " << iter << " iterations; residuals:";
    for (Eigen::Index j = 0; j < residuals.size(); ++j) msg << ' ' << residuals[j];
    throw ConvergenceError(msg.str());
  }
  return basis;
}

}  // namespace

double hankel_entry(std::size_t i, std::size_t j) {
  if (i < 1 || j < 1) throw DomainError("Hankel indices are 1-based");
  return hankel_value<double>(i + j);
}

Matrix hankel_matrix(const HankelSpec& spec) {
  check_spec(spec);
  const auto L = static_cast<Eigen::Index>(spec.L);
  Matrix z(L, L);
  for (Eigen::Index c = 0; c < L; ++c)
    for (Eigen::Index r = 0; r < L; ++r)
      z(r, c) = hankel_value<double>(static_cast<std::size_t>(r + c + 2));
  return z;
}

Vector hankel_matvec_dense(const HankelSpec& spec, const Vector& v) {
  check_spec(spec);
  if (static_cast<std::size_t>(v.size()) != spec.L)
    throw DimensionError("hankel_matvec: vector length does not match L");
  const auto L = static_cast<Eigen::Index>(spec.L);
  Vector out = Vector::Zero(L);
  for (Eigen::Index r = 0; r < L; ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < L; ++c)
      acc += hankel_value<double>(static_cast<std::size_t>(r + c + 2)) * v[c];
    out[r] = acc;
  }
  return out;
}

Vector hankel_matvec_fft(const HankelSpec& spec, const Vector& v) {
  check_spec(spec);
  if (static_cast<std::size_t>(v.size()) != spec.L)
    throw DimensionError("hankel_matvec: vector length does not match L");
  FftHankel<double> op(spec.L);
  Vector out(v.size());
  op.apply(v.data(), out.data());
  return out;
}

Vector hankel_matvec(const HankelSpec& spec, const Vector& v, std::size_t dense_threshold) {
  return spec.L <= dense_threshold ? hankel_matvec_dense(spec, v) : hankel_matvec_fft(spec, v);
}

SpectralBasis compute_basis(const HankelSpec& spec, std::size_t k, const BasisOptions& options) {
  check_spec(spec);
  if (k < 1 || k > spec.L) throw DomainError("compute_basis requires 1 <= k <= L");
  SpectralBasis basis =
      spec.L <= options.dense_threshold ? dense_basis(spec, k) : iterative_basis(spec, k, options);
  for (std::size_t j = 0; j < k; ++j) detail::fix_sign(basis.phi.row(static_cast<Eigen::Index>(j)));
  return basis;
}

Vector negate_filter(const Vector& phi_j) {
  Vector out = phi_j;
  for (Eigen::Index i = 1; i < out.size(); i += 2) out[i] = -out[i];
  return out;
}

Vector eigen_residuals(const SpectralBasis& basis) {
  HankelSpec spec{basis.L};
  Vector out(static_cast<Eigen::Index>(basis.k));
  parallel_for(basis.k, [&](std::size_t j) {
    const auto ji = static_cast<Eigen::Index>(j);
    Vector phi = basis.phi.row(ji).transpose();
    Vector zphi = hankel_matvec(spec, phi);
    out[ji] = (zphi - basis.sigma[ji] * phi).norm();
  });
  return out;
}

}  // namespace spectralds

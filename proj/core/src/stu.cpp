#include "spectralds/stu.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fft.hpp"
#include "spectralds/error.hpp"
#include "spectralds/parallel.hpp"
#include "spectralds/rng.hpp"
#include "stu_fit.hpp"

namespace spectralds {

namespace detail {

RowMatrix stacked_filters(const SpectralBasis& basis) {
  const auto k = static_cast<Eigen::Index>(basis.k);
  RowMatrix f(2 * k, basis.phi.cols());
  f.topRows(k) = basis.phi;
  for (Eigen::Index j = 0; j < k; ++j)
    f.row(k + j) = negate_filter(basis.phi.row(j).transpose()).transpose();
  return f;
}

ImpulseFitter::ImpulseFitter(const SpectralBasis& basis) : stacked_(stacked_filters(basis)) {
  Matrix gram = stacked_ * stacked_.transpose();
  gram.diagonal().array() += kFitRidge;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  condition_ = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  ldlt_.compute(gram);
}

Vector ImpulseFitter::solve(const Vector& target) const {
  if (target.size() != stacked_.cols())
    throw DimensionError("impulse fit: target length must equal basis L");
  return ldlt_.solve(stacked_ * target);
}

Vector ImpulseFitter::reconstruct(const Vector& coeffs) const {
  return stacked_.transpose() * coeffs;
}

}  // namespace detail

namespace {

// Coefficients as one m x (2k n) matrix; column j*n + c pairs filter j with input c,
// filters 0..k-1 positive and k..2k-1 negative.
Matrix concat_coefficients(const StuParams& params) {
  const Eigen::Index m = static_cast<Eigen::Index>(params.m());
  const Eigen::Index n = static_cast<Eigen::Index>(params.n());
  const Eigen::Index k = static_cast<Eigen::Index>(params.k);
  Matrix out(m, 2 * k * n);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.middleCols(j * n, n) = params.m_plus[static_cast<std::size_t>(j)];
    out.middleCols((k + j) * n, n) = params.m_minus[static_cast<std::size_t>(j)];
  }
  return out;
}

StuParams split_coefficients(const Matrix& cat, std::size_t k, std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  StuParams params = StuParams::zeros(k, static_cast<std::size_t>(cat.rows()), n);
  for (std::size_t j = 0; j < k; ++j) {
    params.m_plus[j] = cat.middleCols(static_cast<Eigen::Index>(j) * ni, ni);
    params.m_minus[j] = cat.middleCols(static_cast<Eigen::Index>(k + j) * ni, ni);
  }
  return params;
}

void check_basis(const StuParams& params, const SpectralBasis& basis) {
  params.validate();
  if (params.k != basis.k) throw DimensionError("StuParams k does not match the basis");
}

// T x (2k n) row-major view of both projection tensors side by side.
RowMatrix projection_matrix(const Projections& proj) {
  const auto T = static_cast<Eigen::Index>(proj.u_plus.dim0());
  const auto width = static_cast<Eigen::Index>(proj.u_plus.dim1() * proj.u_plus.dim2());
  RowMatrix out(T, 2 * width);
  out.leftCols(width) = Eigen::Map<const RowMatrix>(proj.u_plus.data(), T, width);
  out.rightCols(width) = Eigen::Map<const RowMatrix>(proj.u_minus.data(), T, width);
  return out;
}

}  // namespace

std::size_t StuParams::m() const { return m_plus.empty() ? 0 : static_cast<std::size_t>(m_plus[0].rows()); }
std::size_t StuParams::n() const { return m_plus.empty() ? 0 : static_cast<std::size_t>(m_plus[0].cols()); }

void StuParams::validate() const {
  if (m_plus.size() != k || m_minus.size() != k)
    throw DimensionError("StuParams: expected k positive and k negative coefficient matrices");
  const auto mm = static_cast<Eigen::Index>(m());
  const auto nn = static_cast<Eigen::Index>(n());
  auto same = [&](const Matrix& a) { return a.rows() == mm && a.cols() == nn; };
  for (std::size_t j = 0; j < k; ++j)
    if (!same(m_plus[j]) || !same(m_minus[j]))
      throw DimensionError("StuParams: coefficient matrices must share (m, n)");
  if (ar) {
    if (ar->m_u.size() != 3) throw DimensionError("StuParams: autoregressive part needs 3 matrices");
    for (const auto& a : ar->m_u)
      if (!same(a)) throw DimensionError("StuParams: autoregressive matrices must share (m, n)");
  }
}

StuParams StuParams::zeros(std::size_t k, std::size_t m, std::size_t n) {
  StuParams p;
  p.k = k;
  const Matrix z = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  p.m_plus.assign(k, z);
  p.m_minus.assign(k, z);
  return p;
}

Projections project_inputs(const SpectralBasis& basis, const Sequence& u) {
  const std::size_t T = static_cast<std::size_t>(u.rows());
  const std::size_t n = static_cast<std::size_t>(u.cols());
  const std::size_t k = basis.k;
  if (T > basis.L) throw DimensionError("project_inputs: sequence longer than the filter length");
  Projections proj{Tensor3(T, k, n), Tensor3(T, k, n)};
  if (T == 0) return proj;
  const RowMatrix bank = detail::stacked_filters(basis);
  parallel_for(n, [&](std::size_t c) {
    Vector x = u.col(static_cast<Eigen::Index>(c));
    RowMatrix out(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(2 * k));
    detail::causal_convolve_bank(x.data(), T, bank.data(), 2 * k, basis.L, out.data(), 2 * k);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < k; ++j) {
        proj.u_plus(t, j, c) = out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        proj.u_minus(t, j, c) = out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k + j));
      }
  });
  return proj;
}

Sequence forward_nonar(const StuParams& params, const SpectralBasis& basis, const Sequence& u) {
  check_basis(params, basis);
  if (static_cast<std::size_t>(u.cols()) != params.n())
    throw DimensionError("forward_nonar: input dimension does not match the coefficients");
  const Projections proj = project_inputs(basis, u);
  return projection_matrix(proj) * concat_coefficients(params).transpose();
}

Sequence forward_ar(const StuParams& params, const SpectralBasis& basis, const Sequence& u) {
  check_basis(params, basis);
  if (!params.ar) throw DimensionError("forward_ar: autoregressive terms are missing");
  if (static_cast<std::size_t>(u.cols()) != params.n())
    throw DimensionError("forward_ar: input dimension does not match the coefficients");
  const ArTerms& ar = *params.ar;
  const Sequence spectral = forward_nonar(params, basis, u);
  const Eigen::Index T = u.rows();
  Sequence y = Sequence::Zero(T, static_cast<Eigen::Index>(params.m()));
  for (Eigen::Index t = 0; t < T; ++t) {
    // 0-based t corresponds to time t+1; lag-2 terms exist once t >= 2.
    if (t >= 2) {
      y.row(t) += spectral.row(t - 2);
      if (ar.y_feedback) y.row(t) += y.row(t - 2);
    }
    for (Eigen::Index i = 0; i < 3; ++i) {
      if (t - i < 0) break;
      y.row(t) += (ar.m_u[static_cast<std::size_t>(i)] * u.row(t - i).transpose()).transpose();
    }
  }
  return y;
}

ImpulseResponse stu_impulse(const StuParams& params, const SpectralBasis& basis, std::size_t L) {
  check_basis(params, basis);
  if (L > basis.L) throw DimensionError("stu_impulse: L exceeds the filter length");
  ImpulseResponse out(params.m(), params.n(), L);
  for (std::size_t t = 0; t < L; ++t) {
    auto tap = out.tap(t);
    const double sign = (t % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t j = 0; j < params.k; ++j) {
      const double phi = basis.phi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t));
      tap += phi * params.m_plus[j] + (sign * phi) * params.m_minus[j];
    }
  }
  return out;
}

Vector fit_scalar_impulse(const Vector& target, const SpectralBasis& basis) {
  return detail::ImpulseFitter(basis).solve(target);
}

StuFit fit_stu_to_impulse(const ImpulseResponse& target, const SpectralBasis& basis) {
  if (target.length() != basis.L)
    throw DimensionError("fit_stu_to_impulse: target length must equal basis L");
  const detail::ImpulseFitter fitter(basis);
  const std::size_t m = target.m(), n = target.n(), k = basis.k;
  StuFit fit{StuParams::zeros(k, m, n), 0.0, fitter.condition()};
  double sq = 0.0;
  for (std::size_t o = 0; o < m; ++o)
    for (std::size_t i = 0; i < n; ++i) {
      const Vector psi = target.channel(o, i);
      const Vector coeffs = fitter.solve(psi);
      for (std::size_t j = 0; j < k; ++j) {
        fit.params.m_plus[j](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) =
            coeffs[static_cast<Eigen::Index>(j)];
        fit.params.m_minus[j](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) =
            coeffs[static_cast<Eigen::Index>(k + j)];
      }
      sq += (fitter.reconstruct(coeffs) - psi).squaredNorm();
    }
  fit.residual = std::sqrt(sq);
  return fit;
}

IoFitResult fit_stu_to_lds_io(const DiagonalLds& lds, const SpectralBasis& basis,
                              const IoFitConfig& cfg) {
  lds.validate();
  const std::size_t T = cfg.seq_len == 0 ? basis.L : cfg.seq_len;
  if (T > basis.L) throw DimensionError("fit_stu_to_lds_io: seq_len exceeds the filter length");
  if (cfg.batches == 0) throw DomainError("fit_stu_to_lds_io: batches must be positive");
  const auto n = static_cast<Eigen::Index>(lds.n());
  const auto m = static_cast<Eigen::Index>(lds.m());
  const auto k2 = static_cast<Eigen::Index>(2 * basis.k);
  const auto Ti = static_cast<Eigen::Index>(T);

  // Row j of `window` maps a length-T input channel to the last projection of filter j.
  const RowMatrix bank = detail::stacked_filters(basis);
  RowMatrix window(k2, Ti);
  for (Eigen::Index t = 0; t < Ti; ++t) window.col(t) = bank.col(Ti - 1 - t);

  Matrix coeffs = Matrix::Zero(m, k2 * n);
  std::mt19937_64 rng = make_stream(cfg.seed, "stu-io-fit");
  std::normal_distribution<double> normal;
  IoFitResult result;
  result.best_mse = std::numeric_limits<double>::infinity();
  Sequence u(Ti, n);
  RowMatrix features(k2, n);
  const double scale = 1.0 / static_cast<double>(cfg.batches * static_cast<std::size_t>(m));

  for (std::size_t s = 0; s < cfg.steps; ++s) {
    Matrix grad = Matrix::Zero(m, k2 * n);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batches; ++b) {
      for (Eigen::Index t = 0; t < Ti; ++t)
        for (Eigen::Index c = 0; c < n; ++c) u(t, c) = normal(rng);
      const Sequence y = simulate(lds, u);
      features = window * u;
      const Eigen::Map<const Vector> flat(features.data(), k2 * n);
      const Vector residual = coeffs * flat - y.row(Ti - 1).transpose();
      loss += residual.squaredNorm();
      grad.noalias() += residual * flat.transpose();
    }
    const double mse = loss * scale;
    result.mse_history.push_back(mse);
    if (!std::isfinite(mse) || (s > 0 && mse > 10.0 * result.best_mse && mse > 1e-300)) {
      std::ostringstream msg;
      msg << "fit_stu_to_lds_io diverged at step " << s << ": mse " << mse << ", best "
          << result.best_mse << ", lr " << cfg.lr;
      throw DivergenceError(msg.str());
    }
    result.best_mse = std::min(result.best_mse, mse);
    coeffs -= (2.0 * cfg.lr * scale) * grad;
  }
  result.params = split_coefficients(coeffs, basis.k, lds.n());
  result.final_mse = result.mse_history.empty() ? 0.0 : result.mse_history.back();
  if (result.mse_history.empty()) result.best_mse = 0.0;
  return result;
}

}  // namespace spectralds

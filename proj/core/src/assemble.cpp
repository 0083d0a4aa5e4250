#include <cmath>

#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"

namespace spectralds {

namespace {

Matrix readout_block(const DistilledFilters& d) {
  return d.mtilde * (Vector::Ones(d.alphas.size()) - d.alphas).asDiagonal();
}

}  // namespace

DiagonalLds assemble_filter_lds(const DistilledFilters& distilled, bool with_negative) {
  const Eigen::Index h = distilled.alphas.size();
  const Eigen::Index k = distilled.mtilde.rows();
  if (distilled.mtilde.cols() != h) throw DimensionError("distilled filters: mtilde must be k x h");
  const Matrix g = readout_block(distilled);
  DiagonalLds lds;
  if (!with_negative) {
    lds.alpha = distilled.alphas;
    lds.b = Matrix::Ones(h, 1);
    lds.c = g;
    return lds;
  }
  lds.alpha.resize(2 * h);
  lds.alpha << distilled.alphas, -distilled.alphas;
  lds.b = Matrix::Ones(2 * h, 1);
  lds.c = Matrix::Zero(2 * k, 2 * h);
  lds.c.topLeftCorner(k, h) = g;
  lds.c.bottomRightCorner(k, h) = g;
  return lds;
}

RecurrentStu::RecurrentStu(const StuParams& params, const DistilledFilters& distilled)
    : k_(params.k), m_(params.m()), n_(params.n()) {
  params.validate();
  if (params.k != distilled.k())
    throw DimensionError("distill_stu_model: k of the coefficients and the filters differ");
  const DiagonalLds filter = assemble_filter_lds(distilled, true);
  alpha_ = filter.alpha;
  readout_ = filter.c;
  const auto k = static_cast<Eigen::Index>(k_);
  const auto m = static_cast<Eigen::Index>(m_);
  const auto n = static_cast<Eigen::Index>(n_);
  // Column c * 2k + j multiplies the projection of input channel c onto filter j.
  mix_.resize(m, 2 * k * n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index j = 0; j < k; ++j) {
      mix_.col(c * 2 * k + j) = params.m_plus[static_cast<std::size_t>(j)].col(c);
      mix_.col(c * 2 * k + k + j) = params.m_minus[static_cast<std::size_t>(j)].col(c);
    }
  if (params.ar) {
    has_ar_ = true;
    y_feedback_ = params.ar->y_feedback;
    m_u_ = params.ar->m_u;
  }
  x_.resize(alpha_.size(), n);
  proj_.resize(2 * k, n);
  reset();
}

void RecurrentStu::reset() {
  const auto m = static_cast<Eigen::Index>(m_);
  const auto n = static_cast<Eigen::Index>(n_);
  x_.setZero();
  proj_.setZero();
  spectral_lag1_ = Vector::Zero(m);
  spectral_lag2_ = Vector::Zero(m);
  y_lag1_ = Vector::Zero(m);
  y_lag2_ = Vector::Zero(m);
  u_lag1_ = Vector::Zero(n);
  u_lag2_ = Vector::Zero(n);
  t_ = 0;
}

void RecurrentStu::step(const double* u_t, double* y_t) {
  const auto m = static_cast<Eigen::Index>(m_);
  const auto n = static_cast<Eigen::Index>(n_);
  const Eigen::Map<const Eigen::RowVectorXd> u_row(u_t, n);
  x_.array().colwise() *= alpha_.array();
  x_.rowwise() += u_row;
  proj_.noalias() = readout_ * x_;
  Eigen::Map<Vector> y(y_t, m);
  const Eigen::Map<const Vector> flat(proj_.data(), proj_.size());
  if (!has_ar_) {
    y.noalias() = mix_ * flat;
    ++t_;
    return;
  }
  // Autoregressive form: spectral terms and own outputs enter with a lag of two steps.
  const Vector spectral = mix_ * flat;
  const Eigen::Map<const Vector> u(u_t, n);
  y.setZero();
  if (t_ >= 2) {
    y += spectral_lag2_;
    if (y_feedback_) y += y_lag2_;
  }
  y.noalias() += m_u_[0] * u;
  if (t_ >= 1) y.noalias() += m_u_[1] * u_lag1_;
  if (t_ >= 2) y.noalias() += m_u_[2] * u_lag2_;
  spectral_lag2_ = spectral_lag1_;
  spectral_lag1_ = spectral;
  y_lag2_ = y_lag1_;
  y_lag1_ = y;
  u_lag2_ = u_lag1_;
  u_lag1_ = u;
  ++t_;
}

Vector RecurrentStu::step(const Vector& u_t) {
  if (static_cast<std::size_t>(u_t.size()) != n_) throw DimensionError("RecurrentStu: input size mismatch");
  Vector y(static_cast<Eigen::Index>(m_));
  step(u_t.data(), y.data());
  return y;
}

Sequence RecurrentStu::run(const Sequence& u) {
  if (static_cast<std::size_t>(u.cols()) != n_) throw DimensionError("RecurrentStu: input size mismatch");
  reset();
  Sequence y(u.rows(), static_cast<Eigen::Index>(m_));
  Vector ut(static_cast<Eigen::Index>(n_)), yt(static_cast<Eigen::Index>(m_));
  for (Eigen::Index t = 0; t < u.rows(); ++t) {
    ut = u.row(t).transpose();
    step(ut.data(), yt.data());
    y.row(t) = yt.transpose();
  }
  return y;
}

RecurrentStu distill_stu_model(const StuParams& params, const DistilledFilters& distilled) {
  return RecurrentStu(params, distilled);
}

LdsToLdsResult lds_to_lds(const DiagonalLds& source, const SpectralBasis& basis,
                          const DistilledFilters& distilled, const LdsToLdsConfig& config) {
  source.validate();
  if (distilled.k() != basis.k) throw DimensionError("lds_to_lds: filters and basis disagree on k");
  LdsToLdsResult out;
  const ImpulseResponse target = impulse_response(source, basis.L);
  if (config.mode == FitMode::kClosed) {
    out.fit = fit_stu_to_impulse(target, basis);
  } else {
    const IoFitResult io = fit_stu_to_lds_io(source, basis, config.gd);
    out.fit.params = io.params;
    const ImpulseResponse fitted = stu_impulse(io.params, basis, basis.L);
    double sq = 0.0;
    for (std::size_t i = 0; i < fitted.tensor().size(); ++i) {
      const double d = fitted.tensor().data()[i] - target.tensor().data()[i];
      sq += d * d;
    }
    out.fit.residual = std::sqrt(sq);
  }
  const StuParams& p = out.fit.params;

  const Eigen::Index h = distilled.alphas.size();
  const auto k = static_cast<Eigen::Index>(basis.k);
  const auto n = static_cast<Eigen::Index>(source.n());
  const auto m = static_cast<Eigen::Index>(source.m());
  const Matrix g = readout_block(distilled); // k x h
  DiagonalLds& lds = out.lds;
  lds.alpha.resize(2 * h * n);
  lds.b = Matrix::Zero(2 * h * n, n);
  lds.c = Matrix::Zero(m, 2 * h * n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index base = c * 2 * h;
    lds.alpha.segment(base, h) = distilled.alphas;
    lds.alpha.segment(base + h, h) = -distilled.alphas;
    lds.b.block(base, c, 2 * h, 1).setOnes();
    Matrix plus(m, k), minus(m, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      plus.col(j) = p.m_plus[static_cast<std::size_t>(j)].col(c);
      minus.col(j) = p.m_minus[static_cast<std::size_t>(j)].col(c);
    }
    lds.c.middleCols(base, h) = plus * g;
    lds.c.middleCols(base + h, h) = minus * g;
  }

  const ImpulseResponse got = impulse_response(lds, basis.L);
  double sq = 0.0;
  for (std::size_t i = 0; i < got.tensor().size(); ++i) {
    const double d = got.tensor().data()[i] - target.tensor().data()[i];
    sq += d * d;
  }
  out.impulse_error = std::sqrt(sq);
  out.impulse_mse = sq / static_cast<double>(got.tensor().size());
  return out;
}

}  // namespace spectralds

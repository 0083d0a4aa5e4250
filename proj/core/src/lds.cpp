#include "spectralds/lds.hpp"

#include <cmath>

#include "spectralds/error.hpp"
#include "spectralds/rng.hpp"

namespace spectralds {

void DiagonalLds::validate() const {
  if (b.rows() != alpha.size() || c.cols() != alpha.size())
    throw DimensionError("DiagonalLds: rows(b) and cols(c) must equal the state dimension");
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    if (!(std::abs(alpha[i]) <= 1.0)) throw DomainError("DiagonalLds: |alpha| must be at most 1");
}

LdsState LdsState::zeros(const DiagonalLds& lds, std::size_t batch) {
  return {Matrix::Zero(lds.alpha.size(), static_cast<Eigen::Index>(batch))};
}

void step_inplace(const DiagonalLds& lds, LdsState& state, const Matrix& u_t, Matrix& y) {
  if (state.x.rows() != lds.alpha.size() || u_t.rows() != lds.b.cols() ||
      u_t.cols() != state.x.cols())
    throw DimensionError("step: state or input dimensions do not match the system");
  state.x = lds.alpha.asDiagonal() * state.x;
  state.x.noalias() += lds.b * u_t;
  y.noalias() = lds.c * state.x;
}

StepResult step(const DiagonalLds& lds, const LdsState& state, const Matrix& u_t) {
  StepResult out{state, Matrix(lds.c.rows(), u_t.cols())};
  step_inplace(lds, out.state, u_t, out.y);
  return out;
}

Sequence simulate(const DiagonalLds& lds, const Sequence& u, const std::optional<NoiseSpec>& noise) {
  lds.validate();
  if (u.rows() < 1) throw DimensionError("simulate: at least one time step is required");
  if (static_cast<std::size_t>(u.cols()) != lds.n())
    throw DimensionError("simulate: input dimension does not match B");
  const Eigen::Index T = u.rows();
  Sequence y(T, lds.c.rows());
  LdsState state = LdsState::zeros(lds);
  Matrix ut(u.cols(), 1), yt(lds.c.rows(), 1);

  std::mt19937_64 rng;
  std::normal_distribution<double> normal;
  double state_sd = 0.0, out_sd = 0.0;
  if (noise) {
    rng = make_stream(noise->seed, "lds-noise");
    state_sd = std::sqrt(noise->state_variance);
    out_sd = std::sqrt(noise->output_variance);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    ut = u.row(t).transpose();
    if (!noise) {
      step_inplace(lds, state, ut, yt);
    } else {
      state.x = lds.alpha.asDiagonal() * state.x;
      state.x.noalias() += lds.b * ut;
      for (Eigen::Index i = 0; i < state.x.rows(); ++i) state.x(i, 0) += state_sd * normal(rng);
      yt.noalias() = lds.c * state.x;
      for (Eigen::Index o = 0; o < yt.rows(); ++o) yt(o, 0) += out_sd * normal(rng);
    }
    y.row(t) = yt.col(0).transpose();
  }
  return y;
}

ImpulseResponse impulse_response(const DiagonalLds& lds, std::size_t L) {
  lds.validate();
  ImpulseResponse out(lds.m(), lds.n(), L);
  Vector power = Vector::Ones(lds.alpha.size());
  for (std::size_t t = 0; t < L; ++t) {
    out.tap(t) = lds.c * power.asDiagonal() * lds.b;
    power = power.cwiseProduct(lds.alpha);
  }
  return out;
}

Vector mu_filter(double alpha, std::size_t L) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("mu_filter: alpha must lie in [0, 1]");
  Vector out(static_cast<Eigen::Index>(L));
  double value = 1.0 - alpha;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = value;
    value *= alpha;
  }
  return out;
}

DiagonalLds random_symmetric_lds(std::size_t h, std::size_t n, std::size_t m,
                                 double max_abs_eigenvalue, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto hi = static_cast<Eigen::Index>(h);
  Matrix g(hi, hi);
  for (Eigen::Index c = 0; c < hi; ++c)
    for (Eigen::Index r = 0; r < hi; ++r) g(r, c) = normal(rng);
  Matrix a = 0.5 * (g + g.transpose());
  Matrix b(hi, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < b.cols(); ++c)
    for (Eigen::Index r = 0; r < hi; ++r) b(r, c) = normal(rng);
  Matrix c(static_cast<Eigen::Index>(m), hi);
  for (Eigen::Index col = 0; col < hi; ++col)
    for (Eigen::Index r = 0; r < c.rows(); ++r) c(r, col) = normal(rng);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& lambda = eig.eigenvalues();
  const double scale = max_abs_eigenvalue / lambda.cwiseAbs().maxCoeff();
  DiagonalLds lds;
  lds.alpha = (lambda * scale).cwiseMax(-1.0).cwiseMin(1.0);
  lds.b = eig.eigenvectors().transpose() * b;
  lds.c = c * eig.eigenvectors();
  return lds;
}

}  // namespace spectralds

#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include "linalg.hpp"
#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"
#include "spectralds/rng.hpp"

namespace spectralds {

RowMatrix geometric_filters(const Vector& alphas, std::size_t L) {
  RowMatrix out(alphas.size(), static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    if (!(std::abs(a) <= 1.0)) throw DomainError("geometric filter: |alpha| must be at most 1");
    double value = 1.0 - a;
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
      out(i, t) = value;
      value *= a;
    }
  }
  return out;
}

RowMatrix reconstruct_filters(const DistilledFilters& distilled) {
  return distilled.mtilde * geometric_filters(distilled.alphas, distilled.L);
}

Vector per_filter_errors(const DistilledFilters& distilled, const SpectralBasis& basis) {
  if (distilled.k() != basis.k || distilled.L != basis.L)
    throw DimensionError("distilled filters do not match the basis (k or L differ)");
  const RowMatrix diff = reconstruct_filters(distilled) - basis.phi;
  return diff.rowwise().norm();
}

double reconstruction_error(const DistilledFilters& distilled, const SpectralBasis& basis) {
  return per_filter_errors(distilled, basis).norm();
}

Vector find_spectral_representation(double alpha, const SpectralBasis& basis,
                                    RepresentationMode mode, const SpectralGdConfig& gd) {
  const Vector mu = mu_filter(alpha, basis.L);
  const Vector closed = basis.phi * mu;
  if (mode == RepresentationMode::kClosed) return closed;

  // Stochastic gradient descent on E_u |m^T Phi u - mu^T u|^2 with u ~ N(0, I).
  const auto k = static_cast<Eigen::Index>(basis.k);
  const auto L = static_cast<Eigen::Index>(basis.L);
  const double lr = gd.lr > 0 ? gd.lr : 1.0 / static_cast<double>(basis.k + 2);
  std::mt19937_64 rng = make_stream(gd.seed, "spectral-rep-gd");
  std::normal_distribution<double> normal;
  Vector m = Vector::Zero(k);
  Vector u(L);
  std::deque<Vector> history;
  std::deque<double> window;
  double window_sum = 0.0;
  double best_window = std::numeric_limits<double>::infinity();
  std::size_t stale_windows = 0;
  for (std::size_t s = 0; s < gd.max_steps; ++s) {
    Vector grad = Vector::Zero(k);
    double loss = 0.0;
    for (std::size_t b = 0; b < gd.batch; ++b) {
      for (Eigen::Index t = 0; t < L; ++t) u[t] = normal(rng);
      const Vector z = basis.phi * u;
      const double r = m.dot(z) - mu.dot(u);
      loss += r * r;
      grad += (2.0 * r) * z;
    }
    loss /= static_cast<double>(gd.batch);
    if (!std::isfinite(loss)) throw ConvergenceError("spectral representation gd produced a non-finite loss");
    m -= (lr / static_cast<double>(gd.batch)) * grad;

    history.push_back(m);
    window.push_back(loss);
    window_sum += loss;
    if (history.size() > gd.patience) {
      history.pop_front();
      window_sum -= window.front();
      window.pop_front();
      const double drift = (m - history.front()).cwiseAbs().maxCoeff();
      if (drift <= gd.tolerance * std::max(1.0, m.cwiseAbs().maxCoeff())) return m;
      if ((s + 1) % gd.patience == 0) {
        const double mean = window_sum / static_cast<double>(window.size());
        if (mean < 0.99 * best_window) {
          best_window = mean;
          stale_windows = 0;
        } else if (++stale_windows >= 10) {
          Vector avg = Vector::Zero(k);
          for (const Vector& v : history) avg += v;
          return avg / static_cast<double>(history.size());
        }
      }
    }
  }
  throw ConvergenceError("spectral representation gd reached the step cap without converging");
}

SpectralToLdsResult spectral_to_lds(const SpectralBasis& basis, const Vector& alphas) {
  const auto h = alphas.size();
  const auto k = static_cast<Eigen::Index>(basis.k);
  if (h < k) throw DimensionError("spectral_to_lds requires h >= k");
  SpectralToLdsResult out;
  const RowMatrix mus = geometric_filters(alphas, basis.L);
  for (Eigen::Index i = 0; i < h; ++i)
    if (alphas[i] < 0.0) throw DomainError("spectral_to_lds samples alpha in [0, 1]");
  out.m = mus * basis.phi.transpose(); // h x k, row i = <phi_j, mu(alpha_i)>
  const detail::PinvResult pinv = detail::pseudoinverse(out.m, kPinvCutoff);
  if (pinv.rank < k) {
    std::ostringstream msg;
    msg << "spectral_to_lds: coefficient matrix has rank " << pinv.rank << " < k = " << k;
    throw DimensionError(msg.str());
  }
  out.filters.L = basis.L;
  out.filters.alphas = alphas;
  out.filters.mtilde = pinv.pinv;
  out.lambda_max = 1.0 / pinv.singular_values[pinv.rank - 1];
  out.error_fro = (basis.phi - pinv.pinv * mus).norm();
  out.residual_sum = (out.m * basis.phi - mus).rowwise().norm().sum();
  out.filters.error_fro = out.error_fro;
  out.filters.lambda_max = out.lambda_max;
  return out;
}

SpectralToLdsResult spectral_to_lds(const SpectralBasis& basis, std::size_t h, AlphaSampler& sampler) {
  if (h < basis.k) throw DimensionError("spectral_to_lds requires h >= k");
  constexpr std::size_t kMaxAttempts = 16;
  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Vector alphas(static_cast<Eigen::Index>(h));
    std::set<double> seen;
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
      double a = sampler.next();
      while (a < 0.0 || !seen.insert(a).second) a = std::abs(sampler.next());
      alphas[i] = a;
    }
    try {
      SpectralToLdsResult out = spectral_to_lds(basis, alphas);
      out.resamples = attempt;
      return out;
    } catch (const DimensionError&) {
      if (attempt + 1 == kMaxAttempts) throw;
    }
  }
  throw DimensionError("spectral_to_lds: no full-rank alpha set found");
}

}  // namespace spectralds

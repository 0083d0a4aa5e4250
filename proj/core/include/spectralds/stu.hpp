#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spectralds/lds.hpp"
#include "spectralds/spectral_basis.hpp"
#include "spectralds/tensor.hpp"

namespace spectralds {

struct ArTerms {
  std::vector<Matrix> m_u; // three m x n matrices, M_1^u .. M_3^u
  bool y_feedback = false;
};

struct StuParams {
  std::size_t k = 0;
  std::vector<Matrix> m_plus;  // k matrices, m x n
  std::vector<Matrix> m_minus; // k matrices, m x n
  std::optional<ArTerms> ar;

  std::size_t m() const;
  std::size_t n() const;
  void validate() const;

  static StuParams zeros(std::size_t k, std::size_t m, std::size_t n);
};

struct Projections {
  Tensor3 u_plus;  // T x k x n
  Tensor3 u_minus; // T x k x n
};

Projections project_inputs(const SpectralBasis& basis, const Sequence& u);

Sequence forward_nonar(const StuParams& params, const SpectralBasis& basis, const Sequence& u);

Sequence forward_ar(const StuParams& params, const SpectralBasis& basis, const Sequence& u);

ImpulseResponse stu_impulse(const StuParams& params, const SpectralBasis& basis, std::size_t L);

struct StuFit {
  StuParams params;
  double residual = 0.0;   // Frobenius norm of psi_SF - target over all channels
  double condition = 0.0;  // condition estimate of the ridge-regularised Gram matrix
};

inline constexpr double kFitRidge = 1e-12;

StuFit fit_stu_to_impulse(const ImpulseResponse& target, const SpectralBasis& basis);

// Least-squares coefficients for a single scalar target series of length basis.L.
// Returns 2k values: k positive-filter coefficients followed by k negative ones.
Vector fit_scalar_impulse(const Vector& target, const SpectralBasis& basis);

struct IoFitConfig {
  std::size_t batches = 32;  // sequences per step
  std::size_t seq_len = 0;   // 0 means basis.L
  double lr = 0.1;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
};

struct IoFitResult {
  StuParams params;
  double final_mse = 0.0;
  double best_mse = 0.0;
  std::vector<double> mse_history;
};

// Gradient descent on the squared error of the last output of each sequence.
IoFitResult fit_stu_to_lds_io(const DiagonalLds& lds, const SpectralBasis& basis,
                              const IoFitConfig& cfg);

}  // namespace spectralds

#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "spectralds/tensor.hpp"

namespace spectralds {

struct DiagonalLds {
  Vector alpha; // h
  Matrix b;     // h x n
  Matrix c;     // m x h

  std::size_t h() const { return static_cast<std::size_t>(alpha.size()); }
  std::size_t n() const { return static_cast<std::size_t>(b.cols()); }
  std::size_t m() const { return static_cast<std::size_t>(c.rows()); }

  void validate() const;
};

struct LdsState {
  Matrix x; // h x batch

  static LdsState zeros(const DiagonalLds& lds, std::size_t batch = 1);
};

struct NoiseSpec {
  double state_variance = 0.5;
  double output_variance = 5.0;
  std::uint64_t seed = 0;
};

struct StepResult {
  LdsState state;
  Matrix y; // m x batch
};

StepResult step(const DiagonalLds& lds, const LdsState& state, const Matrix& u_t);

// In-place variant used by hot loops; y must be m x batch.
void step_inplace(const DiagonalLds& lds, LdsState& state, const Matrix& u_t, Matrix& y);

Sequence simulate(const DiagonalLds& lds, const Sequence& u,
                  const std::optional<NoiseSpec>& noise = std::nullopt);

ImpulseResponse impulse_response(const DiagonalLds& lds, std::size_t L);

Vector mu_filter(double alpha, std::size_t L);

// Random symmetric system: Gaussian A symmetrised and rescaled so its largest
// eigenvalue magnitude equals max_abs_eigenvalue, Gaussian B and C, returned
// in the eigenbasis of A.
DiagonalLds random_symmetric_lds(std::size_t h, std::size_t n, std::size_t m,
                                 double max_abs_eigenvalue, std::mt19937_64& rng);

}  // namespace spectralds

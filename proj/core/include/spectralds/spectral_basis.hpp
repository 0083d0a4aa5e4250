#pragma once

#include <cstddef>

#include "spectralds/tensor.hpp"

namespace spectralds {

struct HankelSpec {
  std::size_t L = 2;
};

struct SpectralBasis {
  std::size_t L = 0;
  std::size_t k = 0;
  Vector sigma;  // descending eigenvalues
  RowMatrix phi; // k x L, row j-1 is filter j
};

struct BasisOptions {
  // Largest L handled by the dense symmetric eigensolver.
  std::size_t dense_threshold = 2048;
  std::size_t max_iterations = 200;
  // Extra subspace columns kept beyond k by the iterative solver.
  std::size_t oversample = 16;
};

// Z(i, j) with 1-based indices.
double hankel_entry(std::size_t i, std::size_t j);

// Dense L x L Hankel matrix.
Matrix hankel_matrix(const HankelSpec& spec);

Vector hankel_matvec(const HankelSpec& spec, const Vector& v,
                     std::size_t dense_threshold = 2048);
Vector hankel_matvec_dense(const HankelSpec& spec, const Vector& v);
Vector hankel_matvec_fft(const HankelSpec& spec, const Vector& v);

SpectralBasis compute_basis(const HankelSpec& spec, std::size_t k,
                            const BasisOptions& options = {});

Vector negate_filter(const Vector& phi_j);

// Residual norms ||Z phi_j - sigma_j phi_j||_2 for every filter.
Vector eigen_residuals(const SpectralBasis& basis);

}  // namespace spectralds

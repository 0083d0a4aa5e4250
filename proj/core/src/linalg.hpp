#pragma once

#include "spectralds/tensor.hpp"

namespace spectralds::detail {

struct PinvResult {
  Matrix pinv;
  Vector singular_values; // of the input, descending
  Eigen::Index rank = 0;
};

// Moore-Penrose pseudoinverse; singular values below cutoff * sigma_max are dropped.
PinvResult pseudoinverse(const Matrix& a, double cutoff);

double spectral_norm(const Matrix& a);

// Largest entry in magnitude is made positive; ties resolve to the lowest index.
template <typename Derived>
void fix_sign(Eigen::MatrixBase<Derived>&& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

}  // namespace spectralds::detail

#pragma once

#include "spectralds/spectral_basis.hpp"
#include "spectralds/tensor.hpp"

namespace spectralds::detail {

// Normal-equation solver for the stacked [phi; negate(phi)] bank, factorised once.
class ImpulseFitter {
public:
  explicit ImpulseFitter(const SpectralBasis& basis);

  // 2k coefficients (positive block first) for a length-L target.
  Vector solve(const Vector& target) const;
  // Stacked reconstruction F^T c.
  Vector reconstruct(const Vector& coeffs) const;

  const RowMatrix& stacked() const { return stacked_; }
  double condition() const { return condition_; }

private:
  RowMatrix stacked_; // 2k x L
  Eigen::LDLT<Matrix> ldlt_;
  double condition_ = 0.0;
};

// Row-major 2k x L bank of positive filters followed by their negated copies.
RowMatrix stacked_filters(const SpectralBasis& basis);

}  // namespace spectralds::detail

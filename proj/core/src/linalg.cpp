#include "linalg.hpp"

namespace spectralds::detail {

PinvResult pseudoinverse(const Matrix& a, double cutoff) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PinvResult out;
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values[0] : 0.0;
  Vector inv = Vector::Zero(out.singular_values.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (out.singular_values[i] > cutoff * smax && out.singular_values[i] > 0) {
      inv[i] = 1.0 / out.singular_values[i];
      ++out.rank;
    }
  }
  out.pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()[0];
}

}  // namespace spectralds::detail

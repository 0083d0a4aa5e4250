#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace spectralds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sequence of vectors stored as a T x dim row-major matrix; row t-1 holds the
// value at (1-based) time t.
using Sequence = RowMatrix;

// Dense three-axis array, last axis fastest.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2);

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * d1_ + j) * d2_ + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * d1_ + j) * d2_ + l];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Contiguous view of the slice at fixed first index, as a d1 x d2 matrix.
  Eigen::Map<RowMatrix> slice(std::size_t i);
  Eigen::Map<const RowMatrix> slice(std::size_t i) const;

  void set_zero();

private:
  std::size_t d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<double> data_;
};

// Impulse response stored time-major: taps(t-1) is the m x n matrix at time t.
class ImpulseResponse {
public:
  ImpulseResponse() = default;
  ImpulseResponse(std::size_t m, std::size_t n, std::size_t length);

  std::size_t m() const { return tensor_.dim1(); }
  std::size_t n() const { return tensor_.dim2(); }
  std::size_t length() const { return tensor_.dim0(); }

  Eigen::Map<RowMatrix> tap(std::size_t t0) { return tensor_.slice(t0); }
  Eigen::Map<const RowMatrix> tap(std::size_t t0) const { return tensor_.slice(t0); }

  // Scalar series for output o and input i over time.
  Vector channel(std::size_t o, std::size_t i) const;
  void set_channel(std::size_t o, std::size_t i, const Vector& values);

  Tensor3& tensor() { return tensor_; }
  const Tensor3& tensor() const { return tensor_; }

private:
  Tensor3 tensor_;
};

}  // namespace spectralds

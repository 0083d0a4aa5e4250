#include "spectralds/tensor.hpp"

#include <algorithm>

namespace spectralds {

Tensor3::Tensor3(std::size_t d0, std::size_t d1, std::size_t d2)
    : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, 0.0) {}

Eigen::Map<RowMatrix> Tensor3::slice(std::size_t i) {
  return {data_.data() + i * d1_ * d2_, static_cast<Eigen::Index>(d1_),
          static_cast<Eigen::Index>(d2_)};
}

Eigen::Map<const RowMatrix> Tensor3::slice(std::size_t i) const {
  return {data_.data() + i * d1_ * d2_, static_cast<Eigen::Index>(d1_),
          static_cast<Eigen::Index>(d2_)};
}

void Tensor3::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

ImpulseResponse::ImpulseResponse(std::size_t m, std::size_t n, std::size_t length)
    : tensor_(length, m, n) {}

Vector ImpulseResponse::channel(std::size_t o, std::size_t i) const {
  Vector out(static_cast<Eigen::Index>(length()));
  for (std::size_t t = 0; t < length(); ++t) out[static_cast<Eigen::Index>(t)] = tensor_(t, o, i);
  return out;
}

void ImpulseResponse::set_channel(std::size_t o, std::size_t i, const Vector& values) {
  for (std::size_t t = 0; t < length(); ++t) tensor_(t, o, i) = values[static_cast<Eigen::Index>(t)];
}

}  // namespace spectralds

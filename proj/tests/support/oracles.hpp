#pragma once

// Reference implementations used only by tests. Each one is written from the
// defining formula with plain loops so it shares no code path with the library.

#include <cstdint>
#include <string>
#include <vector>

#include "spectralds/spectralds.hpp"

namespace oracle {

using spectralds::Matrix;
using spectralds::RowMatrix;
using spectralds::Sequence;
using spectralds::Vector;

double hankel(std::size_t i, std::size_t j);

// Naive causal convolution y[t] = sum_{s<=t} f[s] x[t-s].
Vector convolve(const Vector& filter, const Vector& x);

// Sign alternation (-1)^s f[s], s 0-based.
Vector alternate(const Vector& f);

// Direct quadruple-loop STU forward pass without autoregressive terms.
Sequence stu_forward(const spectralds::StuParams& p, const spectralds::SpectralBasis& basis, const Sequence& u);

// x_t = diag(alpha) x_{t-1} + B u_t, y_t = C x_t with x_0 = 0.
Sequence lds_simulate(const spectralds::DiagonalLds& lds, const Sequence& u);

// C diag(alpha)^(t-1) B for t = 1..L, as per-tap matrices.
std::vector<Matrix> lds_impulse(const spectralds::DiagonalLds& lds, std::size_t L);

// (1 - a) a^t, t = 0..L-1, by repeated multiplication.
Vector geometric(double a, std::size_t L);

// Residual of projecting f onto the span of the (orthonormal) filter rows.
double projection_residual(const spectralds::SpectralBasis& basis, const Vector& f);

// Left inverse via the normal equations; valid for full column rank.
Matrix normal_equation_pinv(const Matrix& m);

std::uint64_t fnv1a(const std::string& bytes);

// Linearly interpolated quantile of sorted data.
double quantile(std::vector<double> v, double q);

spectralds::StuParams random_params(std::size_t k, std::size_t m, std::size_t n, std::uint64_t seed,
                                    double scale = 1.0);
Sequence random_sequence(std::size_t T, std::size_t n, std::uint64_t seed, double scale = 1.0);

double max_abs(const Matrix& m);

}  // namespace oracle

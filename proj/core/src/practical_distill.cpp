#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "linalg.hpp"
#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"
#include "spectralds/parallel.hpp"
#include "spectralds/rng.hpp"

namespace spectralds {

namespace {

RowMatrix gather_rows(const RowMatrix& source, const std::vector<std::size_t>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

struct Span {
  Matrix q;                         // L x r orthonormal columns
  std::vector<std::size_t> kept;    // rows spanning q, in input order
  std::vector<std::size_t> dropped; // rows judged dependent
};

// Orthonormal basis for the span of the selected rows. Rows are normalised first so the
// rank threshold measures the angle each row makes with the others.
Span row_span(const RowMatrix& psi, const std::vector<std::size_t>& rows, double tolerance) {
  const Eigen::Index L = psi.cols();
  Matrix a(L, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = psi.row(static_cast<Eigen::Index>(rows[i]));
    const double norm = row.norm();
    a.col(static_cast<Eigen::Index>(i)) = norm > 0 ? (row.transpose() / norm).eval() : row.transpose().eval();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(tolerance);
  const Eigen::Index rank = qr.rank();
  Span span;
  std::vector<bool> keep(rows.size(), false);
  for (Eigen::Index i = 0; i < rank; ++i) keep[static_cast<std::size_t>(qr.colsPermutation().indices()[i])] = true;
  for (std::size_t i = 0; i < rows.size(); ++i) (keep[i] ? span.kept : span.dropped).push_back(rows[i]);
  span.q = qr.householderQ() * Matrix::Identity(L, rank);
  return span;
}

// Component of `target` rows orthogonal to the columns of q, projected twice for accuracy.
RowMatrix orthogonal_residual(const RowMatrix& target, const Matrix& q) {
  RowMatrix r = target;
  for (int pass = 0; pass < 2; ++pass) {
    const Matrix coeffs = r * q;
    r.noalias() -= coeffs * q.transpose();
  }
  return r;
}

double least_squares_error(const PairBank& bank, const SpectralBasis& basis,
                           const std::vector<std::size_t>& rows, double tolerance,
                           std::vector<std::size_t>* dropped) {
  const Span span = row_span(bank.psi, rows, tolerance);
  if (dropped) *dropped = span.dropped;
  return orthogonal_residual(basis.phi, span.q).norm();
}

double coefficient_pinv_error(const PairBank& bank, const SpectralBasis& basis,
                              const std::vector<std::size_t>& rows) {
  const Matrix theta = gather_rows(bank.theta, rows);
  const Matrix m = detail::pseudoinverse(theta, kPinvCutoff).pinv; // k x s
  return (basis.phi - m * gather_rows(bank.psi, rows)).norm();
}

std::vector<std::size_t> random_subset(std::size_t N, std::size_t size, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, N - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(size);
  return idx;
}

// Greedy additions under the least-squares objective. Candidates are kept orthogonal
// to the current span so each score is the exact error decrease of adding that row.
void greedy_least_squares(const PairBank& bank, const SpectralBasis& basis,
                          const PracticalConfig& config, std::vector<std::size_t>& rows,
                          std::vector<double>& curve) {
  const Eigen::Index N = bank.psi.rows();
  Span span = row_span(bank.psi, rows, config.dependence_tolerance);
  rows = span.kept;
  Matrix q = span.q;

  std::vector<char> chosen(static_cast<std::size_t>(N), 0);
  for (auto r : rows) chosen[r] = 1;
  RowMatrix residual = orthogonal_residual(basis.phi, q);
  RowMatrix cand = orthogonal_residual(bank.psi, q);
  Vector psi_norm = bank.psi.rowwise().norm();
  Vector cand_norm2 = cand.rowwise().squaredNorm();
  Matrix scores = residual * cand.transpose(); // k x N
  curve.push_back(residual.norm());

  std::size_t since_refresh = 0;
  while (rows.size() < config.h) {
    Eigen::Index best = -1;
    double best_gain = -1.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      const double tol = config.dependence_tolerance * psi_norm[i];
      if (!(cand_norm2[i] > tol * tol)) continue;
      const double gain = scores.col(i).squaredNorm() / cand_norm2[i];
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0) break; // every remaining row lies in the current span

    Vector dir = cand.row(best).transpose();
    dir -= q * (q.transpose() * dir);
    dir /= dir.norm();
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = dir;

    const Vector r_dir = residual * dir;
    const Vector c_dir = cand * dir;
    residual.noalias() -= r_dir * dir.transpose();
    cand.noalias() -= c_dir * dir.transpose();
    cand_norm2 = cand.rowwise().squaredNorm();
    if (++since_refresh == 8) {
      scores.noalias() = residual * cand.transpose();
      since_refresh = 0;
    } else {
      scores.noalias() -= r_dir * c_dir.transpose();
    }
    chosen[static_cast<std::size_t>(best)] = 1;
    rows.push_back(static_cast<std::size_t>(best));
    curve.push_back(residual.norm());
  }
}

void greedy_coefficient_pinv(const PairBank& bank, const SpectralBasis& basis,
                             const PracticalConfig& config, std::vector<std::size_t>& rows,
                             std::vector<double>& curve) {
  const std::size_t N = static_cast<std::size_t>(bank.psi.rows());
  curve.push_back(coefficient_pinv_error(bank, basis, rows));
  std::vector<char> chosen(N, 0);
  for (auto r : rows) chosen[r] = 1;
  std::vector<double> errors(N);
  while (rows.size() < config.h) {
    parallel_for(N, [&](std::size_t i) {
      errors[i] = std::numeric_limits<double>::infinity();
      if (chosen[i]) return;
      std::vector<std::size_t> trial = rows;
      trial.push_back(i);
      errors[i] = coefficient_pinv_error(bank, basis, trial);
    });
    std::size_t best = N;
    for (std::size_t i = 0; i < N; ++i)
      if (!chosen[i] && (best == N || errors[i] < errors[best])) best = i;
    if (best == N || !std::isfinite(errors[best])) break;
    chosen[best] = 1;
    rows.push_back(best);
    curve.push_back(errors[best]);
  }
}

double frob_loss(const RowMatrix& phi, const Matrix& m, const RowMatrix& psi) {
  return (phi - m * psi).squaredNorm();
}

}  // namespace

double subset_error(const PairBank& bank, const SpectralBasis& basis,
                    const std::vector<std::size_t>& rows, SubsetObjective objective) {
  if (objective == SubsetObjective::kLeastSquares)
    return least_squares_error(bank, basis, rows, 1e-14, nullptr);
  return coefficient_pinv_error(bank, basis, rows);
}

SelectionResult select_rows(const PairBank& bank, const SpectralBasis& basis,
                            const PracticalConfig& config) {
  const std::size_t N = bank.size();
  if (bank.psi.cols() != static_cast<Eigen::Index>(basis.L) ||
      bank.theta.cols() != static_cast<Eigen::Index>(basis.k))
    throw DimensionError("pair bank does not match the basis");
  if (config.h_start < 1 || config.h_start > config.h)
    throw DomainError("practical distillation requires 1 <= h_start <= h");
  if (config.h > N) throw DimensionError("practical distillation: h exceeds the number of bank rows");
  const std::size_t trials = std::max<std::size_t>(1, config.trials);

  SelectionResult result;
  std::vector<std::vector<std::size_t>> subsets(trials);
  std::vector<std::vector<std::size_t>> dropped(trials);
  result.trial_errors.assign(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    std::mt19937_64 rng = make_stream(config.seed, "subset-trial", t);
    subsets[t] = random_subset(N, config.h_start, rng);
    result.trial_errors[t] =
        config.objective == SubsetObjective::kLeastSquares
            ? least_squares_error(bank, basis, subsets[t], config.dependence_tolerance, &dropped[t])
            : coefficient_pinv_error(bank, basis, subsets[t]);
  });
  std::size_t best = 0;
  for (std::size_t t = 1; t < trials; ++t)
    if (result.trial_errors[t] < result.trial_errors[best]) best = t;
  result.trial_error = result.trial_errors[best];
  result.rows = subsets[best];
  result.dropped = dropped[best];

  if (config.objective == SubsetObjective::kLeastSquares)
    greedy_least_squares(bank, basis, config, result.rows, result.curve);
  else
    greedy_coefficient_pinv(bank, basis, config, result.rows, result.curve);
  return result;
}

PracticalResult practical_distill(const PairBank& bank, const SpectralBasis& basis,
                                  const PracticalConfig& config) {
  PracticalResult out;
  out.selection = select_rows(bank, basis, config);
  const std::vector<std::size_t>& rows = out.selection.rows;
  const RowMatrix psi = gather_rows(bank.psi, rows);
  const Matrix theta = gather_rows(bank.theta, rows);
  const RowMatrix& phi = basis.phi;

  Matrix m = detail::pseudoinverse(theta, kPinvCutoff).pinv; // k x h
  double loss = frob_loss(phi, m, psi);
  out.pre_gd_error = std::sqrt(loss);
  out.gd_losses.push_back(loss);

  // Search direction: Gauss-Newton uses the exact curvature (Psi Psi^T)^{-1}, applied
  // through a QR factorisation of Psi^T; the plain variant is the negative gradient.
  Eigen::HouseholderQR<Matrix> qr;
  Matrix q_thin, r_upper;
  double plain_lr = 0.0;
  if (config.fine_tune == FineTuneMethod::kGaussNewton) {
    qr.compute(psi.transpose());
    q_thin = qr.householderQ() * Matrix::Identity(psi.cols(), psi.rows());
    r_upper = qr.matrixQR().topRows(psi.rows()).triangularView<Eigen::Upper>();
  } else {
    const double sn = detail::spectral_norm(psi);
    plain_lr = sn > 0 ? 1.0 / (sn * sn) : 0.0;
  }

  std::size_t steps = 0;
  while (steps < config.max_gd_steps) {
    const RowMatrix err = phi - m * psi;
    Matrix dir;
    if (config.fine_tune == FineTuneMethod::kGaussNewton) {
      const Matrix eq = err * q_thin; // k x h
      dir = r_upper.triangularView<Eigen::Upper>().solve(eq.transpose()).transpose();
    } else {
      dir = err * psi.transpose();
    }
    double trial_step = config.fine_tune == FineTuneMethod::kGaussNewton ? 1.0 : plain_lr;
    bool accepted = false;
    for (int halvings = 0; halvings < 30; ++halvings, trial_step *= 0.5) {
      const Matrix candidate = m + trial_step * dir;
      const double trial_loss = frob_loss(phi, candidate, psi);
      if (trial_loss < loss) {
        m = candidate;
        loss = trial_loss;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++steps;
    out.gd_losses.push_back(loss);
    const std::size_t n = out.gd_losses.size();
    if (n > config.patience) {
      const double before = out.gd_losses[n - 1 - config.patience];
      if ((before - loss) <= config.relative_tolerance * before) break;
    }
  }
  out.gd_steps = steps;
  out.post_gd_error = std::sqrt(loss);

  // Fold the per-row scale into the coefficients: psi_i = (c_i b_i / (1 - a_i)) mu(a_i).
  DistilledFilters& f = out.filters;
  f.L = basis.L;
  f.alphas.resize(static_cast<Eigen::Index>(rows.size()));
  Vector scale(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PairTriple& p = bank.triples[rows[i]];
    if (!(1.0 - p.a > 0.0)) throw DomainError("practical distillation: selected row has a = 1");
    f.alphas[static_cast<Eigen::Index>(i)] = p.a;
    scale[static_cast<Eigen::Index>(i)] = p.c * p.b / (1.0 - p.a);
  }
  f.mtilde = m * scale.asDiagonal();
  f.error_fro = reconstruction_error(f, basis);
  f.lambda_max = detail::spectral_norm(f.mtilde);
  return out;
}

}  // namespace spectralds

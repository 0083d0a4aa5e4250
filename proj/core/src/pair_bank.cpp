#include <cmath>

#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"
#include "spectralds/parallel.hpp"
#include "spectralds/rng.hpp"
#include "stu_fit.hpp"

namespace spectralds {

namespace {

Vector scalar_impulse(const PairTriple& p, std::size_t L) {
  Vector psi(static_cast<Eigen::Index>(L));
  double value = p.c * p.b;
  for (Eigen::Index t = 0; t < psi.size(); ++t) {
    psi[t] = value;
    value *= p.a;
  }
  return psi;
}

struct RowFit {
  Vector psi;
  Vector coeffs; // 2k
  double error = 0.0;
};

RowFit fit_row(const PairTriple& p, const SpectralBasis& basis, const detail::ImpulseFitter& fitter,
               FitMode mode, const IoFitConfig& gd) {
  RowFit row;
  row.psi = scalar_impulse(p, basis.L);
  if (mode == FitMode::kClosed) {
    row.coeffs = fitter.solve(row.psi);
  } else {
    DiagonalLds lds;
    lds.alpha = Vector::Constant(1, p.a);
    lds.b = Matrix::Constant(1, 1, p.b);
    lds.c = Matrix::Constant(1, 1, p.c);
    const IoFitResult fit = fit_stu_to_lds_io(lds, basis, gd);
    const auto k = static_cast<Eigen::Index>(basis.k);
    row.coeffs.resize(2 * k);
    for (Eigen::Index j = 0; j < k; ++j) {
      row.coeffs[j] = fit.params.m_plus[static_cast<std::size_t>(j)](0, 0);
      row.coeffs[k + j] = fit.params.m_minus[static_cast<std::size_t>(j)](0, 0);
    }
  }
  const double norm = row.psi.norm();
  const double diff = (fitter.reconstruct(row.coeffs) - row.psi).norm();
  row.error = norm > 0 ? diff / norm : diff;
  return row;
}

PairBank allocate(std::size_t N, const SpectralBasis& basis) {
  PairBank bank;
  const auto n = static_cast<Eigen::Index>(N);
  bank.psi.resize(n, static_cast<Eigen::Index>(basis.L));
  bank.theta.resize(n, static_cast<Eigen::Index>(basis.k));
  bank.theta_minus.resize(n, static_cast<Eigen::Index>(basis.k));
  bank.fit_errors.resize(n);
  return bank;
}

void store(PairBank& bank, Eigen::Index row, const RowFit& fit, std::size_t k) {
  const auto ki = static_cast<Eigen::Index>(k);
  bank.psi.row(row) = fit.psi.transpose();
  bank.theta.row(row) = fit.coeffs.head(ki).transpose();
  bank.theta_minus.row(row) = fit.coeffs.tail(ki).transpose();
  bank.fit_errors[row] = fit.error;
}

}  // namespace

double PairBank::retention() const {
  return requested == 0 ? 0.0 : static_cast<double>(size()) / static_cast<double>(requested);
}

PairBank build_pair_bank(const SpectralBasis& basis, const PairBankConfig& config,
                         const AlphaSampler& sampler) {
  if (config.N < 1) throw DomainError("build_pair_bank requires N >= 1");
  const detail::ImpulseFitter fitter(basis);
  const std::uint64_t base = stream_seed(config.seed, "pair-bank", sampler.config().seed);

  PairBank bank = allocate(config.N, basis);
  bank.requested = config.N;
  bank.triples.resize(config.N);
  parallel_for(config.N, [&](std::size_t i) {
    std::mt19937_64 rng = make_stream(base, "pair-row", i);
    std::normal_distribution<double> normal;
    PairTriple p;
    p.a = sampler.draw(rng);
    p.b = normal(rng);
    p.c = normal(rng);
    bank.triples[i] = p;
    IoFitConfig gd = config.gd;
    gd.seed = stream_seed(base, "pair-gd", i);
    store(bank, static_cast<Eigen::Index>(i), fit_row(p, basis, fitter, config.mode, gd), basis.k);
  });

  // Compact retained rows in place, preserving order.
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(config.N); ++i) {
    if (!(bank.fit_errors[i] <= config.fit_threshold)) continue;
    if (kept != i) {
      bank.psi.row(kept) = bank.psi.row(i);
      bank.theta.row(kept) = bank.theta.row(i);
      bank.theta_minus.row(kept) = bank.theta_minus.row(i);
      bank.fit_errors[kept] = bank.fit_errors[i];
      bank.triples[static_cast<std::size_t>(kept)] = bank.triples[static_cast<std::size_t>(i)];
    }
    ++kept;
  }
  bank.triples.resize(static_cast<std::size_t>(kept));
  bank.psi.conservativeResize(kept, Eigen::NoChange);
  bank.theta.conservativeResize(kept, Eigen::NoChange);
  bank.theta_minus.conservativeResize(kept, Eigen::NoChange);
  bank.fit_errors.conservativeResize(kept);
  bank.low_retention = bank.retention() < 0.5;
  return bank;
}

PairBank make_pair_bank(const SpectralBasis& basis, const std::vector<PairTriple>& triples) {
  const detail::ImpulseFitter fitter(basis);
  PairBank bank = allocate(triples.size(), basis);
  bank.requested = triples.size();
  bank.triples = triples;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (!(std::abs(triples[i].a) <= 1.0)) throw DomainError("pair bank: |a| must be at most 1");
    store(bank, static_cast<Eigen::Index>(i), fit_row(triples[i], basis, fitter, FitMode::kClosed, {}),
          basis.k);
  }
  return bank;
}

}  // namespace spectralds

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>

#include "oracles.hpp"

using namespace spectralds;

namespace {

const SpectralBasis& basis_1024() {
  static const SpectralBasis b = compute_basis(HankelSpec{1024}, 24);
  return b;
}

SpectralBasis truncate(const SpectralBasis& b, std::size_t k) {
  SpectralBasis out = b;
  out.k = k;
  out.sigma = b.sigma.head(static_cast<Eigen::Index>(k));
  out.phi = b.phi.topRows(static_cast<Eigen::Index>(k));
  return out;
}

const SpectralBasis& basis_256() {
  static const SpectralBasis b = compute_basis(HankelSpec{256}, 8);
  return b;
}

AlphaSampler symmetric_sampler(std::uint64_t seed) {
  AlphaSamplerConfig cfg;
  cfg.seed = seed;
  cfg.symmetric = true;
  return AlphaSampler(cfg);
}

const PairBank& bank_256() {
  static const PairBank bank = [] {
    PairBankConfig cfg;
    cfg.N = 600;
    cfg.seed = 4;
    return build_pair_bank(basis_256(), cfg, symmetric_sampler(4));
  }();
  return bank;
}

const PracticalResult& practical_256() {
  static const PracticalResult r = [] {
    PracticalConfig cfg;
    cfg.h_start = 8;
    cfg.h = 24;
    cfg.trials = 8;
    cfg.seed = 5;
    return practical_distill(bank_256(), basis_256(), cfg);
  }();
  return r;
}

// Phi reconstruction through the sampled geometric filters, computed row by row.
RowMatrix reconstruct_oracle(const DistilledFilters& d) {
  RowMatrix out = RowMatrix::Zero(d.mtilde.rows(), static_cast<Eigen::Index>(d.L));
  for (Eigen::Index i = 0; i < d.alphas.size(); ++i) {
    const Vector mu = oracle::geometric(d.alphas[i], d.L);
    for (Eigen::Index j = 0; j < d.mtilde.rows(); ++j) out.row(j) += d.mtilde(j, i) * mu.transpose();
  }
  return out;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (std::log(y[i]) - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(AlphaSampler, DefaultDomainAndBands) {
  AlphaSampler s(AlphaSamplerConfig{1});
  const std::vector<double> v = s.next(100000);
  double high = 0, extreme = 0;
  for (double a : v) {
    ASSERT_GE(a, 0.0);
    ASSERT_LT(a, 1.0);
    high += a >= 0.9;
    extreme += a >= 0.99;
  }
  // Mixture mass: P(a >= 0.9) = 0.30 + 0.15 + 0.55 * 0.1, P(a >= 0.99) = 0.15 + 0.30 * 0.1 + 0.55 * 0.01.
  EXPECT_NEAR(high / 1e5, 0.505, 0.01);
  EXPECT_NEAR(extreme / 1e5, 0.1855, 0.01);
  EXPECT_EQ(std::set<double>(v.begin(), v.end()).size(), v.size());
}

TEST(AlphaSampler, SymmetricAndDeterministic) {
  AlphaSampler a = symmetric_sampler(9), b = symmetric_sampler(9);
  const auto va = a.next(2000), vb = b.next(2000);
  EXPECT_EQ(va, vb);
  std::size_t negative = 0;
  for (double x : va) {
    ASSERT_LE(std::abs(x), 1.0);
    negative += x < 0;
  }
  EXPECT_GT(negative, 800u);
  EXPECT_LT(negative, 1200u);
  std::mt19937_64 rng(3);
  const double before = AlphaSampler(AlphaSamplerConfig{9}).next();
  AlphaSampler c(AlphaSamplerConfig{9});
  c.draw(rng);
  EXPECT_EQ(c.next(), before);
}

TEST(AlphaSampler, RejectsBadConfig) {
  AlphaSamplerConfig cfg;
  cfg.weight_body = -1.0;
  EXPECT_THROW(AlphaSampler{cfg}, DomainError);
  AlphaSamplerConfig edges;
  edges.high_low = 1.5;
  EXPECT_THROW(AlphaSampler{edges}, DomainError);
}

TEST(GeometricFilters, RowsMatchOracle) {
  Vector a(4);
  a << 0.0, 0.5, -0.7, 0.999;
  const RowMatrix g = geometric_filters(a, 300);
  for (Eigen::Index i = 0; i < 4; ++i)
    EXPECT_LE((g.row(i).transpose() - oracle::geometric(a[i], 300)).cwiseAbs().maxCoeff(), 1e-15);
  Vector bad(1);
  bad << 1.2;
  EXPECT_THROW(geometric_filters(bad, 10), DomainError);
}

TEST(FindSpectralRepresentation, ClosedIsProjection) {
  const SpectralBasis& b = basis_1024();
  for (double a : {0.0, 0.3, 0.9, 0.999}) {
    const Vector m = find_spectral_representation(a, b);
    const Vector mu = oracle::geometric(a, 1024);
    for (Eigen::Index j = 0; j < 24; ++j) EXPECT_NEAR(m[j], b.phi.row(j).dot(mu), 1e-14);
  }
}

TEST(FindSpectralRepresentation, EdgeCases) {
  const SpectralBasis& b = basis_1024();
  EXPECT_EQ(find_spectral_representation(1.0, b), Vector::Zero(24));
  const Vector e1 = find_spectral_representation(0.0, b);
  for (Eigen::Index j = 0; j < 24; ++j) EXPECT_EQ(e1[j], b.phi(j, 0));
  EXPECT_THROW(find_spectral_representation(-0.5, b), DomainError);
}

TEST(FindSpectralRepresentation, ResidualAtHalf) {
  const SpectralBasis& b = basis_1024();
  const Vector m = find_spectral_representation(0.5, b);
  EXPECT_LE((b.phi.transpose() * m - oracle::geometric(0.5, 1024)).norm(), 1e-3);
}

TEST(FindSpectralRepresentation, GradientModeAgrees) {
  const SpectralBasis b = truncate(basis_1024(), 8);
  SpectralGdConfig gd;
  gd.seed = 2;
  const Vector closed = find_spectral_representation(0.9, b);
  const Vector sgd = find_spectral_representation(0.9, b, RepresentationMode::kGd, gd);
  EXPECT_LE((closed - sgd).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(FindSpectralRepresentation, ExponentialDecayInK) {
  const SpectralBasis& b = basis_1024();
  const std::vector<double> ks{4, 8, 16, 24};
  std::vector<double> residuals;
  for (double k : ks)
    residuals.push_back(oracle::projection_residual(truncate(b, static_cast<std::size_t>(k)), oracle::geometric(0.9, 1024)));
  for (std::size_t i = 1; i < residuals.size(); ++i) EXPECT_LT(residuals[i], residuals[i - 1]);
  EXPECT_LT(log_slope(ks, residuals), 0.0);
  EXPECT_LE(residuals.back(), 1e-3);
}

TEST(SpectralToLds, PseudoinverseAndDiagnostics) {
  const SpectralBasis b = truncate(basis_1024(), 8);
  AlphaSampler s(AlphaSamplerConfig{11});
  const SpectralToLdsResult r = spectral_to_lds(b, 32, s);
  ASSERT_EQ(r.m.rows(), 32);
  ASSERT_EQ(r.filters.mtilde.rows(), 8);
  ASSERT_EQ(r.filters.mtilde.cols(), 32);
  EXPECT_LE((r.filters.mtilde * r.m - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((r.filters.mtilde - oracle::normal_equation_pinv(r.m)).cwiseAbs().maxCoeff(),
            1e-6 * r.filters.mtilde.cwiseAbs().maxCoeff());
  Eigen::JacobiSVD<Matrix> svd(r.filters.mtilde);
  EXPECT_NEAR(r.lambda_max, svd.singularValues()[0], 1e-9 * r.lambda_max);
  const double err = (b.phi - reconstruct_oracle(r.filters)).norm();
  EXPECT_NEAR(r.error_fro, err, 1e-9 * std::max(1.0, err));
  EXPECT_NEAR(reconstruction_error(r.filters, b), err, 1e-9 * std::max(1.0, err));
}

TEST(SpectralToLds, ErrorChainHolds) {
  const SpectralBasis b = truncate(basis_1024(), 16);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    AlphaSampler s(AlphaSamplerConfig{seed});
    const SpectralToLdsResult r = spectral_to_lds(b, 64, s);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < r.m.rows(); ++i)
      sum += (b.phi.transpose() * r.m.row(i).transpose() - oracle::geometric(r.filters.alphas[i], 1024)).norm();
    EXPECT_NEAR(r.residual_sum, sum, 1e-9 * sum);
    EXPECT_LE(r.error_fro, r.lambda_max * sum);
  }
}

TEST(SpectralToLds, Overparameterisation) {
  const SpectralBasis& b = basis_1024();
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AlphaSampler s1(AlphaSamplerConfig{seed}), s4(AlphaSamplerConfig{seed});
    improved += spectral_to_lds(b, 96, s4).lambda_max < spectral_to_lds(b, 24, s1).lambda_max;
  }
  EXPECT_GE(improved, 8);
}

TEST(SpectralToLds, Preconditions) {
  const SpectralBasis b = truncate(basis_1024(), 8);
  AlphaSampler s(AlphaSamplerConfig{1});
  EXPECT_THROW(spectral_to_lds(b, 4, s), DimensionError);
  Vector alphas = Vector::LinSpaced(8, -0.5, 0.9);
  EXPECT_THROW(spectral_to_lds(b, alphas), DomainError);
}

TEST(PairBank, RowsAreExactImpulses) {
  const PairBank& bank = bank_256();
  for (std::size_t i = 0; i < bank.size(); i += 37) {
    const PairTriple& p = bank.triples[i];
    Vector expected(256);
    double power = 1.0;
    for (Eigen::Index t = 0; t < 256; ++t) {
      expected[t] = p.c * power * p.b;
      power *= p.a;
    }
    EXPECT_LE((bank.psi.row(static_cast<Eigen::Index>(i)).transpose() - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PairBank, CoefficientsReproduceRows) {
  const PairBank& bank = bank_256();
  const SpectralBasis& b = basis_256();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Vector recon = Vector::Zero(256);
    for (Eigen::Index j = 0; j < 8; ++j) {
      recon += bank.theta(r, j) * b.phi.row(j).transpose();
      recon += bank.theta_minus(r, j) * oracle::alternate(b.phi.row(j).transpose());
    }
    const Vector psi = bank.psi.row(r).transpose();
    EXPECT_NEAR((recon - psi).norm() / psi.norm(), bank.fit_errors[r], 1e-9);
    ASSERT_LE(bank.fit_errors[r], 1e-2);
  }
}

TEST(PairBank, UnitImpulseRow) {
  const SpectralBasis& b = basis_256();
  const PairBank bank = make_pair_bank(b, {PairTriple{0.0, 1.0, 1.0}});
  EXPECT_EQ(bank.psi.row(0).transpose(), Vector::Unit(256, 0));
  // The joint fit splits e_1 evenly between a filter and its sign-alternated twin.
  EXPECT_LE((bank.theta.row(0) - bank.theta_minus.row(0)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(bank.fit_errors[0], 1e-3);
}

TEST(PairBank, RetentionAndDeterminism) {
  const SpectralBasis& b = basis_1024();
  PairBankConfig cfg;
  cfg.N = 1000;
  cfg.seed = 7;
  const PairBank bank = build_pair_bank(b, cfg, symmetric_sampler(7));
  EXPECT_GE(bank.retention(), 0.95);
  EXPECT_FALSE(bank.low_retention);
  set_thread_count(1);
  const PairBank serial = build_pair_bank(b, cfg, symmetric_sampler(7));
  set_thread_count(0);
  EXPECT_EQ(bank.psi, serial.psi);
  EXPECT_EQ(bank.theta, serial.theta);
  EXPECT_EQ(bank.fit_errors, serial.fit_errors);
}

TEST(PairBank, LowRetentionFlag) {
  PairBankConfig cfg;
  cfg.N = 200;
  cfg.fit_threshold = 1e-12;
  const PairBank bank = build_pair_bank(basis_256(), cfg, symmetric_sampler(1));
  EXPECT_TRUE(bank.low_retention);
  for (Eigen::Index i = 0; i < bank.fit_errors.size(); ++i) EXPECT_LE(bank.fit_errors[i], 1e-12);
  PairBankConfig empty;
  empty.N = 0;
  EXPECT_THROW(build_pair_bank(basis_256(), empty, symmetric_sampler(1)), DomainError);
}

TEST(SelectRows, GreedyCurveNonIncreasing) {
  PracticalConfig cfg;
  cfg.h_start = 8;
  cfg.h = 30;
  cfg.trials = 6;
  cfg.seed = 3;
  const SelectionResult sel = select_rows(bank_256(), basis_256(), cfg);
  ASSERT_EQ(sel.rows.size(), 30u);
  ASSERT_EQ(sel.curve.size(), 23u);
  EXPECT_EQ(std::set<std::size_t>(sel.rows.begin(), sel.rows.end()).size(), 30u);
  for (std::size_t i = 1; i < sel.curve.size(); ++i) EXPECT_LE(sel.curve[i], sel.curve[i - 1] * (1 + 1e-9));
  EXPECT_NEAR(sel.curve.back(), subset_error(bank_256(), basis_256(), sel.rows, SubsetObjective::kLeastSquares),
              1e-5 * sel.curve.back() + 1e-14);
  EXPECT_EQ(sel.trial_error, *std::min_element(sel.trial_errors.begin(), sel.trial_errors.end()));
}

TEST(SelectRows, ThreadCountIndependent) {
  PracticalConfig cfg;
  cfg.h_start = 8;
  cfg.h = 20;
  cfg.trials = 5;
  cfg.seed = 4;
  set_thread_count(1);
  const SelectionResult a = select_rows(bank_256(), basis_256(), cfg);
  set_thread_count(4);
  const SelectionResult c = select_rows(bank_256(), basis_256(), cfg);
  set_thread_count(0);
  EXPECT_EQ(a.rows, c.rows);
  EXPECT_EQ(a.curve, c.curve);
}

TEST(SelectRows, Preconditions) {
  PracticalConfig cfg;
  cfg.h_start = 10;
  cfg.h = 5;
  EXPECT_THROW(select_rows(bank_256(), basis_256(), cfg), DomainError);
  cfg.h_start = 8;
  cfg.h = 100000;
  EXPECT_THROW(select_rows(bank_256(), basis_256(), cfg), DimensionError);
}

TEST(PracticalDistill, ExactSpanningBank) {
  const SpectralBasis& b = basis_256();
  PairBank bank;
  bank.requested = 8;
  bank.psi = b.phi;
  bank.theta = RowMatrix::Identity(8, 8);
  bank.theta_minus = RowMatrix::Zero(8, 8);
  bank.fit_errors = Vector::Zero(8);
  bank.triples.assign(8, PairTriple{0.5, 1.0, 1.0});
  PracticalConfig cfg;
  cfg.h_start = 8;
  cfg.h = 8;
  cfg.trials = 1;
  const PracticalResult r = practical_distill(bank, b, cfg);
  EXPECT_LE(r.pre_gd_error, 1e-12);
  EXPECT_LE(r.selection.trial_error, 1e-12);
}

TEST(PracticalDistill, FineTuneMonotoneAndImproves) {
  const PracticalResult& r = practical_256();
  for (std::size_t i = 1; i < r.gd_losses.size(); ++i) EXPECT_LT(r.gd_losses[i], r.gd_losses[i - 1]);
  EXPECT_LE(r.post_gd_error, r.pre_gd_error);
  EXPECT_LE(r.filters.error_fro, 1e-4);
  EXPECT_EQ(r.filters.h(), 24u);
}

TEST(PracticalDistill, FoldedFiltersReconstruct) {
  const PracticalResult& r = practical_256();
  const double err = (basis_256().phi - reconstruct_oracle(r.filters)).norm();
  EXPECT_NEAR(r.filters.error_fro, err, 1e-9 + 1e-6 * err);
  for (std::size_t i = 0; i < r.selection.rows.size(); ++i)
    EXPECT_EQ(r.filters.alphas[static_cast<Eigen::Index>(i)], bank_256().triples[r.selection.rows[i]].a);
  Eigen::JacobiSVD<Matrix> svd(r.filters.mtilde);
  EXPECT_NEAR(r.filters.lambda_max, svd.singularValues()[0], 1e-9 * r.filters.lambda_max);
}

TEST(PracticalDistill, PlainFineTuneMonotone) {
  PracticalConfig cfg;
  cfg.h_start = 8;
  cfg.h = 24;
  cfg.trials = 4;
  cfg.seed = 5;
  cfg.fine_tune = FineTuneMethod::kPlain;
  cfg.max_gd_steps = 100;
  const PracticalResult r = practical_distill(bank_256(), basis_256(), cfg);
  for (std::size_t i = 1; i < r.gd_losses.size(); ++i) EXPECT_LT(r.gd_losses[i], r.gd_losses[i - 1]);
}

TEST(PracticalDistill, PseudoinverseObjective) {
  PracticalConfig cfg;
  cfg.h_start = 8;
  cfg.h = 12;
  cfg.trials = 3;
  cfg.objective = SubsetObjective::kCoefficientPseudoinverse;
  const PracticalResult r = practical_distill(bank_256(), basis_256(), cfg);
  for (std::size_t i = 1; i < r.selection.curve.size(); ++i)
    EXPECT_LE(r.selection.curve[i], r.selection.curve[i - 1] * (1 + 1e-9));
  EXPECT_TRUE(std::isfinite(r.filters.error_fro));
}

TEST(AssembleFilterLds, ImpulseMatchesReconstruction) {
  const DistilledFilters& d = practical_256().filters;
  const DiagonalLds pos = assemble_filter_lds(d, false);
  EXPECT_EQ(pos.h(), 24u);
  const ImpulseResponse psi = impulse_response(pos, 256);
  const RowMatrix recon = reconstruct_filters(d);
  for (std::size_t j = 0; j < 8; ++j)
    EXPECT_LE((psi.channel(j, 0) - recon.row(static_cast<Eigen::Index>(j)).transpose()).cwiseAbs().maxCoeff(),
              1e-14 * d.mtilde.cwiseAbs().rowwise().sum().maxCoeff());

  const DiagonalLds both = assemble_filter_lds(d, true);
  EXPECT_EQ(both.h(), 48u);
  const ImpulseResponse psi2 = impulse_response(both, 256);
  for (std::size_t j = 0; j < 8; ++j)
    EXPECT_LE((psi2.channel(8 + j, 0) - negate_filter(psi2.channel(j, 0))).cwiseAbs().maxCoeff(),
              1e-14 * d.mtilde.cwiseAbs().rowwise().sum().maxCoeff());
}

TEST(AssembleFilterLds, OutputsTrackProjections) {
  BasisOptions iterative;
  iterative.dense_threshold = 1024;
  const SpectralBasis b = compute_basis(HankelSpec{2048}, 12, iterative);
  PairBankConfig bank_cfg;
  bank_cfg.N = 1500;
  bank_cfg.seed = 21;
  const PairBank bank = build_pair_bank(b, bank_cfg, symmetric_sampler(21));
  PracticalConfig cfg;
  cfg.h_start = 12;
  cfg.h = 48;
  cfg.seed = 21;
  const DistilledFilters d = practical_distill(bank, b, cfg).filters;
  const Sequence u = oracle::random_sequence(2048, 1, 22);
  const Sequence y = simulate(assemble_filter_lds(d, true), u);
  const Projections p = project_inputs(b, u);
  const Vector errors = per_filter_errors(d, b);
  double worst = 0.0;
  for (std::size_t t = 0; t < 2048; ++t)
    for (std::size_t j = 0; j < 12; ++j) {
      const double bound = errors[static_cast<Eigen::Index>(j)] * u.norm() + 1e-12;
      const double dp = std::abs(y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) - p.u_plus(t, j, 0));
      const double dm = std::abs(y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(12 + j)) - p.u_minus(t, j, 0));
      ASSERT_LE(dp, bound);
      ASSERT_LE(dm, bound);
      worst = std::max({worst, dp, dm});
    }
  EXPECT_LE(worst, 1e-5);
}

TEST(RecurrentStu, ZeroParamsGiveZero) {
  RecurrentStu model = distill_stu_model(StuParams::zeros(8, 3, 2), practical_256().filters);
  EXPECT_EQ(model.state_dim(), 2 * 24 * 2u);
  EXPECT_EQ(model.run(oracle::random_sequence(100, 2, 1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RecurrentStu, TracksConvolutionWithinFilterError) {
  const SpectralBasis& b = basis_256();
  const DistilledFilters& d = practical_256().filters;
  const StuParams p = oracle::random_params(8, 4, 4, 30);
  const Sequence u = oracle::random_sequence(256, 4, 31);
  const Sequence conv = forward_nonar(p, b, u);
  RecurrentStu model = distill_stu_model(p, d);
  const Sequence rec = model.run(u);
  const Vector e = per_filter_errors(d, b);
  for (Eigen::Index o = 0; o < 4; ++o) {
    double bound = 0.0;
    for (std::size_t j = 0; j < 8; ++j)
      for (Eigen::Index c = 0; c < 4; ++c)
        bound += (std::abs(p.m_plus[j](o, c)) + std::abs(p.m_minus[j](o, c))) * e[static_cast<Eigen::Index>(j)] *
                 u.col(c).norm();
    EXPECT_LE((rec.col(o) - conv.col(o)).cwiseAbs().maxCoeff(), bound + 1e-12);
  }
  // Stepping again after run() starts from a fresh state.
  EXPECT_EQ(model.run(u), rec);
}

TEST(RecurrentStu, AutoregressiveMatchesConvolutionalForm) {
  const SpectralBasis& b = basis_256();
  StuParams p = oracle::random_params(8, 2, 2, 40, 0.2);
  p.ar = ArTerms{{Matrix::Identity(2, 2) * 0.3, Matrix::Ones(2, 2) * 0.1, Matrix::Identity(2, 2) * -0.2}, true};
  const Sequence u = oracle::random_sequence(128, 2, 41);
  const Sequence conv = forward_ar(p, b, u);
  RecurrentStu model = distill_stu_model(p, practical_256().filters);
  const Sequence rec = model.run(u);
  EXPECT_LE(oracle::max_abs(rec - conv), 1e-3 * oracle::max_abs(conv));
}

TEST(RecurrentStu, StepCostIndependentOfPosition) {
  const DistilledFilters& d = practical_256().filters;
  const StuParams p = oracle::random_params(8, 2, 2, 50, 0.1);
  RecurrentStu fresh = distill_stu_model(p, d), advanced = distill_stu_model(p, d);
  const Sequence inputs = oracle::random_sequence(4096, 2, 51);
  Vector y(2);
  for (int i = 0; i < 200000; ++i) advanced.step(inputs.row(i % 4096).data(), y.data());
  constexpr int chunks = 60, per_chunk = 2000;
  std::vector<double> t_fresh, t_advanced;
  auto time_chunk = [&](RecurrentStu& model) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < per_chunk; ++i) model.step(inputs.row(i % 4096).data(), y.data());
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  for (int c = 0; c < chunks; ++c) {
    t_fresh.push_back(time_chunk(fresh));
    t_advanced.push_back(time_chunk(advanced));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double ratio = median(t_advanced) / median(t_fresh);
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
}

TEST(RecurrentStu, KMismatch) {
  EXPECT_THROW(distill_stu_model(StuParams::zeros(6, 1, 1), practical_256().filters), DimensionError);
}

TEST(LdsToLds, ScalarSourceWithDistilledAlpha) {
  const SpectralBasis& b = basis_256();
  const DistilledFilters& d = practical_256().filters;
  double a = 0.0;
  for (Eigen::Index i = 0; i < d.alphas.size(); ++i)
    if (d.alphas[i] >= 0 && d.alphas[i] < 0.99) a = d.alphas[i];
  DiagonalLds source;
  source.alpha = Vector::Constant(1, a);
  source.b = Matrix::Constant(1, 1, 1.0);
  source.c = Matrix::Constant(1, 1, 1.0 - a);
  const LdsToLdsResult r = lds_to_lds(source, b, d);
  double coeff = 0.0;
  const Vector e = per_filter_errors(d, b);
  for (std::size_t j = 0; j < 8; ++j)
    coeff += (std::abs(r.fit.params.m_plus[j](0, 0)) + std::abs(r.fit.params.m_minus[j](0, 0))) * e[static_cast<Eigen::Index>(j)];
  EXPECT_LE(r.impulse_error, r.fit.residual + coeff + 1e-12);
  EXPECT_EQ(r.lds.h(), 2 * d.h());
}

TEST(LdsToLds, HighDimensionalSource) {
  const SpectralBasis& b = basis_1024();
  PairBankConfig bank_cfg;
  bank_cfg.N = 2000;
  bank_cfg.seed = 60;
  const PairBank bank = build_pair_bank(b, bank_cfg, symmetric_sampler(60));
  PracticalConfig cfg;
  cfg.h = 80;
  cfg.seed = 60;
  const DistilledFilters d = practical_distill(bank, b, cfg).filters;
  std::mt19937_64 rng(61);
  const DiagonalLds source = random_symmetric_lds(256, 5, 5, 0.99, rng);
  const LdsToLdsResult r = lds_to_lds(source, b, d);
  EXPECT_LE(r.impulse_mse, 1e-4);
  EXPECT_EQ(r.lds.h(), 2 * 80 * 5u);
  EXPECT_EQ(r.lds.n(), 5u);
  EXPECT_EQ(r.lds.m(), 5u);
  const Sequence u = oracle::random_sequence(300, 5, 62);
  EXPECT_LE(oracle::max_abs(simulate(r.lds, u) - oracle::lds_simulate(r.lds, u)), 1e-9 * oracle::max_abs(simulate(r.lds, u)));
}

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace spectralds;

namespace {

const SpectralBasis& basis_256() {
  static const SpectralBasis b = compute_basis(HankelSpec{256}, 8);
  return b;
}

const DistilledFilters& filters_256() {
  static const DistilledFilters d = [] {
    AlphaSamplerConfig sc;
    sc.seed = 8;
    sc.symmetric = true;
    PairBankConfig bc;
    bc.N = 600;
    bc.seed = 8;
    const PairBank bank = build_pair_bank(basis_256(), bc, AlphaSampler(sc));
    PracticalConfig pc;
    pc.h_start = 8;
    pc.h = 24;
    pc.seed = 8;
    return practical_distill(bank, basis_256(), pc).filters;
  }();
  return d;
}

ExperimentConfig small_synth() {
  ExperimentConfig c;
  c.k = 8;
  c.L = 256;
  c.d_h = 20;
  c.d_in = 2;
  c.d_out = 2;
  c.seq_len = 128;
  c.steps = 60;
  c.batch = 8;
  c.eval_batch = 32;
  c.delta = 1e-2;
  return c;
}

}  // namespace

TEST(Summarize, MatchesOracleQuantiles) {
  const std::vector<double> values{5.0, -1.0, 3.5, 2.0, 8.0, 0.25, 4.0};
  const SummaryStats s = summarize(values);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_DOUBLE_EQ(s.q25, oracle::quantile(sorted, 0.25));
  EXPECT_DOUBLE_EQ(s.median, oracle::quantile(sorted, 0.5));
  EXPECT_DOUBLE_EQ(s.q75, oracle::quantile(sorted, 0.75));
  EXPECT_DOUBLE_EQ(s.min, -1.0);
  EXPECT_DOUBLE_EQ(s.max, 8.0);
  EXPECT_NEAR(s.mean, 21.75 / 7.0, 1e-15);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  EXPECT_NEAR(s.stddev, std::sqrt(var / 6.0), 1e-15);
  EXPECT_EQ(summarize({}).max, 0.0);
  EXPECT_EQ(summarize({2.0}).stddev, 0.0);
}

TEST(CondExperiment, SingleFilterIsInverseNorm) {
  const SpectralBasis b = compute_basis(HankelSpec{128}, 1);
  AlphaSamplerConfig sc;
  const auto rows = cond_experiment(b, {1, 4, 16}, {3, 4}, sc);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t s = 0; s < 2; ++s) {
    AlphaSamplerConfig cfg;
    cfg.seed = 3 + s;
    AlphaSampler draw(cfg);
    double sq = 0.0;
    std::size_t row = 0;
    for (std::size_t i = 1; i <= 16; ++i) {
      const double m = b.phi.row(0).dot(oracle::geometric(draw.next(), 128));
      sq += m * m;
      if (i == rows[row].h) {
        EXPECT_NEAR(rows[row].lambdas[s], 1.0 / std::sqrt(sq), 1e-10 / std::sqrt(sq));
        ++row;
      }
    }
  }
  for (const CondRow& r : rows) {
    EXPECT_LE(r.lambda_min, r.lambda_median);
    EXPECT_LE(r.lambda_median, r.lambda_max);
    EXPECT_DOUBLE_EQ(r.lambda_h_median, r.lambda_median * static_cast<double>(r.h));
  }
  EXPECT_EQ(cond_table(rows).rows.size(), 6u);
}

TEST(CondExperiment, MoreSamplesNeverHurt) {
  const auto rows = cond_experiment(basis_256(), {8, 16, 32, 64}, {0, 1, 2}, AlphaSamplerConfig{});
  for (std::size_t v = 1; v < rows.size(); ++v)
    for (std::size_t s = 0; s < 3; ++s) EXPECT_LE(rows[v].lambdas[s], rows[v - 1].lambdas[s] * (1 + 1e-9));
  EXPECT_THROW(cond_experiment(basis_256(), {4}, {0}, AlphaSamplerConfig{}), DomainError);
  EXPECT_THROW(cond_experiment(basis_256(), {16, 8}, {0}, AlphaSamplerConfig{}), DomainError);
}

TEST(SubsetCurve, ShapeAndMonotonicity) {
  AlphaSamplerConfig sc;
  sc.seed = 2;
  sc.symmetric = true;
  PairBankConfig bc;
  bc.N = 300;
  const PairBank bank = build_pair_bank(basis_256(), bc, AlphaSampler(sc));
  const auto curves = subset_curve(bank, basis_256(), {8, 12}, 30, 4, 2);
  ASSERT_EQ(curves.size(), 2u);
  EXPECT_EQ(curves[0].errors.size(), 23u);
  EXPECT_EQ(curves[1].errors.size(), 19u);
  for (const auto& c : curves) {
    EXPECT_EQ(c.errors.front(), c.trial_error);
    for (std::size_t i = 1; i < c.errors.size(); ++i) EXPECT_LE(c.errors[i], c.errors[i - 1] * (1 + 1e-9));
  }
  EXPECT_EQ(subset_table(curves).rows.size(), 42u);
  EXPECT_THROW(subset_curve(bank, basis_256(), {8}, 301, 1, 0), DimensionError);
}

TEST(SynthCompare, RecordsAreWellFormed) {
  const ExperimentConfig cfg = small_synth();
  const SynthResult r = synth_compare(cfg, basis_256(), filters_256(), 11);
  for (const RunRecord* rec : {&r.baseline, &r.treatment}) {
    EXPECT_EQ(rec->losses.size(), cfg.steps);
    EXPECT_EQ(rec->wall_times.size(), cfg.steps);
    EXPECT_FALSE(rec->diverged);
    EXPECT_TRUE(std::isfinite(rec->final_mse));
    EXPECT_EQ(rec->run_seed, 11u);
    for (std::size_t i = 1; i < rec->wall_times.size(); ++i) EXPECT_GE(rec->wall_times[i], rec->wall_times[i - 1]);
    for (double l : rec->losses) EXPECT_TRUE(std::isfinite(l));
    EXPECT_EQ(rec->stats.max, *std::max_element(rec->losses.begin(), rec->losses.end()));
  }
  EXPECT_NE(r.baseline.method, r.treatment.method);
  EXPECT_TRUE(std::isfinite(r.stu_mse));
  EXPECT_LT(r.treatment.losses.back(), r.treatment.losses.front());
  EXPECT_LT(r.treatment.final_mse, r.baseline.final_mse);
  const CsvTable t = loss_table({r.baseline, r.treatment});
  EXPECT_EQ(t.rows.size(), 2 * cfg.steps);
}

TEST(SynthCompare, ReproducibleLosses) {
  const ExperimentConfig cfg = small_synth();
  const SynthResult a = synth_compare(cfg, basis_256(), filters_256(), 5);
  set_thread_count(1);
  const SynthResult b = synth_compare(cfg, basis_256(), filters_256(), 5);
  set_thread_count(0);
  EXPECT_EQ(a.baseline.losses, b.baseline.losses);
  EXPECT_EQ(a.treatment.losses, b.treatment.losses);
  EXPECT_EQ(a.treatment.final_mse, b.treatment.final_mse);
  const SynthResult c = synth_compare(cfg, basis_256(), filters_256(), 6);
  EXPECT_NE(a.baseline.losses, c.baseline.losses);
}

TEST(SynthCompare, DivergenceIsFlagged) {
  ExperimentConfig cfg = small_synth();
  cfg.baseline_lr = 1e6;
  const SynthResult r = synth_compare(cfg, basis_256(), filters_256(), 1);
  EXPECT_TRUE(r.baseline.diverged);
  EXPECT_LT(r.baseline.diverged_at, cfg.steps);
  EXPECT_TRUE(std::isinf(r.baseline.final_mse));
  EXPECT_FALSE(r.treatment.diverged);
}

TEST(SynthCompare, Preconditions) {
  ExperimentConfig cfg = small_synth();
  cfg.seq_len = 512;
  EXPECT_THROW(synth_compare(cfg, basis_256(), filters_256(), 0), DimensionError);
  cfg = small_synth();
  cfg.delta = 0.0;
  EXPECT_THROW(synth_compare(cfg, basis_256(), filters_256(), 0), DomainError);
}

TEST(RuntimeBench, RowsAndValidation) {
  RuntimeDims dims;
  dims.channels = 2;
  dims.k = 8;
  dims.state_dim = 48;
  for (RuntimeModel model : {RuntimeModel::kConvStu, RuntimeModel::kRecurrentLds}) {
    const auto rows = runtime_bench({32, 64, 128}, model, dims, 3, basis_256());
    ASSERT_EQ(rows.size(), 3u);
    for (const RuntimeRow& r : rows) {
      EXPECT_GT(r.total_seconds, 0.0);
      EXPECT_NEAR(r.per_token_seconds * static_cast<double>(r.T), r.total_seconds, 1e-12);
      EXPECT_TRUE(std::isfinite(r.checksum));
    }
    EXPECT_EQ(runtime_table(rows, "m", dims).rows.size(), 3u);
  }
  EXPECT_THROW(runtime_bench({64, 32}, RuntimeModel::kConvStu, dims, 0, basis_256()), DimensionError);
  EXPECT_THROW(runtime_bench({512}, RuntimeModel::kConvStu, dims, 0, basis_256()), DimensionError);
  dims.state_dim = 47;
  EXPECT_THROW(runtime_bench({32}, RuntimeModel::kRecurrentLds, dims, 0, basis_256()), DimensionError);
}

TEST(RuntimeBench, ChecksumIsSeedDeterministic) {
  RuntimeDims dims;
  dims.k = 8;
  dims.state_dim = 32;
  const auto a = runtime_bench({50}, RuntimeModel::kConvStu, dims, 9, basis_256());
  const auto b = runtime_bench({50}, RuntimeModel::kConvStu, dims, 9, basis_256());
  EXPECT_EQ(a[0].checksum, b[0].checksum);
}

#include "spectralds/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "linalg.hpp"
#include "spectralds/error.hpp"
#include "spectralds/parallel.hpp"

namespace spectralds {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repetitions == 0 || k == 0 || L < 2 || d_in == 0 || d_out == 0 || d_h == 0 ||
      seq_len == 0 || batch == 0 || eval_batch == 0)
    throw DomainError("experiment sizes must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("experiment delta must lie in (0, 1)");
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  s.min = values.front();
  s.max = values.back();
  s.q25 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q75 = quantile(values, 0.75);
  return s;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::vector<CondRow> cond_experiment(const SpectralBasis& basis,
                                     const std::vector<std::size_t>& h_values,
                                     const std::vector<std::uint64_t>& seeds,
                                     const AlphaSamplerConfig& sampler) {
  if (h_values.empty()) return {};
  if (!std::is_sorted(h_values.begin(), h_values.end()) || h_values.front() < basis.k)
    throw DomainError("cond_experiment: h values must be ascending and at least k");
  const std::size_t h_max = h_values.back();
  std::vector<std::vector<double>> lambdas(seeds.size(), std::vector<double>(h_values.size()));
  parallel_for(seeds.size(), [&](std::size_t s) {
    AlphaSamplerConfig cfg = sampler;
    cfg.seed = seeds[s];
    cfg.symmetric = false;
    AlphaSampler draw(cfg);
    // One growing alpha sequence per seed; each h uses its prefix.
    Vector alphas(static_cast<Eigen::Index>(h_max));
    for (Eigen::Index i = 0; i < alphas.size(); ++i) alphas[i] = draw.next();
    const RowMatrix mus = geometric_filters(alphas, basis.L);
    const Matrix m_all = mus * basis.phi.transpose();
    for (std::size_t v = 0; v < h_values.size(); ++v) {
      const auto h = static_cast<Eigen::Index>(h_values[v]);
      Eigen::JacobiSVD<Matrix> svd(m_all.topRows(h));
      const Vector& sv = svd.singularValues();
      lambdas[s][v] = 1.0 / sv[sv.size() - 1];
    }
  });
  std::vector<CondRow> rows(h_values.size());
  for (std::size_t v = 0; v < h_values.size(); ++v) {
    CondRow& r = rows[v];
    r.h = h_values[v];
    for (std::size_t s = 0; s < seeds.size(); ++s) r.lambdas.push_back(lambdas[s][v]);
    const SummaryStats st = summarize(r.lambdas);
    r.lambda_mean = st.mean;
    r.lambda_min = st.min;
    r.lambda_max = st.max;
    r.lambda_median = st.median;
    r.lambda_h_median = st.median * static_cast<double>(r.h);
  }
  return rows;
}

std::vector<SubsetCurve> subset_curve(const PairBank& bank, const SpectralBasis& basis,
                                      const std::vector<std::size_t>& h_start_values,
                                      std::size_t h_max, std::size_t trials,
                                      std::uint64_t seed) {
  if (h_max > bank.size()) throw DimensionError("subset_curve: h_max exceeds the bank size");
  std::vector<SubsetCurve> out;
  for (std::size_t h_start : h_start_values) {
    PracticalConfig cfg;
    cfg.h_start = h_start;
    cfg.h = h_max;
    cfg.trials = trials;
    cfg.seed = seed;
    const SelectionResult sel = select_rows(bank, basis, cfg);
    SubsetCurve curve;
    curve.h_start = h_start;
    curve.trial_error = sel.trial_error;
    curve.errors = sel.curve;
    out.push_back(std::move(curve));
  }
  return out;
}

CsvTable cond_table(const std::vector<CondRow>& rows) {
  CsvTable t;
  t.header = {"h", "seed_index", "lambda_max", "lambda_max_times_h"};
  for (const auto& r : rows)
    for (std::size_t s = 0; s < r.lambdas.size(); ++s)
      t.rows.push_back({std::to_string(r.h), std::to_string(s), fmt(r.lambdas[s]),
                        fmt(r.lambdas[s] * static_cast<double>(r.h))});
  return t;
}

CsvTable subset_table(const std::vector<SubsetCurve>& curves) {
  CsvTable t;
  t.header = {"h_start", "h", "error"};
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.errors.size(); ++i)
      t.rows.push_back({std::to_string(c.h_start), std::to_string(c.h_start + i), fmt(c.errors[i])});
  return t;
}

CsvTable loss_table(const std::vector<RunRecord>& records) {
  CsvTable t;
  t.header = {"method", "run_seed", "step", "loss", "wall_seconds"};
  for (const auto& r : records)
    for (std::size_t s = 0; s < r.losses.size(); ++s)
      t.rows.push_back({r.method, std::to_string(r.run_seed), std::to_string(s), fmt(r.losses[s]),
                        s < r.wall_times.size() ? fmt(r.wall_times[s]) : ""});
  return t;
}

CsvTable runtime_table(const std::vector<RuntimeRow>& rows, const std::string& model,
                       const RuntimeDims& dims) {
  CsvTable t;
  t.header = {"model", "state_dim", "channels", "k", "T", "total_seconds", "per_token_seconds"};
  for (const auto& r : rows)
    t.rows.push_back({model, std::to_string(dims.state_dim), std::to_string(dims.channels),
                      std::to_string(dims.k), std::to_string(r.T), fmt(r.total_seconds),
                      fmt(r.per_token_seconds)});
  return t;
}

}  // namespace spectralds

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectralds/distill.hpp"
#include "spectralds/spectral_basis.hpp"

namespace spectralds {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t repetitions = 5;

  // Filter bank and distillation sizes.
  std::size_t k = 24;
  std::size_t L = 1024;
  std::vector<std::size_t> h_values;
  std::size_t h_start = 24;
  std::size_t h_max = 80;
  std::size_t trials = 16;
  std::size_t bank_size = 2000;

  // Synthetic system identification.
  double delta = 1e-4;
  std::size_t d_in = 10;
  std::size_t d_out = 10;
  std::size_t d_h = 100;
  std::size_t seq_len = 1024;
  std::size_t steps = 300;
  std::size_t batch = 32;
  std::size_t eval_batch = 256;
  double baseline_lr = 1e-4;
  double treatment_lr = 1.0;
  bool noisy = false;
  double state_noise_variance = 0.5;
  double output_noise_variance = 5.0;

  void validate() const;
};

struct SummaryStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct RunRecord {
  std::string method;
  std::string optimizer;
  ExperimentConfig config;
  std::uint64_t run_seed = 0;
  std::vector<double> losses;     // per optimizer step
  std::vector<double> wall_times; // cumulative seconds after each step
  bool diverged = false;
  std::size_t diverged_at = 0;
  double final_mse = 0.0;         // held-out evaluation of the returned model
  SummaryStats stats;             // over losses
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const;
};

// Overparameterisation study.
struct CondRow {
  std::size_t h = 0;
  std::vector<double> lambdas; // one per seed
  double lambda_mean = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_median = 0.0;
  double lambda_h_median = 0.0;
};

std::vector<CondRow> cond_experiment(const SpectralBasis& basis,
                                     const std::vector<std::size_t>& h_values,
                                     const std::vector<std::uint64_t>& seeds,
                                     const AlphaSamplerConfig& sampler);

// Reconstruction error against state dimension for several initial subset sizes.
struct SubsetCurve {
  std::size_t h_start = 0;
  double trial_error = 0.0;
  std::vector<double> errors; // index i holds the error at h_start + i
};

std::vector<SubsetCurve> subset_curve(const PairBank& bank, const SpectralBasis& basis,
                                      const std::vector<std::size_t>& h_start_values,
                                      std::size_t h_max, std::size_t trials,
                                      std::uint64_t seed);

// Direct LDS gradient descent against spectral fitting followed by distillation.
struct SynthResult {
  RunRecord baseline;
  RunRecord treatment;
  double stu_mse = 0.0; // held-out error of the fitted spectral model before distillation
};

SynthResult synth_compare(const ExperimentConfig& config, const SpectralBasis& basis,
                          const DistilledFilters& distilled, std::uint64_t run_seed);

enum class RuntimeModel { kConvStu, kRecurrentLds };

struct RuntimeDims {
  std::size_t channels = 1;   // n = m
  std::size_t k = 24;
  std::size_t state_dim = 100; // total recurrent states per channel, 2h
  std::size_t repeats = 1;
};

struct RuntimeRow {
  std::size_t T = 0;
  double total_seconds = 0.0;
  double per_token_seconds = 0.0;
  double checksum = 0.0; // sum of generated outputs, defeats dead-code elimination
};

std::vector<RuntimeRow> runtime_bench(const std::vector<std::size_t>& T_values,
                                      RuntimeModel model, const RuntimeDims& dims,
                                      std::uint64_t seed, const SpectralBasis& basis);

CsvTable cond_table(const std::vector<CondRow>& rows);
CsvTable subset_table(const std::vector<SubsetCurve>& curves);
CsvTable loss_table(const std::vector<RunRecord>& records);
CsvTable runtime_table(const std::vector<RuntimeRow>& rows, const std::string& model,
                       const RuntimeDims& dims);

}  // namespace spectralds

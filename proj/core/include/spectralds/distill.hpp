#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spectralds/lds.hpp"
#include "spectralds/spectral_basis.hpp"
#include "spectralds/stu.hpp"
#include "spectralds/tensor.hpp"

namespace spectralds {

// Mixture of uniform bands over [0, 1), optionally mirrored onto negatives.
struct AlphaSamplerConfig {
  std::uint64_t seed = 0;
  double weight_body = 0.55;
  double weight_high = 0.30;
  double weight_extreme = 0.15;
  double body_low = 0.0;
  double high_low = 0.9;
  double extreme_low = 0.99;
  double upper = 1.0;
  bool symmetric = false;
};

class AlphaSampler {
public:
  explicit AlphaSampler(AlphaSamplerConfig config = {});

  const AlphaSamplerConfig& config() const { return config_; }

  double next();
  std::vector<double> next(std::size_t count);

  // Draw using an external engine; does not touch the internal stream.
  double draw(std::mt19937_64& rng) const;

private:
  AlphaSamplerConfig config_;
  std::mt19937_64 rng_;
};

struct DistilledFilters {
  std::size_t L = 0;
  Vector alphas; // h
  Matrix mtilde; // k x h
  double error_fro = 0.0;
  double lambda_max = 0.0;

  std::size_t k() const { return static_cast<std::size_t>(mtilde.rows()); }
  std::size_t h() const { return static_cast<std::size_t>(alphas.size()); }
};

// Geometric filters (1 - a) a^(t-1) stacked as rows, h x L. Accepts a in [-1, 1].
RowMatrix geometric_filters(const Vector& alphas, std::size_t L);

// mtilde * stack(mu_L(alpha_i)).
RowMatrix reconstruct_filters(const DistilledFilters& distilled);

// Per-filter and Frobenius reconstruction errors against the basis.
Vector per_filter_errors(const DistilledFilters& distilled, const SpectralBasis& basis);
double reconstruction_error(const DistilledFilters& distilled, const SpectralBasis& basis);

enum class RepresentationMode { kClosed, kGd };

struct SpectralGdConfig {
  std::uint64_t seed = 0;
  std::size_t batch = 16;
  double lr = 0.0; // 0 selects 1 / (k + 2)
  std::size_t max_steps = 20000;
  std::size_t patience = 200;
  double tolerance = 1e-12;
};

Vector find_spectral_representation(double alpha, const SpectralBasis& basis,
                                    RepresentationMode mode = RepresentationMode::kClosed,
                                    const SpectralGdConfig& gd = {});

struct SpectralToLdsResult {
  DistilledFilters filters;
  Matrix m;                  // h x k coefficient rows
  double lambda_max = 0.0;
  double error_fro = 0.0;
  double residual_sum = 0.0; // sum_i || m_i^T Phi - mu_L(alpha_i) ||
  std::size_t resamples = 0;
};

inline constexpr double kPinvCutoff = 1e-12;

SpectralToLdsResult spectral_to_lds(const SpectralBasis& basis, std::size_t h,
                                    AlphaSampler& sampler);
SpectralToLdsResult spectral_to_lds(const SpectralBasis& basis, const Vector& alphas);

struct PairTriple {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

enum class FitMode { kClosed, kGd };

struct PairBankConfig {
  std::size_t N = 1000;
  double fit_threshold = 1e-2; // relative to ||psi_i||
  FitMode mode = FitMode::kClosed;
  std::uint64_t seed = 0;
  IoFitConfig gd;
};

struct PairBank {
  std::size_t requested = 0;
  std::vector<PairTriple> triples;
  RowMatrix psi;         // N x L
  RowMatrix theta;       // N x k, positive-filter coefficients
  RowMatrix theta_minus; // N x k, negative-filter coefficients
  Vector fit_errors;     // N
  bool low_retention = false;

  std::size_t size() const { return triples.size(); }
  double retention() const;
};

PairBank build_pair_bank(const SpectralBasis& basis, const PairBankConfig& config,
                         const AlphaSampler& sampler);

// Bank assembled from caller-provided triples; no filtering.
PairBank make_pair_bank(const SpectralBasis& basis, const std::vector<PairTriple>& triples);

enum class SubsetObjective {
  // || Phi - Phi P_S ||, the best reconstruction from the rows in S.
  kLeastSquares,
  // || Phi - pinv(Theta_S) Psi_S ||.
  kCoefficientPseudoinverse,
};

enum class FineTuneMethod { kGaussNewton, kPlain };

struct PracticalConfig {
  std::size_t h_start = 24;
  std::size_t h = 80;
  std::size_t trials = 16;
  std::uint64_t seed = 0;
  SubsetObjective objective = SubsetObjective::kLeastSquares;
  FineTuneMethod fine_tune = FineTuneMethod::kGaussNewton;
  std::size_t max_gd_steps = 500;
  std::size_t patience = 50;
  double relative_tolerance = 1e-10;
  // Rows whose component outside the current span is below this fraction of
  // their norm are treated as dependent and skipped.
  double dependence_tolerance = 1e-11;
};

struct SelectionResult {
  std::vector<std::size_t> rows;     // selected bank rows, in order of selection
  double trial_error = 0.0;          // best-of-trials error at h_start
  std::vector<double> trial_errors;  // one per trial
  std::vector<double> curve;         // error after h_start, then after each addition
  std::vector<std::size_t> dropped;  // rows rejected as dependent during the trials
};

SelectionResult select_rows(const PairBank& bank, const SpectralBasis& basis,
                            const PracticalConfig& config);

// Reconstruction error of the given row subset under the chosen objective.
double subset_error(const PairBank& bank, const SpectralBasis& basis,
                    const std::vector<std::size_t>& rows, SubsetObjective objective);

struct PracticalResult {
  DistilledFilters filters;
  SelectionResult selection;
  double pre_gd_error = 0.0;
  double post_gd_error = 0.0;
  std::size_t gd_steps = 0;
  std::vector<double> gd_losses;
};

PracticalResult practical_distill(const PairBank& bank, const SpectralBasis& basis,
                                  const PracticalConfig& config);

DiagonalLds assemble_filter_lds(const DistilledFilters& distilled, bool with_negative);

class RecurrentStu {
public:
  RecurrentStu(const StuParams& params, const DistilledFilters& distilled);

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t state_dim() const { return static_cast<std::size_t>(x_.size()); }

  void reset();
  // Consumes u_t (length n) and writes y_t (length m).
  void step(const double* u_t, double* y_t);
  Vector step(const Vector& u_t);
  Sequence run(const Sequence& u);

private:
  std::size_t k_, m_, n_;
  Vector alpha_;       // 2h
  Matrix readout_;     // 2k x 2h, block diag(M~ Gamma, M~ Gamma)
  Matrix mix_;         // m x (2k * n), spectral coefficients
  std::vector<Matrix> m_u_;
  bool has_ar_ = false;
  bool y_feedback_ = false;

  Matrix x_;           // 2h x n
  Matrix proj_;        // 2k x n, current U
  Vector spectral_lag1_, spectral_lag2_; // spectral outputs one and two steps back
  Vector y_lag1_, y_lag2_;
  Vector u_lag1_, u_lag2_;
  std::size_t t_ = 0;
};

RecurrentStu distill_stu_model(const StuParams& params, const DistilledFilters& distilled);

struct LdsToLdsResult {
  DiagonalLds lds;
  StuFit fit;
  double impulse_mse = 0.0;   // mean squared impulse difference vs the source over L taps
  double impulse_error = 0.0; // Frobenius norm of the same difference
};

struct LdsToLdsConfig {
  FitMode mode = FitMode::kClosed;
  IoFitConfig gd;
};

LdsToLdsResult lds_to_lds(const DiagonalLds& source, const SpectralBasis& basis,
                          const DistilledFilters& distilled, const LdsToLdsConfig& config = {});

}  // namespace spectralds

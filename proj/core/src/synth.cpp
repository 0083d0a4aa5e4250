#include <chrono>
#include <cmath>
#include <limits>

#include "spectralds/error.hpp"
#include "spectralds/experiments.hpp"
#include "spectralds/rng.hpp"
#include "stu_fit.hpp"

namespace spectralds {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Batch {
  std::vector<Sequence> inputs;
  Matrix targets; // m x batch, final outputs
};

Batch draw_batch(const DiagonalLds& truth, const ExperimentConfig& cfg, std::size_t count,
                 std::uint64_t stream, bool noisy) {
  std::mt19937_64 rng = make_stream(stream, "synth-batch");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
  Batch b;
  b.targets.resize(static_cast<Eigen::Index>(cfg.d_out), static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    Sequence u(static_cast<Eigen::Index>(cfg.seq_len), static_cast<Eigen::Index>(cfg.d_in));
    for (Eigen::Index t = 0; t < u.rows(); ++t)
      for (Eigen::Index c = 0; c < u.cols(); ++c) u(t, c) = normal(rng);
    std::optional<NoiseSpec> noise;
    if (noisy) noise = NoiseSpec{cfg.state_noise_variance, cfg.output_noise_variance, rng()};
    const Sequence y = simulate(truth, u, noise);
    b.targets.col(static_cast<Eigen::Index>(i)) = y.row(y.rows() - 1).transpose();
    b.inputs.push_back(std::move(u));
  }
  return b;
}

// Diagonal LDS trained on the last output of each sequence.
class LdsModel {
public:
  LdsModel(const ExperimentConfig& cfg, std::mt19937_64& rng) {
    lds_ = random_symmetric_lds(cfg.d_h, cfg.d_in, cfg.d_out, 0.9, rng);
    lds_.b /= std::sqrt(static_cast<double>(cfg.d_h));
    lds_.c /= std::sqrt(static_cast<double>(cfg.d_h));
  }

  Vector predict(const Sequence& u) const {
    const Vector s = final_state(u, nullptr, nullptr);
    return lds_.c * s;
  }

  // Accumulates gradients of sum_o (y_o - target_o)^2 and returns that squared error.
  double accumulate(const Sequence& u, const Vector& target, Vector& g_alpha, Matrix& g_b,
                    Matrix& g_c) const {
    Vector ds;
    Matrix w;
    const Vector s = final_state(u, &ds, &w);
    const Vector r = lds_.c * s - target;
    const Vector gs = 2.0 * (lds_.c.transpose() * r);
    g_c.noalias() += 2.0 * r * s.transpose();
    g_alpha += gs.cwiseProduct(ds);
    g_b.noalias() += gs.asDiagonal() * w;
    return r.squaredNorm();
  }

  void apply(double lr, const Vector& g_alpha, const Matrix& g_b, const Matrix& g_c) {
    lds_.alpha = (lds_.alpha - lr * g_alpha).cwiseMax(-1.0).cwiseMin(1.0);
    lds_.b -= lr * g_b;
    lds_.c -= lr * g_c;
  }

  const DiagonalLds& lds() const { return lds_; }

private:
  // Final state s, its derivative with respect to alpha, and the alpha-weighted input sums
  // w (h x n) satisfying s = rowwise-sum(b .* w).
  Vector final_state(const Sequence& u, Vector* ds, Matrix* w) const {
    const Eigen::Index h = lds_.alpha.size();
    Vector s = Vector::Zero(h);
    Vector d = Vector::Zero(h);
    Matrix acc;
    if (w) acc = Matrix::Zero(h, u.cols());
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
      const Vector z = lds_.b * u.row(t).transpose();
      if (ds) d = lds_.alpha.cwiseProduct(d) + s;
      s = lds_.alpha.cwiseProduct(s) + z;
      if (w) {
        acc = lds_.alpha.asDiagonal() * acc;
        acc.rowwise() += u.row(t);
      }
    }
    if (ds) *ds = d;
    if (w) *w = acc;
    return s;
  }

  DiagonalLds lds_;
};

// Spectral model read out at the last step: y = W * vec(window * u).
class StuModel {
public:
  StuModel(const SpectralBasis& basis, const ExperimentConfig& cfg)
      : k2_(static_cast<Eigen::Index>(2 * basis.k)), n_(static_cast<Eigen::Index>(cfg.d_in)) {
    const RowMatrix bank = detail::stacked_filters(basis);
    const auto T = static_cast<Eigen::Index>(cfg.seq_len);
    window_.resize(k2_, T);
    for (Eigen::Index t = 0; t < T; ++t) window_.col(t) = bank.col(T - 1 - t);
    weights_ = Matrix::Zero(static_cast<Eigen::Index>(cfg.d_out), k2_ * n_);
    accum_ = Matrix::Zero(weights_.rows(), weights_.cols());
  }

  Vector features(const Sequence& u) const {
    RowMatrix f = window_ * u; // 2k x n
    return Eigen::Map<const Vector>(f.data(), f.size());
  }

  Vector predict(const Sequence& u) const { return weights_ * features(u); }

  double accumulate(const Sequence& u, const Vector& target, Matrix& grad) const {
    const Vector f = features(u);
    const Vector r = weights_ * f - target;
    grad.noalias() += 2.0 * r * f.transpose();
    return r.squaredNorm();
  }

  // AdaGrad update with a per-coordinate accumulator initialised at zero.
  void adagrad(double lr, const Matrix& grad) {
    accum_.array() += grad.array().square();
    weights_.array() -= lr * grad.array() / (accum_.array().sqrt() + 1e-10);
  }

  StuParams params(std::size_t k) const {
    StuParams p = StuParams::zeros(k, static_cast<std::size_t>(weights_.rows()),
                                   static_cast<std::size_t>(n_));
    // Features are row-major 2k x n, so column j * n + c pairs filter j with input c.
    for (std::size_t j = 0; j < 2 * k; ++j) {
      Matrix block = weights_.middleCols(static_cast<Eigen::Index>(j) * n_, n_);
      if (j < k)
        p.m_plus[j] = block;
      else
        p.m_minus[j - k] = block;
    }
    return p;
  }

private:
  Eigen::Index k2_, n_;
  RowMatrix window_;
  Matrix weights_;
  Matrix accum_;
};

void finish(RunRecord& r) { r.stats = summarize(r.losses); }

}  // namespace

SynthResult synth_compare(const ExperimentConfig& cfg, const SpectralBasis& basis,
                          const DistilledFilters& distilled, std::uint64_t run_seed) {
  cfg.validate();
  if (cfg.seq_len > basis.L) throw DimensionError("synth_compare: seq_len exceeds the filter length");
  if (distilled.k() != basis.k) throw DimensionError("synth_compare: distilled filters do not match the basis");
  const std::uint64_t root = stream_seed(cfg.seed, "synth", run_seed);
  std::mt19937_64 truth_rng = make_stream(root, "truth");
  const DiagonalLds truth = random_symmetric_lds(cfg.d_h, cfg.d_in, cfg.d_out, 1.0 - cfg.delta, truth_rng);
  std::mt19937_64 init_rng = make_stream(root, "baseline-init");
  LdsModel baseline(cfg, init_rng);
  StuModel stu(basis, cfg);

  SynthResult out;
  out.baseline.method = "lds_gd";
  out.baseline.optimizer = "gradient descent, alpha clamped to [-1, 1]";
  out.treatment.method = "stu_distilled";
  out.treatment.optimizer = "adagrad, accumulator initialised at zero, eps 1e-10";
  for (RunRecord* r : {&out.baseline, &out.treatment}) {
    r->config = cfg;
    r->run_seed = run_seed;
  }

  const double norm = 1.0 / static_cast<double>(cfg.batch * cfg.d_out);
  const auto h = static_cast<Eigen::Index>(cfg.d_h);
  const auto n = static_cast<Eigen::Index>(cfg.d_in);
  const auto m = static_cast<Eigen::Index>(cfg.d_out);
  double baseline_time = 0.0, treatment_time = 0.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Batch batch = draw_batch(truth, cfg, cfg.batch, stream_seed(root, "train", step), cfg.noisy);

    auto t0 = Clock::now();
    if (!out.baseline.diverged) {
      Vector ga = Vector::Zero(h);
      Matrix gb = Matrix::Zero(h, n), gc = Matrix::Zero(m, h);
      double loss = 0.0;
      for (std::size_t i = 0; i < cfg.batch; ++i)
        loss += baseline.accumulate(batch.inputs[i], batch.targets.col(static_cast<Eigen::Index>(i)), ga, gb, gc);
      loss *= norm;
      if (!std::isfinite(loss)) {
        out.baseline.diverged = true;
        out.baseline.diverged_at = step;
      } else {
        baseline.apply(cfg.baseline_lr * norm, ga, gb, gc);
      }
      out.baseline.losses.push_back(loss);
    }
    baseline_time += seconds_since(t0);
    out.baseline.wall_times.push_back(baseline_time);

    t0 = Clock::now();
    if (!out.treatment.diverged) {
      Matrix grad = Matrix::Zero(m, static_cast<Eigen::Index>(2 * basis.k) * n);
      double loss = 0.0;
      for (std::size_t i = 0; i < cfg.batch; ++i)
        loss += stu.accumulate(batch.inputs[i], batch.targets.col(static_cast<Eigen::Index>(i)), grad);
      loss *= norm;
      if (!std::isfinite(loss)) {
        out.treatment.diverged = true;
        out.treatment.diverged_at = step;
      } else {
        stu.adagrad(cfg.treatment_lr, grad * norm);
      }
      out.treatment.losses.push_back(loss);
    }
    treatment_time += seconds_since(t0);
    out.treatment.wall_times.push_back(treatment_time);
  }

  // Held-out evaluation against the noiseless system.
  const Batch eval = draw_batch(truth, cfg, cfg.eval_batch, stream_seed(root, "eval"), false);
  RecurrentStu recurrent = distill_stu_model(stu.params(basis.k), distilled);
  double base_sq = 0.0, treat_sq = 0.0, stu_sq = 0.0;
  for (std::size_t i = 0; i < cfg.eval_batch; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector target = eval.targets.col(col);
    base_sq += (baseline.predict(eval.inputs[i]) - target).squaredNorm();
    stu_sq += (stu.predict(eval.inputs[i]) - target).squaredNorm();
    const Sequence y = recurrent.run(eval.inputs[i]);
    treat_sq += (y.row(y.rows() - 1).transpose() - target).squaredNorm();
  }
  const double eval_norm = 1.0 / static_cast<double>(cfg.eval_batch * cfg.d_out);
  out.baseline.final_mse = out.baseline.diverged ? std::numeric_limits<double>::infinity() : base_sq * eval_norm;
  out.treatment.final_mse = out.treatment.diverged ? std::numeric_limits<double>::infinity() : treat_sq * eval_norm;
  out.stu_mse = stu_sq * eval_norm;
  finish(out.baseline);
  finish(out.treatment);
  return out;
}

}  // namespace spectralds

#include "spectralds_cli/run_cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectralds/spectralds.hpp"

namespace spectralds::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::vector<std::uint64_t> seed_list(std::uint64_t seed, std::string_view label, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(stream_seed(seed, label, i));
  return seeds;
}

void write_json(const fs::path& file, const nlohmann::json& j) { write_text(file, j.dump(2) + "\n"); }

AlphaSampler bank_sampler(std::uint64_t seed) {
  AlphaSamplerConfig cfg;
  cfg.seed = stream_seed(seed, "bank-alphas");
  cfg.symmetric = true;
  return AlphaSampler(cfg);
}

PracticalResult practical(const SpectralBasis& basis, std::size_t bank_size, std::size_t h_start, std::size_t h,
                          std::size_t trials, std::uint64_t seed) {
  PairBankConfig bank_cfg;
  bank_cfg.N = bank_size;
  bank_cfg.seed = stream_seed(seed, "bank");
  const PairBank bank = build_pair_bank(basis, bank_cfg, bank_sampler(seed));
  PracticalConfig cfg;
  cfg.h_start = h_start;
  cfg.h = h;
  cfg.trials = trials;
  cfg.seed = stream_seed(seed, "practical");
  return practical_distill(bank, basis, cfg);
}

StuParams random_stu(std::size_t k, std::size_t m, std::size_t n, std::mt19937_64& rng) {
  StuParams p = StuParams::zeros(k, m, n);
  std::normal_distribution<double> normal;
  for (std::size_t j = 0; j < k; ++j)
    for (Matrix* mat : {&p.m_plus[j], &p.m_minus[j]})
      for (Eigen::Index i = 0; i < mat->size(); ++i) mat->data()[i] = normal(rng);
  return p;
}

struct Options {
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  std::string out;

  // basis
  std::size_t L = 1024;
  std::size_t k = 24;
  std::size_t dense_threshold = BasisOptions{}.dense_threshold;

  // fit-stu
  std::string basis_dir;
  std::string lds_dir;
  std::vector<std::size_t> random_lds;
  double max_eigenvalue = 0.99;
  std::string save_lds;
  std::string fit_mode = "closed";
  IoFitConfig io;

  // distill and verify
  std::string distill_mode = "practical";
  std::size_t h = 80;
  std::size_t h_start = 24;
  std::size_t trials = 16;
  std::size_t bank_size = 2000;
  std::string distilled_dir;

  // bench-cond and bench-subset
  std::vector<std::size_t> h_values;
  std::size_t repetitions = 10;
  std::vector<std::size_t> h_starts;
  std::size_t h_max = 80;

  // bench-synth
  ExperimentConfig experiment;
  std::size_t distill_h = 80;
  std::size_t distill_bank = 2000;

  // bench-runtime
  std::string runtime_model = "both";
  std::vector<std::size_t> T_values{8192, 16384, 32768};
  std::vector<std::size_t> state_dims{100, 800};
  std::size_t channels = 1;
  std::size_t repeats = 3;
};

int cmd_basis(const Options& o, std::ostream& out) {
  BasisOptions bo;
  bo.dense_threshold = o.dense_threshold;
  const SpectralBasis basis = compute_basis(HankelSpec{o.L}, o.k, bo);
  save(basis, o.out, o.seed);
  const Vector res = eigen_residuals(basis);
  out << "basis L=" << basis.L << " k=" << basis.k << " sigma_1=" << fmt(basis.sigma[0])
      << " sigma_k=" << fmt(basis.sigma[basis.sigma.size() - 1]) << " max_residual=" << fmt(res.maxCoeff())
      << "\nsaved to " << o.out << "\n";
  return kExitOk;
}

int cmd_fit_stu(const Options& o, std::ostream& out) {
  const SpectralBasis basis = load_basis(o.basis_dir);
  DiagonalLds lds;
  if (!o.lds_dir.empty()) {
    lds = load_lds(o.lds_dir);
  } else {
    if (o.random_lds.size() != 3) throw DimensionError("fit-stu: pass --lds or --random-lds H,N,M");
    std::mt19937_64 rng = make_stream(o.seed, "cli-random-lds");
    lds = random_symmetric_lds(o.random_lds[0], o.random_lds[1], o.random_lds[2], o.max_eigenvalue, rng);
    if (!o.save_lds.empty()) save(lds, o.save_lds, o.seed);
  }
  StuParams params;
  if (o.fit_mode == "closed") {
    const StuFit fit = fit_stu_to_impulse(impulse_response(lds, basis.L), basis);
    params = fit.params;
    out << "closed-form fit residual=" << fmt(fit.residual) << " condition=" << fmt(fit.condition) << "\n";
  } else {
    IoFitConfig cfg = o.io;
    cfg.seed = o.seed;
    const IoFitResult fit = fit_stu_to_lds_io(lds, basis, cfg);
    params = fit.params;
    out << "gradient fit final_mse=" << fmt(fit.final_mse) << " best_mse=" << fmt(fit.best_mse) << "\n";
  }
  save(params, o.out, o.seed);
  out << "saved to " << o.out << "\n";
  return kExitOk;
}

int cmd_distill(const Options& o, std::ostream& out) {
  const SpectralBasis basis = load_basis(o.basis_dir);
  DistilledFilters filters;
  if (o.distill_mode == "direct") {
    AlphaSamplerConfig cfg;
    cfg.seed = stream_seed(o.seed, "direct-alphas");
    AlphaSampler sampler(cfg);
    const SpectralToLdsResult r = spectral_to_lds(basis, o.h, sampler);
    filters = r.filters;
    out << "direct h=" << o.h << " error_fro=" << fmt(r.error_fro) << " lambda_max=" << fmt(r.lambda_max)
        << " residual_sum=" << fmt(r.residual_sum) << "\n";
  } else {
    const PracticalResult r = practical(basis, o.bank_size, o.h_start, o.h, o.trials, o.seed);
    filters = r.filters;
    out << "practical h=" << filters.h() << " pre_gd_error=" << fmt(r.pre_gd_error)
        << " post_gd_error=" << fmt(r.post_gd_error) << " gd_steps=" << r.gd_steps
        << " lambda_max=" << fmt(filters.lambda_max) << "\n";
  }
  save(filters, o.out, o.seed);
  out << "saved to " << o.out << "\n";
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const SpectralBasis basis = load_basis(o.basis_dir);
  const DistilledFilters filters = load_distilled(o.distilled_dir);
  if (filters.k() != basis.k)
    throw DimensionError("verify: distilled filters have k=" + std::to_string(filters.k()) + " but the basis has k=" +
                         std::to_string(basis.k));
  if (filters.L != basis.L)
    throw DimensionError("verify: distilled filters have L=" + std::to_string(filters.L) + " but the basis has L=" +
                         std::to_string(basis.L));
  const Vector errors = per_filter_errors(filters, basis);
  for (Eigen::Index j = 0; j < errors.size(); ++j) out << "filter " << j + 1 << " error " << fmt(errors[j]) << "\n";
  out << "frobenius error " << fmt(reconstruction_error(filters, basis)) << "\n";
  return kExitOk;
}

int cmd_bench_cond(const Options& o, std::ostream& out) {
  const SpectralBasis basis = compute_basis(HankelSpec{o.L}, o.k);
  std::vector<std::size_t> hs = o.h_values;
  if (hs.empty()) hs = {o.k, 2 * o.k, 4 * o.k, 8 * o.k};
  const auto rows = cond_experiment(basis, hs, seed_list(o.seed, "cond", o.repetitions), AlphaSamplerConfig{});
  fs::create_directories(o.out);
  const std::string csv = cond_table(rows).str();
  write_text(fs::path(o.out) / "cond.csv", csv);
  write_json(fs::path(o.out) / "summary.json",
             {{"command", "bench-cond"}, {"seed", o.seed}, {"L", o.L}, {"k", o.k}, {"h_values", hs},
              {"repetitions", o.repetitions}});
  out << csv;
  return kExitOk;
}

int cmd_bench_subset(const Options& o, std::ostream& out) {
  const SpectralBasis basis = compute_basis(HankelSpec{o.L}, o.k);
  PairBankConfig bank_cfg;
  bank_cfg.N = o.bank_size;
  bank_cfg.seed = stream_seed(o.seed, "bank");
  const PairBank bank = build_pair_bank(basis, bank_cfg, bank_sampler(o.seed));
  std::vector<std::size_t> starts = o.h_starts;
  if (starts.empty()) starts = {o.k, o.k + 8, o.k + 16};
  const auto curves = subset_curve(bank, basis, starts, o.h_max, o.trials, stream_seed(o.seed, "subset"));
  fs::create_directories(o.out);
  const std::string csv = subset_table(curves).str();
  write_text(fs::path(o.out) / "subset.csv", csv);
  write_json(fs::path(o.out) / "summary.json",
             {{"command", "bench-subset"}, {"seed", o.seed}, {"L", o.L}, {"k", o.k}, {"bank_size", o.bank_size},
              {"retained", bank.size()}, {"h_starts", starts}, {"h_max", o.h_max}, {"trials", o.trials}});
  out << csv;
  return kExitOk;
}

int cmd_bench_synth(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = o.experiment;
  cfg.seed = o.seed;
  cfg.validate();
  const std::size_t L = std::max(cfg.L, cfg.seq_len);
  const SpectralBasis basis = compute_basis(HankelSpec{L}, cfg.k);
  const PracticalResult distilled = practical(basis, o.distill_bank, cfg.k, o.distill_h, 16, o.seed);
  out << "distilled filters h=" << distilled.filters.h() << " error=" << fmt(distilled.filters.error_fro) << "\n";
  std::vector<RunRecord> records;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    const SynthResult res = synth_compare(cfg, basis, distilled.filters, r);
    out << "run " << r << " baseline_mse=" << fmt(res.baseline.final_mse)
        << (res.baseline.diverged ? " (diverged)" : "") << " treatment_mse=" << fmt(res.treatment.final_mse)
        << " stu_mse=" << fmt(res.stu_mse) << "\n";
    records.push_back(res.baseline);
    records.push_back(res.treatment);
  }
  save_run(records, o.out, o.seed);
  out << "saved to " << o.out << "\n";
  return kExitOk;
}

int cmd_bench_runtime(const Options& o, std::ostream& out) {
  if (o.T_values.empty()) throw DimensionError("bench-runtime: no sequence lengths");
  const std::size_t L = *std::max_element(o.T_values.begin(), o.T_values.end());
  const SpectralBasis basis = compute_basis(HankelSpec{L}, o.k);
  CsvTable all;
  auto append = [&](const std::vector<RuntimeRow>& rows, const std::string& name, const RuntimeDims& dims) {
    CsvTable t = runtime_table(rows, name, dims);
    all.header = t.header;
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
  };
  RuntimeDims dims;
  dims.channels = o.channels;
  dims.k = o.k;
  dims.repeats = o.repeats;
  if (o.runtime_model == "recurrent" || o.runtime_model == "both")
    for (std::size_t sd : o.state_dims) {
      dims.state_dim = sd;
      append(runtime_bench(o.T_values, RuntimeModel::kRecurrentLds, dims, o.seed, basis), "recurrent_lds", dims);
    }
  if (o.runtime_model == "conv" || o.runtime_model == "both") {
    dims.state_dim = 0;
    append(runtime_bench(o.T_values, RuntimeModel::kConvStu, dims, o.seed, basis), "conv_stu", dims);
  }
  fs::create_directories(o.out);
  const std::string csv = all.str();
  write_text(fs::path(o.out) / "runtime.csv", csv);
  write_json(fs::path(o.out) / "summary.json",
             {{"command", "bench-runtime"}, {"seed", o.seed}, {"model", o.runtime_model}, {"T", o.T_values},
              {"state_dims", o.state_dims}, {"channels", o.channels}, {"k", o.k}, {"repeats", o.repeats}});
  out << csv;
  return kExitOk;
}

int cmd_demo(const Options& o, std::ostream& out) {
  constexpr std::size_t L = 256, k = 8, h = 24, n = 2, m = 2;
  const SpectralBasis basis = compute_basis(HankelSpec{L}, k);
  const PracticalResult distilled = practical(basis, 1000, k, h, 8, o.seed);
  std::mt19937_64 rng = make_stream(o.seed, "demo-stu");
  const StuParams params = random_stu(k, m, n, rng);
  Sequence u(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(n));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
  const Sequence conv = forward_nonar(params, basis, u);
  RecurrentStu model = distill_stu_model(params, distilled.filters);
  const Sequence rec = model.run(u);
  const double rel = (conv - rec).cwiseAbs().maxCoeff() / conv.cwiseAbs().maxCoeff();
  out << "demo L=" << L << " k=" << k << " h=" << h << "\n"
      << "reconstruction error " << fmt(distilled.filters.error_fro) << "\n"
      << "equivalence error " << fmt(rel) << " (max relative difference, convolution vs recurrence)\n";
  if (!std::isfinite(rel)) throw ConvergenceError("demo: non-finite equivalence error");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral filter distillation into linear dynamical systems", "spectralds"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads (0 = SPECTRALDS_THREADS or hardware)");

  auto* basis = app.add_subcommand("basis", "Compute and save the spectral filter bank");
  basis->add_option("--L", o.L, "Filter length")->required()->check(CLI::Range(2ul, 1ul << 20));
  basis->add_option("--k", o.k, "Number of filters")->required()->check(CLI::PositiveNumber);
  basis->add_option("--dense-threshold", o.dense_threshold, "Largest L solved densely");
  basis->add_option("--seed", o.seed, "Recorded in the manifest");
  basis->add_option("--out", o.out, "Output artifact directory")->required();

  auto* fit = app.add_subcommand("fit-stu", "Fit spectral coefficients to an LDS");
  fit->add_option("--basis", o.basis_dir, "Basis artifact")->required();
  auto* lds_opt = fit->add_option("--lds", o.lds_dir, "LDS artifact");
  auto* rand_opt = fit->add_option("--random-lds", o.random_lds, "Random symmetric LDS H,N,M")->delimiter(',');
  lds_opt->excludes(rand_opt);
  fit->add_option("--max-eigenvalue", o.max_eigenvalue, "Spectral radius of the random LDS");
  fit->add_option("--save-lds", o.save_lds, "Save the random LDS here");
  fit->add_option("--mode", o.fit_mode, "closed or gd")->check(CLI::IsMember({"closed", "gd"}));
  fit->add_option("--steps", o.io.steps, "Gradient steps");
  fit->add_option("--lr", o.io.lr, "Gradient learning rate");
  fit->add_option("--batches", o.io.batches, "Sequences per gradient step");
  fit->add_option("--seed", o.seed, "Seed");
  fit->add_option("--out", o.out, "Output artifact directory")->required();

  auto* distill = app.add_subcommand("distill", "Distill spectral filters into geometric filters");
  distill->set_help_flag("--help", "Print this help message and exit");
  distill->add_option("--basis", o.basis_dir, "Basis artifact")->required();
  distill->add_option("--mode", o.distill_mode, "direct or practical")->check(CLI::IsMember({"direct", "practical"}));
  distill->add_option("--h", o.h, "State dimension")->check(CLI::PositiveNumber);
  distill->add_option("--h-start", o.h_start, "Initial subset size")->check(CLI::PositiveNumber);
  distill->add_option("--trials", o.trials, "Random initial subsets")->check(CLI::PositiveNumber);
  distill->add_option("--bank-size", o.bank_size, "Pair bank size")->check(CLI::PositiveNumber);
  distill->add_option("--seed", o.seed, "Seed");
  distill->add_option("--out", o.out, "Output artifact directory")->required();

  auto* verify = app.add_subcommand("verify", "Report reconstruction errors of distilled filters");
  verify->add_option("--distilled", o.distilled_dir, "Distilled artifact")->required();
  verify->add_option("--basis", o.basis_dir, "Basis artifact")->required();

  auto* cond = app.add_subcommand("bench-cond", "Largest singular value of the pseudoinverse against h");
  cond->add_option("--L", o.L, "Filter length")->check(CLI::Range(2ul, 1ul << 20));
  cond->add_option("--k", o.k, "Number of filters")->check(CLI::PositiveNumber);
  cond->add_option("--h-values", o.h_values, "State dimensions")->delimiter(',');
  cond->add_option("--repetitions", o.repetitions, "Seeds")->check(CLI::PositiveNumber);
  cond->add_option("--seed", o.seed, "Seed");
  cond->add_option("--out", o.out, "Output directory")->required();

  auto* subset = app.add_subcommand("bench-subset", "Reconstruction error against state dimension");
  subset->add_option("--L", o.L, "Filter length")->check(CLI::Range(2ul, 1ul << 20));
  subset->add_option("--k", o.k, "Number of filters")->check(CLI::PositiveNumber);
  subset->add_option("--bank-size", o.bank_size, "Pair bank size")->check(CLI::PositiveNumber);
  subset->add_option("--h-start", o.h_starts, "Initial subset sizes")->delimiter(',');
  subset->add_option("--h-max", o.h_max, "Final state dimension")->check(CLI::PositiveNumber);
  subset->add_option("--trials", o.trials, "Random initial subsets")->check(CLI::PositiveNumber);
  subset->add_option("--seed", o.seed, "Seed");
  subset->add_option("--out", o.out, "Output directory")->required();

  auto* synth = app.add_subcommand("bench-synth", "Direct LDS training against spectral fitting and distillation");
  ExperimentConfig& e = o.experiment;
  e.repetitions = 1;
  synth->add_option("--repetitions", e.repetitions, "Runs")->check(CLI::PositiveNumber);
  synth->add_option("--k", e.k, "Number of filters")->check(CLI::PositiveNumber);
  synth->add_option("--L", e.L, "Filter length (raised to seq-len if smaller)");
  synth->add_option("--delta", e.delta, "Spectral gap of the target system");
  synth->add_option("--d-in", e.d_in, "Input dimension");
  synth->add_option("--d-out", e.d_out, "Output dimension");
  synth->add_option("--d-h", e.d_h, "Hidden dimension of the target and the baseline");
  synth->add_option("--seq-len", e.seq_len, "Sequence length");
  synth->add_option("--steps", e.steps, "Optimizer steps");
  synth->add_option("--batch", e.batch, "Sequences per step");
  synth->add_option("--eval-batch", e.eval_batch, "Held-out sequences");
  synth->add_option("--baseline-lr", e.baseline_lr, "Baseline learning rate");
  synth->add_option("--treatment-lr", e.treatment_lr, "Spectral model learning rate");
  synth->add_flag("--noisy", e.noisy, "Add state and output noise to the training data");
  synth->add_option("--state-noise", e.state_noise_variance, "State noise variance");
  synth->add_option("--output-noise", e.output_noise_variance, "Output noise variance");
  synth->add_option("--distill-h", o.distill_h, "Distilled state dimension")->check(CLI::PositiveNumber);
  synth->add_option("--distill-bank", o.distill_bank, "Pair bank size for distillation")->check(CLI::PositiveNumber);
  synth->add_option("--seed", o.seed, "Seed");
  synth->add_option("--out", o.out, "Output artifact directory")->required();

  auto* runtime = app.add_subcommand("bench-runtime", "Autoregressive generation time against sequence length");
  runtime->add_option("--model", o.runtime_model, "conv, recurrent or both")
      ->check(CLI::IsMember({"conv", "recurrent", "both"}));
  runtime->add_option("--T", o.T_values, "Sequence lengths, ascending")->delimiter(',');
  runtime->add_option("--state-dims", o.state_dims, "Recurrent state dimensions")->delimiter(',');
  runtime->add_option("--channels", o.channels, "Input and output channels")->check(CLI::PositiveNumber);
  runtime->add_option("--k", o.k, "Number of filters")->check(CLI::PositiveNumber);
  runtime->add_option("--repeats", o.repeats, "Timed repeats per length")->check(CLI::PositiveNumber);
  runtime->add_option("--seed", o.seed, "Seed");
  runtime->add_option("--out", o.out, "Output directory")->required();

  auto* demo = app.add_subcommand("demo", "Tiny end-to-end pipeline");
  demo->add_option("--seed", o.seed, "Seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  set_thread_count(o.threads);
  try {
    if (*basis) return cmd_basis(o, out);
    if (*fit) return cmd_fit_stu(o, out);
    if (*distill) return cmd_distill(o, out);
    if (*verify) return cmd_verify(o, out);
    if (*cond) return cmd_bench_cond(o, out);
    if (*subset) return cmd_bench_subset(o, out);
    if (*synth) return cmd_bench_synth(o, out);
    if (*runtime) return cmd_bench_runtime(o, out);
    if (*demo) return cmd_demo(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  err << app.help();
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace spectralds::cli

#include "spectralds/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "spectralds/error.hpp"
#include "spectralds/rng.hpp"

namespace spectralds {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffU) << (8 * (7 - i));
  return r;
}

std::string encode_f64(const double* data, std::size_t count) {
  std::string bytes(count * 8, '\0');
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(data[i]));
    std::memcpy(bytes.data() + 8 * i, &le, 8);
  }
  return bytes;
}

std::vector<double> decode_f64(const std::string& bytes) {
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t le;
    std::memcpy(&le, bytes.data() + 8 * i, 8);
    out[i] = std::bit_cast<double>(to_le(le));
  }
  return out;
}

std::string read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw TruncatedPayloadError("missing payload file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + file.string());
}

// Non-finite values are not representable in JSON numbers.
json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw SchemaError("invalid number: " + s);
  }
  return j.get<double>();
}

struct Payload {
  std::string name;
  std::string bytes;
  std::string extension = ".bin";
};

Payload f64_payload(std::string name, const double* data, std::size_t count) {
  return {std::move(name), encode_f64(data, count)};
}

template <class Derived>
Payload matrix_payload(std::string name, const Eigen::MatrixBase<Derived>& m) {
  const RowMatrix rows = m;
  return f64_payload(std::move(name), rows.data(), static_cast<std::size_t>(rows.size()));
}

std::string file_name(const Payload& p) { return p.name + p.extension; }

bool is_binary(const std::string& file) { return file.ends_with(".bin"); }

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json manifest_json(const Manifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["kind"] = to_string(m.kind);
  j["byte_order"] = "little";
  j["dims"] = m.dims;
  j["checksum"] = hex(m.checksum);
  j["created_with_seed"] = m.created_with_seed ? json(*m.created_with_seed) : json(nullptr);
  j["payload"] = json::array();
  for (const auto& p : m.payload) j["payload"].push_back({{"name", p.name}, {"file", p.file}, {"count", p.count}});
  json scalars = json::object();
  for (const auto& [key, value] : m.scalars) scalars[key] = number(value);
  j["scalars"] = scalars;
  if (!m.sigma.empty()) {
    json sigma = json::array();
    for (double s : m.sigma) sigma.push_back(number(s));
    j["sigma"] = sigma;
  }
  return j;
}

void write_artifact(const fs::path& dir, Manifest manifest, const std::vector<Payload>& payload) {
  fs::create_directories(dir);
  std::uint64_t checksum = fnv1a64(nullptr, 0);
  manifest.payload.clear();
  for (const auto& p : payload) {
    checksum = fnv1a64(p.bytes.data(), p.bytes.size(), checksum);
    manifest.payload.push_back({p.name, file_name(p), is_binary(file_name(p)) ? p.bytes.size() / 8 : p.bytes.size()});
    write_bytes(dir / file_name(p), p.bytes);
  }
  manifest.checksum = checksum;
  write_bytes(dir / kManifestName, manifest_json(manifest).dump(2) + "\n");
}

struct Loaded {
  Manifest manifest;
  std::map<std::string, std::string> bytes;

  const std::string& raw(const std::string& name) const {
    auto it = bytes.find(name);
    if (it == bytes.end()) throw SchemaError("payload entry missing: " + name);
    return it->second;
  }
  std::vector<double> f64(const std::string& name, std::size_t expected) const {
    std::vector<double> v = decode_f64(raw(name));
    if (v.size() != expected) throw SchemaError("payload " + name + " has an unexpected length");
    return v;
  }
  std::int64_t dim(const std::string& name) const {
    auto it = manifest.dims.find(name);
    if (it == manifest.dims.end() || it->second < 0) throw SchemaError("manifest dim missing: " + name);
    return it->second;
  }
  double scalar(const std::string& name) const {
    auto it = manifest.scalars.find(name);
    if (it == manifest.scalars.end()) throw SchemaError("manifest scalar missing: " + name);
    return it->second;
  }
};

Loaded read_artifact(const fs::path& path, ArtifactKind kind) {
  Loaded out;
  out.manifest = read_manifest(path);
  if (out.manifest.kind != kind)
    throw SchemaError("artifact kind is " + to_string(out.manifest.kind) + ", expected " + to_string(kind));
  const fs::path dir = artifact_dir(path);
  std::uint64_t checksum = fnv1a64(nullptr, 0);
  for (const auto& p : out.manifest.payload) {
    std::string bytes = read_bytes(dir / p.file);
    const std::uint64_t expected = is_binary(p.file) ? p.count * 8 : p.count;
    if (bytes.size() < expected) throw TruncatedPayloadError("payload truncated: " + p.file);
    if (bytes.size() > expected) throw SchemaError("payload longer than declared: " + p.file);
    checksum = fnv1a64(bytes.data(), bytes.size(), checksum);
    out.bytes[p.name] = std::move(bytes);
  }
  if (checksum != out.manifest.checksum) throw ChecksumError("checksum mismatch in " + dir.string());
  return out;
}

Manifest new_manifest(ArtifactKind kind, std::optional<std::uint64_t> seed) {
  Manifest m;
  m.kind = kind;
  m.created_with_seed = seed;
  return m;
}

template <class M>
M matrix_from(const std::vector<double>& values, Eigen::Index rows, Eigen::Index cols, std::size_t offset = 0) {
  return Eigen::Map<const RowMatrix>(values.data() + offset, rows, cols);
}

std::vector<double> stack_matrices(const std::vector<Matrix>& mats) {
  std::vector<double> out;
  for (const auto& m : mats) {
    const RowMatrix r = m;
    out.insert(out.end(), r.data(), r.data() + r.size());
  }
  return out;
}

std::vector<Matrix> split_matrices(const std::vector<double>& values, std::size_t count, Eigen::Index rows,
                                   Eigen::Index cols) {
  std::vector<Matrix> out;
  const auto block = static_cast<std::size_t>(rows * cols);
  for (std::size_t i = 0; i < count; ++i) out.push_back(matrix_from<Matrix>(values, rows, cols, i * block));
  return out;
}

json config_to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"repetitions", c.repetitions},
          {"k", c.k},
          {"L", c.L},
          {"h_values", c.h_values},
          {"h_start", c.h_start},
          {"h_max", c.h_max},
          {"trials", c.trials},
          {"bank_size", c.bank_size},
          {"delta", c.delta},
          {"d_in", c.d_in},
          {"d_out", c.d_out},
          {"d_h", c.d_h},
          {"seq_len", c.seq_len},
          {"steps", c.steps},
          {"batch", c.batch},
          {"eval_batch", c.eval_batch},
          {"baseline_lr", c.baseline_lr},
          {"treatment_lr", c.treatment_lr},
          {"noisy", c.noisy},
          {"state_noise_variance", c.state_noise_variance},
          {"output_noise_variance", c.output_noise_variance}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.repetitions = j.at("repetitions").get<std::size_t>();
  c.k = j.at("k").get<std::size_t>();
  c.L = j.at("L").get<std::size_t>();
  c.h_values = j.at("h_values").get<std::vector<std::size_t>>();
  c.h_start = j.at("h_start").get<std::size_t>();
  c.h_max = j.at("h_max").get<std::size_t>();
  c.trials = j.at("trials").get<std::size_t>();
  c.bank_size = j.at("bank_size").get<std::size_t>();
  c.delta = j.at("delta").get<double>();
  c.d_in = j.at("d_in").get<std::size_t>();
  c.d_out = j.at("d_out").get<std::size_t>();
  c.d_h = j.at("d_h").get<std::size_t>();
  c.seq_len = j.at("seq_len").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.eval_batch = j.at("eval_batch").get<std::size_t>();
  c.baseline_lr = j.at("baseline_lr").get<double>();
  c.treatment_lr = j.at("treatment_lr").get<double>();
  c.noisy = j.at("noisy").get<bool>();
  c.state_noise_variance = j.at("state_noise_variance").get<double>();
  c.output_noise_variance = j.at("output_noise_variance").get<double>();
  return c;
}

json stats_json(const SummaryStats& s) {
  return {{"mean", number(s.mean)},     {"stddev", number(s.stddev)}, {"min", number(s.min)},
          {"q25", number(s.q25)},       {"median", number(s.median)}, {"q75", number(s.q75)},
          {"max", number(s.max)}};
}

json record_json(const RunRecord& r) {
  return {{"method", r.method},
          {"optimizer", r.optimizer},
          {"run_seed", r.run_seed},
          {"steps", r.losses.size()},
          {"diverged", r.diverged},
          {"diverged_at", r.diverged ? json(r.diverged_at) : json(nullptr)},
          {"final_mse", number(r.final_mse)},
          {"total_seconds", r.wall_times.empty() ? 0.0 : r.wall_times.back()},
          {"loss_stats", stats_json(r.stats)},
          {"config", config_to_json(r.config)}};
}

}  // namespace

std::string to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kBasis: return "basis";
    case ArtifactKind::kLds: return "lds";
    case ArtifactKind::kStu: return "stu";
    case ArtifactKind::kDistilled: return "distilled";
    case ArtifactKind::kRun: return "run";
  }
  throw SchemaError("unknown artifact kind");
}

ArtifactKind artifact_kind_from_string(const std::string& name) {
  for (ArtifactKind k : {ArtifactKind::kBasis, ArtifactKind::kLds, ArtifactKind::kStu, ArtifactKind::kDistilled,
                         ArtifactKind::kRun})
    if (to_string(k) == name) return k;
  throw SchemaError("unknown artifact kind: " + name);
}

fs::path artifact_dir(const fs::path& path) {
  if (path.filename() == kManifestName) return path.parent_path();
  return path;
}

Manifest read_manifest(const fs::path& path) {
  const fs::path file = artifact_dir(path) / kManifestName;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest: " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  try {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion)
      throw SchemaError("unsupported schema_version " + std::to_string(m.schema_version));
    if (j.value("byte_order", std::string("little")) != "little") throw SchemaError("unsupported byte order");
    m.kind = artifact_kind_from_string(j.at("kind").get<std::string>());
    m.dims = j.at("dims").get<std::map<std::string, std::int64_t>>();
    m.checksum = std::stoull(j.at("checksum").get<std::string>(), nullptr, 16);
    if (!j.at("created_with_seed").is_null()) m.created_with_seed = j.at("created_with_seed").get<std::uint64_t>();
    for (const auto& p : j.at("payload"))
      m.payload.push_back({p.at("name").get<std::string>(), p.at("file").get<std::string>(),
                           p.at("count").get<std::uint64_t>()});
    for (const auto& [key, value] : j.at("scalars").items()) m.scalars[key] = number(value);
    if (j.contains("sigma"))
      for (const auto& s : j.at("sigma")) m.sigma.push_back(number(s));
    for (const auto& p : m.payload)
      if (p.file.find('/') != std::string::npos || p.file.find('\\') != std::string::npos || p.file == "..")
        throw SchemaError("payload file must be a plain name: " + p.file);
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid manifest: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw SchemaError("invalid manifest checksum");
  }
}

void save(const SpectralBasis& basis, const fs::path& dir, std::optional<std::uint64_t> seed) {
  Manifest m = new_manifest(ArtifactKind::kBasis, seed);
  m.dims = {{"L", static_cast<std::int64_t>(basis.L)}, {"k", static_cast<std::int64_t>(basis.k)}};
  m.sigma.assign(basis.sigma.data(), basis.sigma.data() + basis.sigma.size());
  write_artifact(dir, m,
                 {f64_payload("sigma", basis.sigma.data(), static_cast<std::size_t>(basis.sigma.size())),
                  matrix_payload("phi", basis.phi)});
}

SpectralBasis load_basis(const fs::path& path) {
  const Loaded a = read_artifact(path, ArtifactKind::kBasis);
  SpectralBasis b;
  b.L = static_cast<std::size_t>(a.dim("L"));
  b.k = static_cast<std::size_t>(a.dim("k"));
  const auto sigma = a.f64("sigma", b.k);
  b.sigma = Eigen::Map<const Vector>(sigma.data(), static_cast<Eigen::Index>(b.k));
  b.phi = matrix_from<RowMatrix>(a.f64("phi", b.k * b.L), static_cast<Eigen::Index>(b.k),
                                 static_cast<Eigen::Index>(b.L));
  return b;
}

void save(const DiagonalLds& lds, const fs::path& dir, std::optional<std::uint64_t> seed) {
  lds.validate();
  Manifest m = new_manifest(ArtifactKind::kLds, seed);
  m.dims = {{"h", static_cast<std::int64_t>(lds.h())},
            {"n", static_cast<std::int64_t>(lds.n())},
            {"m", static_cast<std::int64_t>(lds.m())}};
  write_artifact(dir, m,
                 {f64_payload("alpha", lds.alpha.data(), lds.h()), matrix_payload("b", lds.b),
                  matrix_payload("c", lds.c)});
}

DiagonalLds load_lds(const fs::path& path) {
  const Loaded a = read_artifact(path, ArtifactKind::kLds);
  const auto h = static_cast<std::size_t>(a.dim("h"));
  const auto n = static_cast<std::size_t>(a.dim("n"));
  const auto m = static_cast<std::size_t>(a.dim("m"));
  DiagonalLds lds;
  const auto alpha = a.f64("alpha", h);
  lds.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(h));
  lds.b = matrix_from<Matrix>(a.f64("b", h * n), static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(n));
  lds.c = matrix_from<Matrix>(a.f64("c", m * h), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(h));
  return lds;
}

void save(const StuParams& params, const fs::path& dir, std::optional<std::uint64_t> seed) {
  params.validate();
  Manifest m = new_manifest(ArtifactKind::kStu, seed);
  m.dims = {{"k", static_cast<std::int64_t>(params.k)},
            {"m", static_cast<std::int64_t>(params.m())},
            {"n", static_cast<std::int64_t>(params.n())},
            {"ar", params.ar ? 1 : 0},
            {"y_feedback", params.ar && params.ar->y_feedback ? 1 : 0}};
  std::vector<Payload> payload;
  const auto plus = stack_matrices(params.m_plus);
  const auto minus = stack_matrices(params.m_minus);
  payload.push_back(f64_payload("m_plus", plus.data(), plus.size()));
  payload.push_back(f64_payload("m_minus", minus.data(), minus.size()));
  if (params.ar) {
    const auto mu = stack_matrices(params.ar->m_u);
    payload.push_back(f64_payload("m_u", mu.data(), mu.size()));
  }
  write_artifact(dir, m, payload);
}

StuParams load_stu(const fs::path& path) {
  const Loaded a = read_artifact(path, ArtifactKind::kStu);
  const auto k = static_cast<std::size_t>(a.dim("k"));
  const auto rows = static_cast<Eigen::Index>(a.dim("m"));
  const auto cols = static_cast<Eigen::Index>(a.dim("n"));
  const std::size_t block = static_cast<std::size_t>(rows * cols);
  StuParams p;
  p.k = k;
  p.m_plus = split_matrices(a.f64("m_plus", k * block), k, rows, cols);
  p.m_minus = split_matrices(a.f64("m_minus", k * block), k, rows, cols);
  if (a.dim("ar") != 0) {
    ArTerms ar;
    ar.m_u = split_matrices(a.f64("m_u", 3 * block), 3, rows, cols);
    ar.y_feedback = a.dim("y_feedback") != 0;
    p.ar = std::move(ar);
  }
  p.validate();
  return p;
}

void save(const DistilledFilters& filters, const fs::path& dir, std::optional<std::uint64_t> seed) {
  Manifest m = new_manifest(ArtifactKind::kDistilled, seed);
  m.dims = {{"k", static_cast<std::int64_t>(filters.k())},
            {"h", static_cast<std::int64_t>(filters.h())},
            {"L", static_cast<std::int64_t>(filters.L)}};
  m.scalars = {{"error_fro", filters.error_fro}, {"lambda_max", filters.lambda_max}};
  write_artifact(dir, m,
                 {f64_payload("alphas", filters.alphas.data(), filters.h()), matrix_payload("mtilde", filters.mtilde)});
}

DistilledFilters load_distilled(const fs::path& path) {
  const Loaded a = read_artifact(path, ArtifactKind::kDistilled);
  const auto k = static_cast<std::size_t>(a.dim("k"));
  const auto h = static_cast<std::size_t>(a.dim("h"));
  DistilledFilters f;
  f.L = static_cast<std::size_t>(a.dim("L"));
  const auto alphas = a.f64("alphas", h);
  f.alphas = Eigen::Map<const Vector>(alphas.data(), static_cast<Eigen::Index>(h));
  f.mtilde = matrix_from<Matrix>(a.f64("mtilde", k * h), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h));
  f.error_fro = a.scalar("error_fro");
  f.lambda_max = a.scalar("lambda_max");
  return f;
}

std::string config_json(const ExperimentConfig& config) { return config_to_json(config).dump(2); }

std::string run_summary_json(const std::vector<RunRecord>& records) {
  json j = json::array();
  for (const auto& r : records) j.push_back(record_json(r));
  return j.dump(2);
}

void save_run(const std::vector<RunRecord>& records, const fs::path& dir, std::optional<std::uint64_t> seed) {
  Manifest m = new_manifest(ArtifactKind::kRun, seed);
  m.dims = {{"records", static_cast<std::int64_t>(records.size())}};
  std::vector<Payload> payload;
  payload.push_back({"losses", loss_table(records).str(), ".csv"});
  payload.push_back({"summary", run_summary_json(records) + "\n", ".json"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    if (r.wall_times.size() != r.losses.size())
      throw DimensionError("save_run: losses and wall times differ in length");
    const std::string prefix = "record" + std::to_string(i) + "_";
    const double meta[] = {r.final_mse,   r.stats.mean, r.stats.stddev, r.stats.min,
                           r.stats.q25,   r.stats.median, r.stats.q75,  r.stats.max};
    payload.push_back(f64_payload(prefix + "losses", r.losses.data(), r.losses.size()));
    payload.push_back(f64_payload(prefix + "wall_times", r.wall_times.data(), r.wall_times.size()));
    payload.push_back(f64_payload(prefix + "meta", meta, std::size(meta)));
  }
  write_artifact(dir, m, payload);
}

std::vector<RunRecord> load_run(const fs::path& path) {
  const Loaded a = read_artifact(path, ArtifactKind::kRun);
  const auto count = static_cast<std::size_t>(a.dim("records"));
  json summary;
  try {
    summary = json::parse(a.raw("summary"));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed run summary: ") + e.what());
  }
  if (!summary.is_array() || summary.size() != count) throw SchemaError("run summary does not match record count");
  std::vector<RunRecord> out;
  try {
    for (std::size_t i = 0; i < count; ++i) {
      const json& s = summary[i];
      RunRecord r;
      r.method = s.at("method").get<std::string>();
      r.optimizer = s.at("optimizer").get<std::string>();
      r.run_seed = s.at("run_seed").get<std::uint64_t>();
      r.diverged = s.at("diverged").get<bool>();
      if (r.diverged) r.diverged_at = s.at("diverged_at").get<std::size_t>();
      r.config = config_from_json(s.at("config"));
      const auto steps = s.at("steps").get<std::size_t>();
      const std::string prefix = "record" + std::to_string(i) + "_";
      r.losses = a.f64(prefix + "losses", steps);
      r.wall_times = a.f64(prefix + "wall_times", steps);
      const auto meta = a.f64(prefix + "meta", 8);
      r.final_mse = meta[0];
      r.stats = {meta[1], meta[2], meta[3], meta[4], meta[5], meta[6], meta[7]};
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid run summary: ") + e.what());
  }
  return out;
}

void write_f64(const fs::path& file, const double* data, std::size_t count) {
  write_bytes(file, encode_f64(data, count));
}

std::vector<double> read_f64(const fs::path& file, std::size_t count) {
  const std::string bytes = read_bytes(file);
  if (bytes.size() < count * 8) throw TruncatedPayloadError("payload truncated: " + file.string());
  if (bytes.size() > count * 8) throw SchemaError("payload longer than declared: " + file.string());
  return decode_f64(bytes);
}

void write_text(const fs::path& file, const std::string& text) { write_bytes(file, text); }

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spectralds

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectralds/distill.hpp"
#include "spectralds/experiments.hpp"
#include "spectralds/lds.hpp"
#include "spectralds/spectral_basis.hpp"
#include "spectralds/stu.hpp"

namespace spectralds {

inline constexpr int kSchemaVersion = 1;

enum class ArtifactKind { kBasis, kLds, kStu, kDistilled, kRun };

std::string to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(const std::string& name);

struct PayloadEntry {
  std::string name;
  std::string file;
  std::uint64_t count = 0; // number of 64-bit floats, or bytes for text payloads
};

struct Manifest {
  int schema_version = kSchemaVersion;
  ArtifactKind kind = ArtifactKind::kBasis;
  std::map<std::string, std::int64_t> dims;
  std::uint64_t checksum = 0;
  std::optional<std::uint64_t> created_with_seed;
  std::vector<PayloadEntry> payload;
  std::map<std::string, double> scalars;
  std::vector<double> sigma; // basis artifacts only
};

inline constexpr const char* kManifestName = "manifest.json";

// Accepts an artifact directory or the path of its manifest.
std::filesystem::path artifact_dir(const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

void save(const SpectralBasis& basis, const std::filesystem::path& dir,
          std::optional<std::uint64_t> seed = std::nullopt);
void save(const DiagonalLds& lds, const std::filesystem::path& dir,
          std::optional<std::uint64_t> seed = std::nullopt);
void save(const StuParams& params, const std::filesystem::path& dir,
          std::optional<std::uint64_t> seed = std::nullopt);
void save(const DistilledFilters& filters, const std::filesystem::path& dir,
          std::optional<std::uint64_t> seed = std::nullopt);

// Run artifacts: per-step CSV payload plus a JSON summary inside the manifest.
void save_run(const std::vector<RunRecord>& records, const std::filesystem::path& dir,
              std::optional<std::uint64_t> seed = std::nullopt);

SpectralBasis load_basis(const std::filesystem::path& path);
DiagonalLds load_lds(const std::filesystem::path& path);
StuParams load_stu(const std::filesystem::path& path);
DistilledFilters load_distilled(const std::filesystem::path& path);
std::vector<RunRecord> load_run(const std::filesystem::path& path);

// Little-endian float64 array files.
void write_f64(const std::filesystem::path& file, const double* data, std::size_t count);
std::vector<double> read_f64(const std::filesystem::path& file, std::size_t count);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

std::string run_summary_json(const std::vector<RunRecord>& records);
std::string config_json(const ExperimentConfig& config);

}  // namespace spectralds

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "epid/epi_params.hpp"

namespace epid {

inline constexpr const char* kManifestVersion = "1.0";
inline constexpr const char* kToolVersion = "epid 0.1.0";

// One clean/distorted pair. `files` maps a channel name (e.g. "clean/b50",
// "truth/vdm_px") to an image stem relative to the manifest's directory.
struct PairedSample {
  std::string id;
  int subject = 0;
  int slice = 0;
  std::string split;  // "train", "val" or "test"
  std::string pe_direction;
  int epi_params_index = 0;
  std::uint64_t seed = 0;
  std::string dir;  // sample directory, relative to the manifest
  double dropped_fraction = 0.0;
  std::map<std::string, std::string> files;

  bool operator==(const PairedSample&) const = default;
};

struct SkippedSample {
  std::string id;
  std::string reason;

  bool operator==(const SkippedSample&) const = default;
};

struct DatasetManifest {
  std::string version = kManifestVersion;
  std::vector<PairedSample> samples;
  std::uint64_t rng_seed = 0;
  std::vector<EpiParams> epi_params_used;
  std::string created_by = kToolVersion;
  std::vector<SkippedSample> skipped;

  bool operator==(const DatasetManifest&) const = default;
};

// Rejects duplicate sample IDs and out-of-range epi_params_index values.
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Validates version and that every referenced image exists next to the manifest.
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace epid

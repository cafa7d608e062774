#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epid/correct.hpp"
#include "epid/dwi.hpp"
#include "epid/epi_forward.hpp"
#include "epid/field.hpp"
#include "epid/manifest.hpp"
#include "epid/metrics.hpp"

namespace epid {

// Ranges for the analytic stand-ins of measured implant field maps.
struct FieldSourceConfig {
  double bilateral_probability = 0.5;
  // Implant-induced off-resonance at the nearest image edge [Hz].
  std::array<double, 2> implant_edge_hz{300.0, 1200.0};
  // Implant centers sit this many pixels outside the lateral image edges.
  std::array<double, 2> implant_offset_px{10.0, 30.0};
  // Rectal-gas off-resonance one gas radius from its center [Hz].
  std::array<double, 2> gas_hz{30.0, 120.0};
  double background_gradient_hz_per_px = 1.0;
  int harmonic_order = 6;
  int low_keep_order = 2;
  std::array<double, 2> hi_scale_range{0.5, 2.0};
  double cap_hz = kDefaultFieldCapHz;
};

struct BenchmarkConfig {
  int phantom_count = 20;
  int slices_per_phantom = 5;
  int grid = 128;
  Spacing spacing{1.12f, 1.12f};
  double noise_sigma = 0.01;
  int max_lesions = 2;
  FieldSourceConfig field;
  EpiParams epi{};  // s_pe and pe_axis are set per direction
  std::vector<PeDirection> directions{PeDirection::LR, PeDirection::RL, PeDirection::AP, PeDirection::PA};
  std::array<double, 3> split{0.8, 0.1, 0.1};  // train, val, test
  DwiParams dwi;
  VdmConvention convention = VdmConvention::multiply_esp;
  std::uint64_t seed = 1;
};

void validate_benchmark_config(const BenchmarkConfig& cfg);

using LogFn = std::function<void(const std::string&)>;

struct RunOptions {
  int jobs = 1;
  LogFn log;  // diagnostics; may be empty
};

// Subject-level split: maps subject index -> "train" / "val" / "test".
std::vector<std::string> assign_splits(int subjects, const std::array<double, 3>& fractions,
                                       std::uint64_t seed);

// Deterministic phantom and field for one (subject, slice).
PhantomSpec subject_phantom(const BenchmarkConfig& cfg, int subject, int slice);
DipoleSpec subject_dipoles(const BenchmarkConfig& cfg, const PhantomSpec& phantom, int subject, int slice);
Image2D subject_field(const BenchmarkConfig& cfg, const PhantomSpec& phantom, int subject, int slice);

// Sample directory layout:
//   clean/{b50,b1400,adc,t2w,mask}  distorted/{b50,b1400,adc}
//   reverse/{b50,b1400,adc}         truth/{field_hz,vdm_px}  params.json
// Returns channel -> stem relative to `dir`.
std::vector<std::pair<std::string, std::string>> write_sample(const SimulatedSample& s,
                                                              const std::filesystem::path& dir);
SimulatedSample read_sample(const std::filesystem::path& dir);

// Phantom output directory: b50, adc, t2w, mask.
void write_phantom(const PhantomImages& p, const std::filesystem::path& dir);
CleanInputs read_phantom(const std::filesystem::path& dir);

DatasetManifest make_dataset(const BenchmarkConfig& cfg, const std::filesystem::path& out_dir,
                             const RunOptions& run = {});

inline const std::vector<std::string>& benchmark_methods() {
  static const std::vector<std::string> kMethods{"baseline", "fugue-ideal", "topup-ideal",
                                                 "topup-default", "neural"};
  return kMethods;
}

// Throws ValidationError for unknown names, listing the valid ones.
void validate_methods(const std::vector<std::string>& methods);

struct BenchmarkOptions {
  RestoreOptions restore;
  // Directory of neural predictions: <dir>/<sample_id>/{b50,adc,b1400}.
  std::optional<std::filesystem::path> neural_dir;
  std::vector<std::string> splits{"test"};
  bool reference_free = false;  // images and masks only, no metrics
  std::optional<double> fixed_peak;
  int jobs = 1;
  LogFn log;
};

struct RestoredChannels {
  ClinicalChannels images;
  std::optional<Image2D> confidence_mask;
  std::optional<Image2D> estimated_vdm;
};

// Applies one correction method to a loaded sample. "neural" is not handled here.
RestoredChannels apply_method(const std::string& method, const SimulatedSample& s,
                              const RestoreOptions& opts, const DwiParams& dwi = {});

// Lines along pe_axis that contain a non-invertible pixel inside `mask`,
// intersected with `mask`. Empty optional when there are none.
std::optional<Image2D> fold_line_mask(const Image2D& vdm, const Image2D& mask, double eps);

EvalReport run_benchmark(const std::filesystem::path& manifest_path, const std::vector<std::string>& methods,
                         const std::filesystem::path& out_dir, const BenchmarkOptions& opts = {});

}  // namespace epid

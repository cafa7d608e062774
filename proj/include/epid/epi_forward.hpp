#pragma once

#include <optional>

#include "epid/dwi.hpp"
#include "epid/epi_params.hpp"
#include "epid/image.hpp"

namespace epid {

// How echo spacing enters the displacement formula. `multiply_esp` is the
// dimensionally consistent form (shift = df * effective readout duration);
// `divide_esp` reproduces the historically printed variant for auditing.
enum class VdmConvention { multiply_esp, divide_esp };

// Pixels of shift per Hz of off-resonance, including the sign s_pe.
double vdm_px_per_hz(const EpiParams& p, VdmConvention conv = VdmConvention::multiply_esp);

// Shift in pixels for a single off-resonance value.
double vdm_shift_px(double delta_f_hz, const EpiParams& p,
                    VdmConvention conv = VdmConvention::multiply_esp);

// Voxel displacement map (kind vdm_px, pe_axis from p). Throws
// DisplacementOverflow when any |shift| reaches the extent along pe_axis.
Image2D compute_vdm(const Image2D& field_hz, const EpiParams& p,
                    VdmConvention conv = VdmConvention::multiply_esp);

struct SplatResult {
  Image2D image;
  double dropped_fraction = 0.0;  // share of |intensity| deposited off-grid
};

// Pushes every pixel to (k + vdm) along vdm.pe_axis, splitting it linearly
// between the two neighbouring integer positions. Accumulates in double.
SplatResult forward_splat_detailed(const Image2D& img, const Image2D& vdm);
Image2D forward_splat(const Image2D& img, const Image2D& vdm);

struct CleanInputs {
  Image2D dwi_b50;
  Image2D adc;
  Image2D t2w;
  std::optional<Image2D> mask;
};

struct ClinicalChannels {
  Image2D b50;
  Image2D b1400;
  Image2D adc;
};

struct SimulatedSample {
  ClinicalChannels clean;
  Image2D clean_t2w;
  std::optional<Image2D> mask;
  ClinicalChannels distorted;
  // Same field acquired with the opposite PE sign (dual-PE evaluation only).
  std::optional<ClinicalChannels> reverse;
  Image2D field_hz;
  Image2D vdm_px;
  EpiParams params;
  double dropped_fraction = 0.0;
};

struct SimulateOptions {
  DwiParams dwi;
  VdmConvention convention = VdmConvention::multiply_esp;
  bool with_reverse = true;
};

// Distorts b50 and the synthesized b1400 by splatting; the distorted ADC is
// recomputed from the distorted pair and the clean ADC from the clean pair,
// so a zero field yields identical clean and distorted channels. T2W stays
// undistorted as the anatomical reference.
SimulatedSample simulate_pair(const CleanInputs& clean, const Image2D& field_hz, const EpiParams& p,
                              const SimulateOptions& opts = {});

}  // namespace epid

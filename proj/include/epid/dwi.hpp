#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epid/image.hpp"

namespace epid {

struct DwiParams {
  double b_low = 50.0;       // s/mm^2
  double b_high = 1400.0;    // s/mm^2
  double adc_floor = 1e-5;   // mm^2/s
  double adc_ceiling = 5e-3; // mm^2/s
  double signal_floor = 1e-6;
};

void validate_dwi_params(const DwiParams& p);

// Mono-exponential ADC from two b-values, clamped to [adc_floor, adc_ceiling].
Image2D compute_adc(const Image2D& s_low, const Image2D& s_high, const DwiParams& p = {});

// S_high = S_low * exp(-ADC * (b_high - b_low)).
Image2D synth_high_b(const Image2D& s_low, const Image2D& adc, const DwiParams& p = {});

struct Ellipse {
  double row = 0.0;
  double col = 0.0;
  double semi_row = 1.0;
  double semi_col = 1.0;
};

struct Lesion {
  double row = 0.0;
  double col = 0.0;
  double radius = 4.0;
  double intensity_mult = 1.4;
  double adc = 0.8e-3;
};

// Tissue properties for one compartment.
struct Tissue {
  double b50 = 0.0;
  double adc = 0.0;
  double t2w = 0.0;
};

struct PhantomSpec {
  int width = 128;
  int height = 128;
  Spacing spacing{1.12f, 1.12f};

  Ellipse body{63.5, 63.5, 48.0, 58.0};
  Tissue body_tissue{0.30, 1.4e-3, 0.35};

  Ellipse gland{57.0, 63.5, 19.0, 25.0};
  Tissue peripheral_zone{0.75, 1.8e-3, 0.90};
  // The transition zone is the gland ellipse scaled by tz_scale and shifted
  // anteriorly (toward row 0) by tz_shift * gland.semi_row.
  double tz_scale = 0.6;
  double tz_shift = 0.25;
  Tissue transition_zone{0.60, 1.4e-3, 0.60};

  std::vector<Lesion> lesions;
  double lesion_t2w_mult = 0.5;

  Ellipse rectum{87.0, 63.5, 8.0, 11.0};  // gas void: zero signal

  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct PhantomImages {
  Image2D dwi_b50;
  Image2D adc;
  Image2D t2w;
  Image2D mask;  // body (anatomy) mask
  std::vector<std::string> warnings;
};

// Throws ValidationError when ADC guard rails or geometry are violated.
void validate_phantom_spec(const PhantomSpec& spec);

// Piecewise-smooth pelvic phantom. Compartment edges are anti-aliased by 4x4
// supersampled coverage. Rician noise at noise_sigma is added to b50 and T2W
// (ADC stays noiseless). Deterministic in the spec, including its seed.
PhantomImages generate_phantom(const PhantomSpec& spec);

}  // namespace epid

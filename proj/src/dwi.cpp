#include "epid/dwi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epid/error.hpp"
#include "epid/random.hpp"

namespace epid {

void validate_dwi_params(const DwiParams& p) {
  if (!(p.b_low >= 0.0)) throw ValidationError("b_low must be >= 0");
  if (!(p.b_high > p.b_low)) throw ValidationError("b_high must exceed b_low");
  if (!(p.adc_floor >= 0.0) || !(p.adc_ceiling > p.adc_floor)) {
    throw ValidationError("adc clamps must satisfy 0 <= adc_floor < adc_ceiling");
  }
  if (!(p.signal_floor > 0.0)) throw ValidationError("signal_floor must be > 0");
}

Image2D compute_adc(const Image2D& s_low, const Image2D& s_high, const DwiParams& p) {
  validate_dwi_params(p);
  require_same_geometry(s_low, s_high, "compute_adc");
  Image2D out = s_low.zeros_like(ImageKind::adc);
  const double delta_b = p.b_high - p.b_low;
  const auto lo = s_low.pixels();
  const auto hi = s_high.pixels();
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double a = std::max(static_cast<double>(lo[i]), p.signal_floor);
    const double b = std::max(static_cast<double>(hi[i]), p.signal_floor);
    const double adc = std::log(a / b) / delta_b;
    px[i] = static_cast<float>(std::clamp(adc, p.adc_floor, p.adc_ceiling));
  }
  return out;
}

Image2D synth_high_b(const Image2D& s_low, const Image2D& adc, const DwiParams& p) {
  validate_dwi_params(p);
  require_same_geometry(s_low, adc, "synth_high_b");
  Image2D out = s_low.zeros_like(ImageKind::dwi_b1400);
  const double delta_b = p.b_high - p.b_low;
  const auto lo = s_low.pixels();
  const auto d = adc.pixels();
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (d[i] < 0.0f) throw InvariantError("synth_high_b: negative ADC at index " + std::to_string(i));
    px[i] = static_cast<float>(lo[i] * std::exp(-static_cast<double>(d[i]) * delta_b));
  }
  return out;
}

namespace {

bool inside(const Ellipse& e, double row, double col) {
  const double dr = (row - e.row) / e.semi_row;
  const double dc = (col - e.col) / e.semi_col;
  return dr * dr + dc * dc <= 1.0;
}

bool inside(const Lesion& l, double row, double col) {
  const double dr = row - l.row;
  const double dc = col - l.col;
  return dr * dr + dc * dc <= l.radius * l.radius;
}

// Fraction of a 4x4 subsample grid inside the region.
template <typename Region>
double coverage(const Region& region, int row, int col) {
  constexpr int kSub = 4;
  int hits = 0;
  for (int i = 0; i < kSub; ++i) {
    for (int j = 0; j < kSub; ++j) {
      const double r = row + (i + 0.5) / kSub - 0.5;
      const double c = col + (j + 0.5) / kSub - 0.5;
      if (inside(region, r, c)) ++hits;
    }
  }
  return static_cast<double>(hits) / (kSub * kSub);
}

void check_benign(const Tissue& t, const char* name) {
  if (t.adc < 1.2e-3 || t.adc > 2.2e-3) {
    std::ostringstream os;
    os << "phantom: " << name << " ADC " << t.adc << " outside benign range [1.2e-3, 2.2e-3]";
    throw ValidationError(os.str());
  }
}

void check_ellipse(const Ellipse& e, const char* name) {
  if (!(e.semi_row > 0.0) || !(e.semi_col > 0.0)) {
    throw ValidationError(std::string("phantom: ") + name + " semi-axes must be positive");
  }
}

}  // namespace

void validate_phantom_spec(const PhantomSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ValidationError("phantom: grid size must be positive");
  if (!(spec.spacing.row_mm > 0.0f) || !(spec.spacing.col_mm > 0.0f)) {
    throw ValidationError("phantom: spacing must be positive");
  }
  check_ellipse(spec.body, "body");
  check_ellipse(spec.gland, "gland");
  check_ellipse(spec.rectum, "rectum");
  check_benign(spec.body_tissue, "body");
  check_benign(spec.peripheral_zone, "peripheral zone");
  check_benign(spec.transition_zone, "transition zone");
  if (!(spec.tz_scale > 0.0 && spec.tz_scale < 1.0)) {
    throw ValidationError("phantom: tz_scale must lie in (0, 1)");
  }
  for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
    const auto& l = spec.lesions[i];
    if (l.adc < 0.4e-3 || l.adc > 1.2e-3) {
      throw ValidationError("phantom: lesion " + std::to_string(i) +
                            " ADC outside [0.4e-3, 1.2e-3]");
    }
    if (!(l.radius > 0.0)) throw ValidationError("phantom: lesion radius must be positive");
    if (!(l.intensity_mult >= 0.0)) throw ValidationError("phantom: lesion intensity_mult must be >= 0");
  }
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("phantom: noise_sigma must be >= 0");
}

PhantomImages generate_phantom(const PhantomSpec& spec) {
  validate_phantom_spec(spec);
  const int w = spec.width;
  const int h = spec.height;
  PhantomImages out{Image2D(w, h, ImageKind::dwi_b50, spec.spacing),
                    Image2D(w, h, ImageKind::adc, spec.spacing),
                    Image2D(w, h, ImageKind::t2w, spec.spacing),
                    Image2D(w, h, ImageKind::mask, spec.spacing),
                    {}};

  for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
    const auto& l = spec.lesions[i];
    const double dr = (l.row - spec.gland.row) / std::max(spec.gland.semi_row - l.radius, 1e-9);
    const double dc = (l.col - spec.gland.col) / std::max(spec.gland.semi_col - l.radius, 1e-9);
    if (dr * dr + dc * dc > 1.0) {
      out.warnings.push_back("lesion " + std::to_string(i) + " extends outside the gland");
    }
  }

  Ellipse tz = spec.gland;
  tz.semi_row *= spec.tz_scale;
  tz.semi_col *= spec.tz_scale;
  tz.row -= spec.tz_shift * spec.gland.semi_row;

  auto blend = [](double& value, double target, double cov) { value = (1.0 - cov) * value + cov * target; };

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double b50 = 0.0;
      double adc = 0.0;
      double t2 = 0.0;

      const double body = coverage(spec.body, r, c);
      blend(b50, spec.body_tissue.b50, body);
      blend(adc, spec.body_tissue.adc, body);
      blend(t2, spec.body_tissue.t2w, body);

      const double gland = coverage(spec.gland, r, c);
      blend(b50, spec.peripheral_zone.b50, gland);
      blend(adc, spec.peripheral_zone.adc, gland);
      blend(t2, spec.peripheral_zone.t2w, gland);

      const double inner = std::min(coverage(tz, r, c), gland);
      blend(b50, spec.transition_zone.b50, inner);
      blend(adc, spec.transition_zone.adc, inner);
      blend(t2, spec.transition_zone.t2w, inner);

      for (const auto& l : spec.lesions) {
        const double cov = coverage(l, r, c);
        if (cov == 0.0) continue;
        b50 *= 1.0 + cov * (l.intensity_mult - 1.0);
        t2 *= 1.0 + cov * (spec.lesion_t2w_mult - 1.0);
        blend(adc, l.adc, cov);
      }

      const double gas = coverage(spec.rectum, r, c);
      blend(b50, 0.0, gas);
      blend(adc, 0.0, gas);
      blend(t2, 0.0, gas);

      out.dwi_b50.at(r, c) = static_cast<float>(b50);
      out.adc.at(r, c) = static_cast<float>(adc);
      out.t2w.at(r, c) = static_cast<float>(t2);
      out.mask.at(r, c) = body >= 0.5 ? 1.0f : 0.0f;
    }
  }

  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed);
    auto rician = [&](Image2D& img) {
      for (float& v : img.pixels()) {
        const double re = v + spec.noise_sigma * rng.normal();
        const double im = spec.noise_sigma * rng.normal();
        v = static_cast<float>(std::sqrt(re * re + im * im));
      }
    };
    rician(out.dwi_b50);
    rician(out.t2w);
  }
  return out;
}

}  // namespace epid

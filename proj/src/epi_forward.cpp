#include "epid/epi_forward.hpp"

#include <cmath>
#include <sstream>

#include "epid/error.hpp"

namespace epid {

double vdm_px_per_hz(const EpiParams& p, VdmConvention conv) {
  validate_epi_params(p);
  const double echo_train = p.n_pe * p.pf / p.r - 1.0;
  const double scale = conv == VdmConvention::multiply_esp ? echo_train * p.esp_s : echo_train / p.esp_s;
  return p.s_pe * scale;
}

double vdm_shift_px(double delta_f_hz, const EpiParams& p, VdmConvention conv) {
  return delta_f_hz * vdm_px_per_hz(p, conv);
}

Image2D compute_vdm(const Image2D& field_hz, const EpiParams& p, VdmConvention conv) {
  validate_image(field_hz);
  const double k = vdm_px_per_hz(p, conv);
  const int extent = p.pe_axis == PeAxis::row ? field_hz.height() : field_hz.width();

  Image2D vdm = field_hz.zeros_like(ImageKind::vdm_px);
  vdm.set_pe_axis(p.pe_axis);
  const auto src = field_hz.pixels();
  auto px = vdm.pixels();
  double worst = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double shift = static_cast<double>(src[i]) * k;
    worst = std::max(worst, std::abs(shift));
    px[i] = static_cast<float>(shift);
  }
  if (!(worst < extent)) {
    std::ostringstream os;
    os << "displacement overflow: max |shift| " << worst << " px >= extent " << extent
       << " px along pe_axis " << to_string(p.pe_axis);
    throw DisplacementOverflow(os.str());
  }
  return vdm;
}

SplatResult forward_splat_detailed(const Image2D& img, const Image2D& vdm) {
  require_same_geometry(img, vdm, "forward_splat");
  if (vdm.kind() != ImageKind::vdm_px) {
    throw GeometryError("forward_splat: displacement image must have kind vdm_px");
  }
  const LineLayout layout(img, vdm.pe_axis());
  const auto src = img.pixels();
  const auto disp = vdm.pixels();
  std::vector<double> acc(img.size(), 0.0);

  double total = 0.0;
  double kept = 0.0;
  const int n = layout.length;
  for (int l = 0; l < layout.lines; ++l) {
    for (int k = 0; k < n; ++k) {
      const std::size_t from = layout.index(l, k);
      const double value = src[from];
      const double target = k + static_cast<double>(disp[from]);
      const double base = std::floor(target);
      const double frac = target - base;
      const int i0 = static_cast<int>(base);
      total += std::abs(value);
      if (i0 >= 0 && i0 < n) {
        acc[layout.index(l, i0)] += (1.0 - frac) * value;
        kept += (1.0 - frac) * std::abs(value);
      }
      if (i0 + 1 >= 0 && i0 + 1 < n) {
        acc[layout.index(l, i0 + 1)] += frac * value;
        kept += frac * std::abs(value);
      }
    }
  }

  SplatResult out{img.zeros_like(img.kind()), 0.0};
  out.image.set_pe_axis(vdm.pe_axis());
  auto px = out.image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(acc[i]);
  out.dropped_fraction = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;
  return out;
}

Image2D forward_splat(const Image2D& img, const Image2D& vdm) {
  return forward_splat_detailed(img, vdm).image;
}

namespace {

ClinicalChannels distort(const ClinicalChannels& clean, const Image2D& vdm, const DwiParams& dwi,
                         double* dropped) {
  auto b50 = forward_splat_detailed(clean.b50, vdm);
  auto b1400 = forward_splat_detailed(clean.b1400, vdm);
  if (dropped) *dropped = b50.dropped_fraction;
  Image2D adc = compute_adc(b50.image, b1400.image, dwi);
  adc.set_pe_axis(vdm.pe_axis());
  return {std::move(b50.image), std::move(b1400.image), std::move(adc)};
}

}  // namespace

SimulatedSample simulate_pair(const CleanInputs& clean, const Image2D& field_hz, const EpiParams& p,
                              const SimulateOptions& opts) {
  require_same_geometry(clean.dwi_b50, clean.adc, "simulate_pair (adc)");
  require_same_geometry(clean.dwi_b50, clean.t2w, "simulate_pair (t2w)");
  require_same_geometry(clean.dwi_b50, field_hz, "simulate_pair (field)");
  if (clean.mask) require_same_geometry(clean.dwi_b50, *clean.mask, "simulate_pair (mask)");

  SimulatedSample s;
  s.params = p;
  s.field_hz = field_hz;
  s.field_hz.set_kind(ImageKind::field_hz);
  s.vdm_px = compute_vdm(field_hz, p, opts.convention);

  s.clean.b50 = clean.dwi_b50;
  s.clean.b50.set_kind(ImageKind::dwi_b50);
  s.clean.b1400 = synth_high_b(clean.dwi_b50, clean.adc, opts.dwi);
  s.clean.adc = compute_adc(s.clean.b50, s.clean.b1400, opts.dwi);
  s.clean_t2w = clean.t2w;
  s.mask = clean.mask;

  s.distorted = distort(s.clean, s.vdm_px, opts.dwi, &s.dropped_fraction);
  if (opts.with_reverse) {
    const Image2D reverse_vdm = compute_vdm(field_hz, reversed(p), opts.convention);
    s.reverse = distort(s.clean, reverse_vdm, opts.dwi, nullptr);
  }
  return s;
}

}  // namespace epid

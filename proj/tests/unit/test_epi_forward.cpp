#include <cmath>

#include "../oracles/frozen_values.hpp"
#include "../support.hpp"
#include "doctest.h"
#include "epid/correct.hpp"
#include "epid/dwi.hpp"
#include "epid/epi_forward.hpp"
#include "epid/error.hpp"

using namespace epid;

namespace {

Image2D constant_vdm(int w, int h, PeAxis axis, float value) {
  Image2D v(w, h, ImageKind::vdm_px, {}, axis);
  for (float& x : v.pixels()) x = value;
  return v;
}

}  // namespace

TEST_CASE("worked displacement value") {
  EpiParams p;
  p.n_pe = 128;
  p.pf = 1.0;
  p.r = 2.0;
  p.esp_s = 5e-4;
  CHECK(std::abs(vdm_shift_px(10.0, p) - oracle::kShiftWorkedPx) < 1e-9);
  p.s_pe = -1;
  CHECK(vdm_shift_px(10.0, p) == -oracle::kShiftWorkedPx);
  CHECK(std::abs(vdm_shift_px(10.0, p, VdmConvention::divide_esp) + 10.0 * 63.0 / 5e-4) < 1e-6);
}

TEST_CASE("zero field gives zero displacement and an unchanged image") {
  Rng rng(2);
  const Image2D img = testsupport::random_image(16, 12, rng);
  const Image2D field(16, 12, ImageKind::field_hz);
  const Image2D vdm = compute_vdm(field, EpiParams{});
  for (float v : vdm.pixels()) CHECK(v == 0.0f);
  CHECK(forward_splat(img, vdm).pixels().size() == img.size());
  const Image2D out = forward_splat(img, vdm);
  for (std::size_t k = 0; k < img.size(); ++k) CHECK(out.pixels()[k] == img.pixels()[k]);
}

TEST_CASE("sign flip and power-of-two scaling are exact") {
  Rng rng(3);
  const Image2D field = testsupport::random_image(20, 20, rng, ImageKind::field_hz, -10.0, 10.0);
  EpiParams p;
  const Image2D a = compute_vdm(field, p);
  p.s_pe = -1;
  const Image2D b = compute_vdm(field, p);
  Image2D doubled = field;
  for (float& v : doubled.pixels()) v *= 2.0f;
  p.s_pe = 1;
  const Image2D c = compute_vdm(doubled, p);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(b.pixels()[k] == -a.pixels()[k]);
    CHECK(c.pixels()[k] == 2.0f * a.pixels()[k]);
  }
}

TEST_CASE("displacement overflow and parameter validation") {
  Image2D field(16, 16, ImageKind::field_hz);
  for (float& v : field.pixels()) v = 2000.0f;
  CHECK_THROWS_AS(compute_vdm(field, EpiParams{}), DisplacementOverflow);
  EpiParams bad;
  bad.s_pe = 0;
  CHECK_THROWS_AS(validate_epi_params(bad), ValidationError);
  bad = EpiParams{};
  bad.pf = 1.5;
  CHECK_THROWS_AS(validate_epi_params(bad), ValidationError);
}

TEST_CASE("uniform one-pixel shift translates along the PE axis") {
  Rng rng(4);
  const Image2D img = testsupport::random_image(10, 8, rng);
  const Image2D rows = forward_splat(img, constant_vdm(10, 8, PeAxis::row, 1.0f));
  const Image2D cols = forward_splat(img, constant_vdm(10, 8, PeAxis::col, 1.0f));
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 10; ++c) {
      CHECK(rows.at(r, c) == (r == 0 ? 0.0f : img.at(r - 1, c)));
      CHECK(cols.at(r, c) == (c == 0 ? 0.0f : img.at(r, c - 1)));
    }
  }
  const SplatResult det = forward_splat_detailed(img, constant_vdm(10, 8, PeAxis::row, 1.0f));
  double last_row = 0.0;
  double total = 0.0;
  for (int c = 0; c < 10; ++c) last_row += img.at(7, c);
  for (float v : img.pixels()) total += v;
  CHECK(det.dropped_fraction == doctest::Approx(last_row / total).epsilon(1e-6));
}

TEST_CASE("converging displacement conserves the column and piles up") {
  const int n = 40;
  Image2D img(1, n, ImageKind::dwi_b50);
  Image2D vdm(1, n, ImageKind::vdm_px, {}, PeAxis::row);
  double oracle_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    img.at(k, 0) = 1.0f + 0.01f * static_cast<float>(k);
    oracle_sum += 1.0 + 0.01 * k;
    vdm.at(k, 0) = k < n / 2 ? 2.0f : -2.0f;
  }
  const Image2D out = forward_splat(img, vdm);
  double sum = 0.0;
  float peak = 0.0f;
  for (float v : out.pixels()) {
    sum += v;
    peak = std::max(peak, v);
  }
  CHECK(std::abs(sum - oracle_sum) / oracle_sum < 1e-4);
  CHECK(peak > 1.9f);
  CHECK(out.at(n / 2, 0) > 1.9f);
}

TEST_CASE("distortion acts only along the chosen axis") {
  Rng rng(5);
  const Image2D img = testsupport::random_image(24, 18, rng);
  for (PeAxis axis : {PeAxis::row, PeAxis::col}) {
    Image2D vdm = testsupport::smooth_vdm(24, 18, axis, rng, 3.0, 0.8);
    const LineLayout layout(vdm, axis);
    for (int l = 0; l < layout.lines; ++l) {
      for (int k = 0; k < layout.length; ++k) {
        float& d = vdm.pixels()[layout.index(l, k)];
        d = std::clamp(d, static_cast<float>(-k), static_cast<float>(layout.length - 1 - k));
      }
    }
    const Image2D out = forward_splat(img, vdm);
    // Marginal over the PE index for each line: unchanged.
    for (int l = 0; l < layout.lines; ++l) {
      double before = 0.0;
      double after = 0.0;
      for (int k = 0; k < layout.length; ++k) {
        before += img.pixels()[layout.index(l, k)];
        after += out.pixels()[layout.index(l, k)];
      }
      CHECK(std::abs(after - before) / before < 1e-4);
    }
  }
}

TEST_CASE("simulated pair: zero field keeps clean and distorted equal") {
  PhantomSpec spec;
  spec.width = 48;
  spec.height = 48;
  spec.body = {23.5, 23.5, 18, 22};
  spec.gland = {21, 23.5, 8, 10};
  spec.lesions = {Lesion{21, 23.5, 2.0, 1.4, 0.8e-3}};
  spec.rectum = {33, 23.5, 3, 4};
  const PhantomImages ph = generate_phantom(spec);
  const CleanInputs clean{ph.dwi_b50, ph.adc, ph.t2w, ph.mask};
  const Image2D zero(48, 48, ImageKind::field_hz, ph.dwi_b50.spacing());
  const SimulatedSample s = simulate_pair(clean, zero, EpiParams{});
  CHECK(s.distorted.b50 == s.clean.b50);
  CHECK(s.distorted.b1400 == s.clean.b1400);
  CHECK(s.distorted.adc.pixels().size() == s.clean.adc.pixels().size());
  for (std::size_t k = 0; k < s.clean.adc.size(); ++k) CHECK(s.distorted.adc.pixels()[k] == s.clean.adc.pixels()[k]);
  REQUIRE(s.reverse.has_value());
  CHECK(s.clean_t2w == ph.t2w);
}

TEST_CASE("simulated pair with a field is accepted by the dual-PE restorer") {
  PhantomSpec spec;
  spec.width = 48;
  spec.height = 48;
  spec.body = {23.5, 23.5, 18, 22};
  spec.gland = {21, 23.5, 8, 10};
  spec.lesions.clear();
  spec.rectum = {33, 23.5, 3, 4};
  const PhantomImages ph = generate_phantom(spec);
  Rng rng(6);
  Image2D field = testsupport::smooth_vdm(48, 48, PeAxis::row, rng, 80.0, 1e9);
  field.set_kind(ImageKind::field_hz);
  field.set_spacing(ph.dwi_b50.spacing());
  const SimulatedSample s = simulate_pair({ph.dwi_b50, ph.adc, ph.t2w, ph.mask}, field, EpiParams{});
  REQUIRE(s.reverse.has_value());
  for (std::size_t k = 0; k < s.vdm_px.size(); ++k) CHECK(s.vdm_px.pixels()[k] == doctest::Approx(field.pixels()[k] * vdm_px_per_hz(EpiParams{})).epsilon(1e-5));
  const Image2D restored = restore_dual_pe(s.distorted.b50, s.reverse->b50, s.vdm_px);
  CHECK(restored.same_geometry(s.clean.b50));
}

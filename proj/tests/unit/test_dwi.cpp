#include <cmath>

#include "../oracles/frozen_values.hpp"
#include "doctest.h"
#include "epid/dwi.hpp"
#include "epid/error.hpp"

using namespace epid;

namespace {

Image2D filled(ImageKind kind, float v, int w = 4, int h = 3) {
  Image2D img(w, h, kind);
  for (float& x : img.pixels()) x = v;
  return img;
}

PhantomSpec small_spec() {
  PhantomSpec s;
  s.width = 64;
  s.height = 64;
  s.body = {31.5, 31.5, 24, 29};
  s.gland = {28, 31.5, 10, 12};
  s.lesions = {Lesion{28, 33, 3.0, 1.4, 0.7e-3}};
  s.rectum = {43, 31.5, 4, 5};
  return s;
}

}  // namespace

TEST_CASE("equal signals clamp to the ADC floor") {
  const Image2D adc = compute_adc(filled(ImageKind::dwi_b50, 500.0f), filled(ImageKind::dwi_b1400, 500.0f));
  for (float v : adc.pixels()) CHECK(v == static_cast<float>(DwiParams{}.adc_floor));
}

TEST_CASE("hand-evaluated ADC") {
  const float high = static_cast<float>(1000.0 * std::exp(-1.35));
  const Image2D adc = compute_adc(filled(ImageKind::dwi_b50, 1000.0f), filled(ImageKind::dwi_b1400, high));
  for (float v : adc.pixels()) CHECK(std::abs(v - oracle::kAdcWorked) < 1e-9);
}

TEST_CASE("zero high-b signal hits the ceiling") {
  const Image2D adc = compute_adc(filled(ImageKind::dwi_b50, 1000.0f), filled(ImageKind::dwi_b1400, 0.0f));
  for (float v : adc.pixels()) CHECK(v == static_cast<float>(DwiParams{}.adc_ceiling));
}

TEST_CASE("high-b synthesis") {
  const Image2D high = synth_high_b(filled(ImageKind::dwi_b50, 1000.0f), filled(ImageKind::adc, 1e-3f));
  for (float v : high.pixels()) CHECK(v == doctest::Approx(oracle::kHighBWorked).epsilon(1e-6));
  CHECK_THROWS_AS(synth_high_b(filled(ImageKind::dwi_b50, 1.0f), filled(ImageKind::adc, -1e-3f)), ValidationError);
  CHECK_THROWS_AS(synth_high_b(filled(ImageKind::dwi_b50, 1.0f, 3, 3), filled(ImageKind::adc, 1e-3f)),
                  GeometryError);
}

TEST_CASE("dwi parameter validation") {
  DwiParams p;
  p.b_high = 10.0;
  CHECK_THROWS_AS(validate_dwi_params(p), ValidationError);
}

TEST_CASE("phantom is deterministic and carries the lesion ADC") {
  PhantomSpec s = small_spec();
  s.noise_sigma = 0.02;
  s.seed = 3;
  const PhantomImages a = generate_phantom(s);
  const PhantomImages b = generate_phantom(s);
  CHECK(a.dwi_b50 == b.dwi_b50);
  CHECK(a.t2w == b.t2w);
  // Lesion core is fully covered, so it carries the lesion ADC unblended.
  CHECK(a.adc.at(28, 33) == doctest::Approx(0.7e-3).epsilon(1e-5));
  float min_gland = 1.0f;
  for (int r = 24; r <= 32; ++r) {
    for (int c = 28; c <= 38; ++c) min_gland = std::min(min_gland, a.adc.at(r, c));
  }
  CHECK(min_gland == doctest::Approx(0.7e-3).epsilon(1e-5));
  CHECK(a.warnings.empty());
}

TEST_CASE("phantom noise differs by seed with zero-mean difference") {
  PhantomSpec s = small_spec();
  s.noise_sigma = 0.02;
  s.seed = 1;
  const PhantomImages a = generate_phantom(s);
  s.seed = 2;
  const PhantomImages b = generate_phantom(s);
  CHECK_FALSE(a.dwi_b50 == b.dwi_b50);
  CHECK(a.adc == b.adc);
  CHECK(a.mask == b.mask);
  double mean = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < a.dwi_b50.size(); ++k) {
    if (a.mask.pixels()[k] == 0.0f) continue;
    mean += static_cast<double>(a.dwi_b50.pixels()[k]) - b.dwi_b50.pixels()[k];
    ++n;
  }
  mean /= n;
  // Rician difference of two draws: sd <= sqrt(2) sigma.
  CHECK(std::abs(mean) < 3.0 * std::sqrt(2.0) * 0.02 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("phantom guard rails") {
  PhantomSpec s = small_spec();
  s.lesions[0].adc = 1.5e-3;
  CHECK_THROWS_AS(generate_phantom(s), ValidationError);
  s = small_spec();
  s.lesions[0].col = 45.0;  // outside the gland, inside the body
  const PhantomImages p = generate_phantom(s);
  CHECK_FALSE(p.warnings.empty());
}

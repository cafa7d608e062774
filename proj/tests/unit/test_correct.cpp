#include <cmath>

#include "../support.hpp"
#include "doctest.h"
#include "epid/banded.hpp"
#include "epid/correct.hpp"
#include "epid/dwi.hpp"
#include "epid/epi_forward.hpp"
#include "epid/error.hpp"
#include "epid/metrics.hpp"

using namespace epid;

namespace {

PhantomImages small_phantom() {
  PhantomSpec s;
  s.width = 64;
  s.height = 64;
  s.body = {31.5, 31.5, 24, 29};
  s.gland = {28, 31.5, 10, 12};
  s.lesions = {Lesion{28, 33, 3.0, 1.4, 0.7e-3}};
  s.rectum = {43, 31.5, 4, 5};
  return generate_phantom(s);
}

Image2D negated(Image2D v) {
  for (float& x : v.pixels()) x = -x;
  return v;
}

// Column-wise pile-up: a steep negative ramp in the middle rows.
Image2D pileup_vdm(const Image2D& like) {
  Image2D v = like.zeros_like(ImageKind::vdm_px);
  v.set_pe_axis(PeAxis::row);
  for (int r = 0; r < v.height(); ++r) {
    for (int c = 0; c < v.width(); ++c) {
      const double t = (r - 30.0) / 4.0;
      v.at(r, c) = static_cast<float>(-6.0 * std::tanh(t) * (0.6 + 0.4 * std::cos(c * 0.1)));
    }
  }
  return v;
}

}  // namespace

TEST_CASE("unwarp with zero displacement is the identity") {
  Rng rng(1);
  const Image2D img = testsupport::random_image(12, 9, rng);
  const UnwarpResult r = unwarp_fieldmap(img, Image2D(12, 9, ImageKind::vdm_px));
  CHECK(r.restored == img);
  for (float v : r.confidence_mask.pixels()) CHECK(v == 1.0f);
}

TEST_CASE("unwarp inverts constant integer shifts away from the boundary") {
  Rng rng(2);
  const Image2D img = testsupport::random_image(20, 30, rng);
  Image2D vdm(20, 30, ImageKind::vdm_px, {}, PeAxis::row);
  for (float& v : vdm.pixels()) v = 3.0f;
  const UnwarpResult r = unwarp_fieldmap(forward_splat(img, vdm), vdm);
  for (int row = 0; row < 27; ++row) {
    for (int c = 0; c < 20; ++c) CHECK(r.restored.at(row, c) == img.at(row, c));
  }
}

TEST_CASE("confidence mask marks exactly the analytic fold") {
  const int n = 40;
  const int x1 = 12;
  const int x2 = 20;
  Image2D vdm(1, n, ImageKind::vdm_px, {}, PeAxis::row);
  for (int k = 0; k < n; ++k) {
    const int clamped = std::clamp(k, x1, x2);
    vdm.at(k, 0) = static_cast<float>(-1.5 * (clamped - x1));
  }
  Image2D img(1, n, ImageKind::dwi_b50);
  for (float& v : img.pixels()) v = 1.0f;
  const UnwarpResult r = unwarp_fieldmap(forward_splat(img, vdm), vdm);
  for (int k = 0; k < n; ++k) CHECK(r.confidence_mask.at(k, 0) == ((k > x1 && k < x2) ? 0.0f : 1.0f));
}

TEST_CASE("dual-PE with zero displacement and no smoothing is the exact mean") {
  Rng rng(3);
  const Image2D a = testsupport::random_image(16, 11, rng);
  const Image2D b = testsupport::random_image(16, 11, rng);
  RestoreOptions opts;
  opts.lambda_smooth = 0.0;
  const Image2D u = restore_dual_pe(a, b, Image2D(16, 11, ImageKind::vdm_px), opts);
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK(u.pixels()[k] == static_cast<float>((static_cast<double>(a.pixels()[k]) + b.pixels()[k]) / 2.0));
  }
}

TEST_CASE("regularization path: data term rises, roughness falls") {
  Rng rng(4);
  const int n = 48;
  std::vector<double> truth(n);
  std::vector<double> disp(n);
  for (int k = 0; k < n; ++k) {
    truth[k] = 1.0 + std::sin(0.3 * k);
    disp[k] = 3.0 * std::sin(0.12 * k);
  }
  std::vector<double> neg(disp);
  for (double& v : neg) v = -v;
  auto plus = line::splat(truth, disp);
  auto minus = line::splat(truth, neg);
  for (double& v : plus) v += 0.05 * rng.normal();
  for (double& v : minus) v += 0.05 * rng.normal();
  double prev_data = -1.0;
  double prev_smooth = std::numeric_limits<double>::infinity();
  for (double lambda : {0.01, 0.1, 1.0}) {
    std::vector<double> u;
    REQUIRE(line::solve_dual_pe(plus, minus, disp, lambda, u));
    const auto terms = line::dual_pe_terms(u, plus, minus, disp);
    CHECK(terms.data >= prev_data);
    CHECK(terms.smoothness <= prev_smooth);
    prev_data = terms.data;
    prev_smooth = terms.smoothness;
  }
}

TEST_CASE("dual-PE beats single-image unwarping on a pile-up field") {
  const PhantomImages ph = small_phantom();
  Image2D vdm = pileup_vdm(ph.dwi_b50);
  const Image2D plus = forward_splat(ph.dwi_b50, vdm);
  const Image2D minus = forward_splat(ph.dwi_b50, negated(vdm));
  const Image2D dual = restore_dual_pe(plus, minus, vdm);
  const UnwarpResult single = unwarp_fieldmap(plus, vdm);
  CHECK(nmse(ph.dwi_b50, dual, ph.mask) < nmse(ph.dwi_b50, single.restored, ph.mask));
  // The solver minimizes its own objective.
  const RestoreOptions opts;
  CHECK(dual_pe_objective(dual, plus, minus, vdm, opts.lambda_smooth) <=
        dual_pe_objective(single.restored, plus, minus, vdm, opts.lambda_smooth));
}

TEST_CASE("fully folded line without smoothing is ill-posed") {
  const int n = 16;
  Image2D vdm(3, n, ImageKind::vdm_px, {}, PeAxis::row);
  for (int k = 0; k < n; ++k) vdm.at(k, 1) = static_cast<float>(-k);
  Image2D img(3, n, ImageKind::dwi_b50);
  for (float& v : img.pixels()) v = 1.0f;
  RestoreOptions opts;
  opts.lambda_smooth = 0.0;
  try {
    restore_dual_pe(img, img, vdm, opts);
    FAIL("expected IllPosedError");
  } catch (const IllPosedError& e) {
    CHECK(std::string(e.what()).find(": 1") != std::string::npos);
  }
  opts.lambda_smooth = 0.05;
  CHECK_NOTHROW(restore_dual_pe(img, img, vdm, opts));
}

TEST_CASE("banded LDL solve matches dense elimination") {
  Rng rng(5);
  const int n = 30;
  const int bw = 3;
  SymmetricBand band(n, bw);
  std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - bw); j < i; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      band.at(i, j) = v;
      dense[i][j] = dense[j][i] = v;
    }
    band.at(i, i) = dense[i][i] = 8.0 + rng.uniform01();
  }
  std::vector<double> rhs(n);
  for (double& v : rhs) v = rng.uniform(-1.0, 1.0);
  std::vector<double> x(rhs);
  REQUIRE_FALSE(band.factor().has_value());
  band.solve(x);
  // Dense Gaussian elimination oracle.
  std::vector<double> b(rhs);
  for (int p = 0; p < n; ++p) {
    for (int i = p + 1; i < n; ++i) {
      const double f = dense[i][p] / dense[p][p];
      for (int j = p; j < n; ++j) dense[i][j] -= f * dense[p][j];
      b[i] -= f * b[p];
    }
  }
  std::vector<double> y(n);
  for (int p = n - 1; p >= 0; --p) {
    double s = b[p];
    for (int j = p + 1; j < n; ++j) s -= dense[p][j] * y[j];
    y[p] = s / dense[p][p];
  }
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("field estimator symmetry properties") {
  const PhantomImages ph = small_phantom();
  EpiParams p;
  p.pe_axis = PeAxis::row;

  const FieldEstimate same = estimate_field_dual_pe(ph.dwi_b50, ph.dwi_b50, p);
  for (float v : same.vdm.pixels()) CHECK(std::abs(v) < 1e-3);

  Rng rng(6);
  Image2D vdm = testsupport::smooth_vdm(64, 64, PeAxis::row, rng, 4.0, 0.4);
  vdm.set_spacing(ph.dwi_b50.spacing());
  const Image2D plus = forward_splat(ph.dwi_b50, vdm);
  const Image2D minus = forward_splat(ph.dwi_b50, negated(vdm));
  const FieldEstimate fwd = estimate_field_dual_pe(plus, minus, p);
  const FieldEstimate swapped = estimate_field_dual_pe(minus, plus, p);
  CHECK(field_rmse(fwd.vdm, negated(swapped.vdm)) < 0.05);
  CHECK(field_rmse(vdm, fwd.vdm, ph.mask) < 0.2);
  CHECK(fwd.vdm.pe_axis() == PeAxis::row);

  Image2D plus3 = plus;
  Image2D minus3 = minus;
  for (float& v : plus3.pixels()) v *= 3.0f;
  for (float& v : minus3.pixels()) v *= 3.0f;
  const FieldEstimate scaled = estimate_field_dual_pe(plus3, minus3, p);
  CHECK(field_rmse(fwd.vdm, scaled.vdm) < 1e-3);
}

TEST_CASE("restore option validation and method names") {
  RestoreOptions o;
  o.lambda_smooth = -1.0;
  CHECK_THROWS_AS(validate_restore_options(o), ValidationError);
  o = RestoreOptions{};
  o.pyramid_levels = 0;
  CHECK_THROWS_AS(validate_restore_options(o), ValidationError);
  CHECK(parse_correction_method("topup-ideal") == CorrectionMethod::topup_ideal);
  CHECK_THROWS_AS(parse_correction_method("magic"), ValidationError);
}

#include <cmath>

#include "../oracles/frozen_values.hpp"
#include "../support.hpp"
#include "doctest.h"
#include "epid/error.hpp"
#include "epid/metrics.hpp"
#include "json.hpp"

using namespace epid;
using testsupport::TempDir;

namespace {

double oracle_nmse(const Image2D& a, const Image2D& b) {
  double num = 0.0;
  double den = 0.0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      num += (double(b.at(r, c)) - a.at(r, c)) * (double(b.at(r, c)) - a.at(r, c));
      den += double(a.at(r, c)) * a.at(r, c);
    }
  }
  return num / den;
}

double oracle_psnr(const Image2D& a, const Image2D& b) {
  double mse = 0.0;
  double peak = a.at(0, 0);
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      mse += (double(b.at(r, c)) - a.at(r, c)) * (double(b.at(r, c)) - a.at(r, c));
      peak = std::max(peak, double(a.at(r, c)));
    }
  }
  mse /= double(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

EvalEntry entry(const std::string& id, int subject, int slice, double psnr_db, double nmse_v) {
  EvalEntry e;
  e.sample_id = id;
  e.subject = subject;
  e.slice = slice;
  e.method = "baseline";
  e.contrast = "b50";
  e.psnr_db = psnr_db;
  e.nmse = nmse_v;
  return e;
}

}  // namespace

TEST_CASE("random 8x8 pairs match double-loop oracles") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Image2D a = testsupport::random_image(8, 8, rng, ImageKind::dwi_b50, 0.1, 1.0);
    const Image2D b = testsupport::random_image(8, 8, rng, ImageKind::dwi_b50, 0.1, 1.0);
    CHECK(std::abs(nmse(a, b) - oracle_nmse(a, b)) < 1e-9);
    CHECK(std::abs(psnr(a, b) - oracle_psnr(a, b)) < 1e-9);
  }
}

TEST_CASE("psnr worked value and infinity sentinel") {
  Image2D a(10, 10, ImageKind::dwi_b50);
  Image2D b(10, 10, ImageKind::dwi_b50);
  a.at(0, 0) = 1.0f;
  b.at(0, 0) = 1.0f;
  for (int k = 1; k < 100; ++k) b.pixels()[k] = 0.0f;
  b.at(5, 5) = 1.0f;  // one error of 1 over 100 pixels: mse 0.01
  CHECK(psnr(a, b) == doctest::Approx(oracle::kPsnrWorkedDb).epsilon(1e-12));
  CHECK(psnr(a, a) == kPsnrInfinite);
  CHECK(nmse(a, a) == 0.0);
}

TEST_CASE("psnr decreases as noise grows") {
  Rng rng(2);
  const Image2D a = testsupport::random_image(16, 16, rng, ImageKind::dwi_b50, 0.2, 1.0);
  Image2D noise = testsupport::random_image(16, 16, rng, ImageKind::dwi_b50, -1.0, 1.0);
  double prev = kPsnrInfinite;
  for (double level : {0.01, 0.05, 0.2}) {
    Image2D b = a;
    for (std::size_t k = 0; k < b.size(); ++k) b.pixels()[k] += static_cast<float>(level * noise.pixels()[k]);
    const double p = psnr(a, b);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("metric preconditions") {
  const Image2D zero(4, 4, ImageKind::dwi_b50);
  CHECK_THROWS_AS(nmse(zero, zero), ValidationError);
  const Image2D empty_mask(4, 4, ImageKind::mask);
  CHECK_THROWS_AS(field_rmse(zero, zero, empty_mask), ValidationError);
  CHECK_THROWS_AS(nmse(Image2D(4, 4, ImageKind::dwi_b50), Image2D(3, 4, ImageKind::dwi_b50)), GeometryError);
}

TEST_CASE("aggregates recompute from entries") {
  EvalReport rep;
  rep.entries = {entry("a", 0, 0, 10.0, 0.1), entry("b", 0, 1, 20.0, 0.3), entry("c", 1, 0, 30.0, 0.2)};
  const auto rows = rep.aggregates();
  bool saw_slice = false;
  bool saw_subject = false;
  for (const auto& row : rows) {
    if (row.granularity == "slice") {
      saw_slice = true;
      CHECK(row.psnr_db.count == 3);
      CHECK(std::abs(row.psnr_db.mean - 20.0) < 1e-12);
      CHECK(std::abs(row.psnr_db.sd - 10.0) < 1e-12);
      CHECK(std::abs(row.nmse.mean - 0.2) < 1e-12);
    } else {
      saw_subject = true;
      CHECK(row.psnr_db.count == 2);
      CHECK(std::abs(row.psnr_db.mean - 22.5) < 1e-12);  // subjects 15 and 30
      CHECK(std::abs(row.psnr_db.sd - std::sqrt(112.5)) < 1e-12);
    }
  }
  CHECK(saw_slice);
  CHECK(saw_subject);
  const Summary single = summarize({4.0});
  CHECK(single.sd == 0.0);
}

TEST_CASE("report files carry the infinity sentinel") {
  TempDir tmp("metrics");
  EvalReport rep;
  rep.entries = {entry("a", 0, 0, kPsnrInfinite, 0.0)};
  write_report(rep, tmp.path());
  const std::string csv = testsupport::slurp(tmp.path() / "report.csv");
  CHECK(csv.find("inf") != std::string::npos);
  const auto j = nlohmann::json::parse(testsupport::slurp(tmp.path() / "report.json"));
  CHECK(j["entries"][0]["psnr_db"] == "inf");
}

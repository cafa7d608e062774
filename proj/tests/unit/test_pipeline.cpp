#include <set>

#include "../support.hpp"
#include "doctest.h"
#include "epid/config.hpp"
#include "epid/error.hpp"
#include "epid/imgio.hpp"
#include "epid/pipeline.hpp"

using namespace epid;
using testsupport::TempDir;

namespace {

BenchmarkConfig tiny(int phantoms, int slices) {
  BenchmarkConfig cfg;
  cfg.phantom_count = phantoms;
  cfg.slices_per_phantom = slices;
  cfg.grid = 64;
  cfg.split = {0.0, 0.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("dataset enumerates subjects x slices x directions") {
  TempDir tmp("pipe");
  const DatasetManifest m = make_dataset(tiny(2, 3), tmp.path());
  CHECK(m.samples.size() + m.skipped.size() == 24);
  CHECK(m.samples.size() == 24);
  CHECK(m.epi_params_used.size() == 4);
  std::set<std::string> ids;
  for (const auto& s : m.samples) ids.insert(s.id);
  CHECK(ids.size() == 24);
  CHECK(read_manifest(tmp.path() / "manifest.json") == m);
  const SimulatedSample s = read_sample(tmp.path() / m.samples[0].dir);
  CHECK(s.reverse.has_value());
  CHECK(s.mask.has_value());
}

TEST_CASE("splits are subject-level and disjoint") {
  BenchmarkConfig cfg;
  const auto splits = assign_splits(20, cfg.split, 99);
  int train = 0;
  int val = 0;
  int test = 0;
  for (const auto& s : splits) {
    train += s == "train";
    val += s == "val";
    test += s == "test";
  }
  CHECK(train == 16);
  CHECK(val == 2);
  CHECK(test == 2);
  CHECK(assign_splits(20, cfg.split, 99) == splits);

  TempDir tmp("pipe");
  BenchmarkConfig small = tiny(5, 2);
  small.split = {0.6, 0.2, 0.2};
  const DatasetManifest m = make_dataset(small, tmp.path());
  std::map<int, std::string> by_subject;
  for (const auto& s : m.samples) {
    auto [it, inserted] = by_subject.emplace(s.subject, s.split);
    CHECK(it->second == s.split);
  }
}

TEST_CASE("baseline on a zero field is perfect") {
  TempDir tmp("pipe");
  BenchmarkConfig cfg = tiny(1, 1);
  cfg.field.implant_edge_hz = {0.0, 0.0};
  cfg.field.gas_hz = {0.0, 0.0};
  cfg.field.background_gradient_hz_per_px = 0.0;
  cfg.directions = {PeDirection::AP};
  make_dataset(cfg, tmp.path() / "d");
  const EvalReport rep = run_benchmark(tmp.path() / "d" / "manifest.json", {"baseline"}, tmp.path() / "e");
  REQUIRE(rep.entries.size() == 3);
  for (const auto& e : rep.entries) {
    CHECK(e.nmse == 0.0);
    CHECK(e.psnr_db == kPsnrInfinite);
  }
}

TEST_CASE("unknown methods fail before any output is written") {
  TempDir tmp("pipe");
  make_dataset(tiny(1, 1), tmp.path() / "d");
  try {
    run_benchmark(tmp.path() / "d" / "manifest.json", {"baseline", "magic"}, tmp.path() / "e");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("topup-default") != std::string::npos);
  }
  CHECK_FALSE(std::filesystem::exists(tmp.path() / "e"));
  CHECK_THROWS_AS(run_benchmark(tmp.path() / "d" / "manifest.json", {"neural"}, tmp.path() / "e"), ValidationError);
}

TEST_CASE("neural predictions are scored from files") {
  TempDir tmp("pipe");
  BenchmarkConfig cfg = tiny(1, 1);
  cfg.directions = {PeDirection::LR};
  const DatasetManifest m = make_dataset(cfg, tmp.path() / "d");
  REQUIRE(m.samples.size() == 1);
  // A perfect "model": copy the clean channels.
  const SimulatedSample s = read_sample(tmp.path() / "d" / m.samples[0].dir);
  const auto pred = tmp.path() / "pred" / m.samples[0].id;
  std::filesystem::create_directories(pred);
  write_image(s.clean.b50, pred / "b50");
  write_image(s.clean.b1400, pred / "b1400");
  write_image(s.clean.adc, pred / "adc");
  BenchmarkOptions opts;
  opts.neural_dir = tmp.path() / "pred";
  const EvalReport rep = run_benchmark(tmp.path() / "d" / "manifest.json", {"neural", "baseline"}, tmp.path() / "e", opts);
  int neural = 0;
  for (const auto& e : rep.entries) {
    if (e.method != "neural") continue;
    ++neural;
    CHECK(e.nmse == 0.0);
  }
  CHECK(neural == 3);
  CHECK(rep.failures.empty());
}

TEST_CASE("missing per-sample inputs become recorded failures") {
  TempDir tmp("pipe");
  BenchmarkConfig cfg = tiny(1, 1);
  cfg.directions = {PeDirection::LR};
  const DatasetManifest m = make_dataset(cfg, tmp.path() / "d");
  std::filesystem::create_directories(tmp.path() / "pred");
  BenchmarkOptions opts;
  opts.neural_dir = tmp.path() / "pred";
  const EvalReport rep = run_benchmark(tmp.path() / "d" / "manifest.json", {"neural", "baseline"}, tmp.path() / "e", opts);
  CHECK(rep.failures.size() == 1);
  CHECK(rep.entries.size() == 3);
}

TEST_CASE("config overrides and unknown keys") {
  auto j = default_config_json();
  apply_override(j, "field.harmonic_order=5");
  apply_override(j, "directions=[\"AP\",\"PA\"]");
  const AppConfig cfg = config_from_json(j);
  CHECK(cfg.bench.field.harmonic_order == 5);
  CHECK(cfg.bench.directions.size() == 2);
  CHECK_THROWS_AS(apply_override(j, "field.nonsense=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "grid=\"big\""), ConfigError);
  CHECK_THROWS_AS(load_config(std::nullopt, {"split=[0.5,0.5,0.5]"}), ConfigError);
  try {
    merge_config(j, nlohmann::json{{"restore", {{"lamda", 1}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("restore.lamda") != std::string::npos);
  }
}

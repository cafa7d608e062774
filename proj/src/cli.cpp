#include "epid/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "epid/config.hpp"
#include "epid/error.hpp"
#include "epid/imgio.hpp"
#include "epid/pipeline.hpp"

namespace epid {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verbose = false;
};

int default_jobs() {
  if (const char* env = std::getenv("EPID_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override a config key, e.g. --set field.harmonic_order=5");
  cmd->add_option("--seed", c.seed, "Master RNG seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads (default $EPID_JOBS or 1)")->check(CLI::PositiveNumber);
  cmd->add_flag("--verbose", c.verbose, "Log progress to stderr");
}

AppConfig resolve(const Common& c) {
  std::vector<std::string> sets = c.sets;
  if (c.seed) sets.push_back("seed=" + std::to_string(*c.seed));
  return load_config(c.config.empty() ? std::nullopt : std::optional<fs::path>(c.config), sets);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic EPI distortion benchmark for prostate DWI"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  common.jobs = default_jobs();

  auto* phantom = app.add_subcommand("phantom", "Generate one clean phantom slice");
  int subject = 0;
  int slice = 0;
  std::string out_dir;
  add_common(phantom, common);
  phantom->add_option("--subject", subject, "Subject index")->check(CLI::NonNegativeNumber);
  phantom->add_option("--slice", slice, "Slice index")->check(CLI::NonNegativeNumber);
  phantom->add_option("--out", out_dir, "Output directory")->required();

  auto* simulate = app.add_subcommand("simulate", "Distort a phantom with a field map");
  std::string in_path;
  std::string field_path;
  std::string pe = "AP";
  bool literal = false;
  bool no_reverse = false;
  add_common(simulate, common);
  simulate->add_option("--in", in_path, "Phantom directory (from `phantom`)")->required();
  simulate->add_option("--field", field_path, "Field map stem in Hz (default: synthesized for --subject/--slice)");
  simulate->add_option("--subject", subject, "Subject index for the synthesized field");
  simulate->add_option("--slice", slice, "Slice index for the synthesized field");
  simulate->add_option("--pe", pe, "Phase-encoding direction: LR, RL, AP or PA");
  simulate->add_flag("--eq1-literal", literal, "Divide by echo spacing instead of multiplying");
  simulate->add_flag("--no-reverse", no_reverse, "Skip the reverse-PE acquisition");
  simulate->add_option("--out", out_dir, "Output sample directory")->required();

  auto* make = app.add_subcommand("make-dataset", "Generate the full paired dataset");
  add_common(make, common);
  make->add_option("--out", out_dir, "Output dataset directory")->required();

  auto* correct = app.add_subcommand("correct", "Correct one simulated sample");
  std::string method;
  add_common(correct, common);
  correct->add_option("--method", method, "baseline, fugue-ideal, topup-ideal or topup-default")->required();
  correct->add_option("--in", in_path, "Sample directory")->required();
  correct->add_option("--out", out_dir, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Run methods over a dataset and score them");
  std::string manifest;
  std::string methods = "baseline,fugue-ideal,topup-ideal,topup-default";
  std::string neural_dir;
  std::string splits = "test";
  bool reference_free = false;
  std::optional<double> fixed_peak;
  add_common(evaluate, common);
  evaluate->add_option("--manifest", manifest, "Dataset manifest.json")->required();
  evaluate->add_option("--methods", methods, "Comma-separated method names");
  evaluate->add_option("--neural-dir", neural_dir, "Predictions as <dir>/<sample_id>/{b50,b1400,adc}");
  evaluate->add_option("--splits", splits, "Comma-separated splits to evaluate");
  evaluate->add_flag("--reference-free", reference_free, "Write corrected images only");
  evaluate->add_option("--fixed-peak", fixed_peak, "Use a fixed PSNR peak instead of the reference maximum");
  evaluate->add_option("--out", out_dir, "Output directory")->required();

  auto* png = app.add_subcommand("export-png", "Write an image as an 8-bit PNG");
  std::string png_out;
  add_common(png, common);
  png->add_option("--in", in_path, "Image stem")->required();
  png->add_option("--out", png_out, "PNG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  const LogFn log = [&](const std::string& msg) {
    if (common.verbose) err << msg << '\n';
  };

  try {
    if (*phantom) {
      const AppConfig cfg = resolve(common);
      const PhantomSpec spec = subject_phantom(cfg.bench, subject, slice);
      const PhantomImages images = generate_phantom(spec);
      for (const auto& w : images.warnings) err << "warning: " << w << '\n';
      write_phantom(images, out_dir);
      log("wrote phantom to " + out_dir);
    } else if (*simulate) {
      const AppConfig cfg = resolve(common);
      const CleanInputs clean = read_phantom(in_path);
      Image2D field = field_path.empty()
                          ? subject_field(cfg.bench, subject_phantom(cfg.bench, subject, slice), subject, slice)
                          : read_image(field_path);
      field.set_kind(ImageKind::field_hz);
      SimulateOptions sim;
      sim.dwi = cfg.bench.dwi;
      sim.convention = literal ? VdmConvention::divide_esp : cfg.bench.convention;
      sim.with_reverse = !no_reverse;
      const EpiParams params = with_direction(cfg.bench.epi, parse_pe_direction(pe));
      const SimulatedSample sample = simulate_pair(clean, field, params, sim);
      fs::create_directories(out_dir);
      write_sample(sample, out_dir);
      log("dropped fraction " + std::to_string(sample.dropped_fraction));
    } else if (*make) {
      const AppConfig cfg = resolve(common);
      const DatasetManifest m = make_dataset(cfg.bench, out_dir, RunOptions{common.jobs, log});
      out << "wrote " << m.samples.size() << " samples (" << m.skipped.size() << " skipped) to " << out_dir << '\n';
    } else if (*correct) {
      validate_methods({method});
      if (method == "neural") {
        throw ValidationError("method neural is scored by `evaluate --neural-dir`, not produced by `correct`");
      }
      const AppConfig cfg = resolve(common);
      const SimulatedSample sample = read_sample(in_path);
      const RestoredChannels r = apply_method(method, sample, cfg.restore, cfg.bench.dwi);
      fs::create_directories(out_dir);
      write_image(r.images.b50, fs::path(out_dir) / "b50");
      write_image(r.images.b1400, fs::path(out_dir) / "b1400");
      write_image(r.images.adc, fs::path(out_dir) / "adc");
      if (r.confidence_mask) write_image(*r.confidence_mask, fs::path(out_dir) / "confidence");
      if (r.estimated_vdm) write_image(*r.estimated_vdm, fs::path(out_dir) / "vdm_est");
    } else if (*evaluate) {
      const auto method_list = split_list(methods);
      validate_methods(method_list);
      const AppConfig cfg = resolve(common);
      BenchmarkOptions opts;
      opts.restore = cfg.restore;
      if (!neural_dir.empty()) opts.neural_dir = neural_dir;
      opts.splits = split_list(splits);
      opts.reference_free = reference_free;
      opts.fixed_peak = fixed_peak;
      opts.jobs = common.jobs;
      opts.log = log;
      const EvalReport report = run_benchmark(manifest, method_list, out_dir, opts);
      out << "scored " << report.entries.size() << " entries, " << report.failures.size() << " failures\n";
      if (!report.failures.empty()) {
        for (const auto& f : report.failures) err << "failed " << f.sample_id << " [" << f.method << "]: " << f.error << '\n';
        return 2;
      }
    } else if (*png) {
      export_png(read_image(in_path), png_out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace epid

#include "epid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "epid/error.hpp"
#include "epid/imgio.hpp"
#include "epid/parallel.hpp"
#include "epid/random.hpp"
#include "json.hpp"

namespace epid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitSalt = 0x5F117;
constexpr std::uint64_t kSubjectSalt = 0x5B1EC7;
constexpr std::uint64_t kImplantSalt = 0x1A9A47;

std::uint64_t slice_seed(std::uint64_t seed, int subject, int slice) {
  return derive_seed(seed, static_cast<std::uint64_t>(subject) * 1000u + static_cast<std::uint64_t>(slice));
}

void check_range(const std::array<double, 2>& r, const char* name) {
  if (!(r[0] <= r[1])) throw ConfigError(std::string("config: ") + name + " must satisfy lo <= hi");
}

void log_line(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

}  // namespace

void validate_benchmark_config(const BenchmarkConfig& cfg) {
  if (cfg.phantom_count < 1) throw ConfigError("config: phantom_count must be >= 1");
  if (cfg.slices_per_phantom < 1) throw ConfigError("config: slices_per_phantom must be >= 1");
  if (cfg.grid < 32) throw ConfigError("config: grid must be >= 32");
  if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("config: noise_sigma must be >= 0");
  if (cfg.max_lesions < 0) throw ConfigError("config: max_lesions must be >= 0");
  if (cfg.directions.empty()) throw ConfigError("config: directions must not be empty");
  std::set<PeDirection> seen(cfg.directions.begin(), cfg.directions.end());
  if (seen.size() != cfg.directions.size()) throw ConfigError("config: directions contain duplicates");
  double total = 0.0;
  for (double f : cfg.split) {
    if (!(f >= 0.0)) throw ConfigError("config: split fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("config: split fractions must sum to 1");
  const auto& f = cfg.field;
  check_range(f.implant_edge_hz, "field.implant_edge_hz");
  check_range(f.implant_offset_px, "field.implant_offset_px");
  check_range(f.gas_hz, "field.gas_hz");
  check_range(f.hi_scale_range, "field.hi_scale_range");
  if (!(f.bilateral_probability >= 0.0 && f.bilateral_probability <= 1.0)) {
    throw ConfigError("config: field.bilateral_probability must lie in [0, 1]");
  }
  if (f.harmonic_order < 0 || f.low_keep_order < 0 || f.low_keep_order > f.harmonic_order) {
    throw ConfigError("config: field.low_keep_order must lie in [0, field.harmonic_order]");
  }
  if (!(f.implant_offset_px[0] >= kDipoleMinRadiusPx)) {
    throw ConfigError("config: field.implant_offset_px must be >= 2");
  }
  try {
    validate_epi_params(with_direction(cfg.epi, PeDirection::LR));
    validate_dwi_params(cfg.dwi);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::vector<std::string> assign_splits(int subjects, const std::array<double, 3>& fractions, std::uint64_t seed) {
  std::vector<int> order(subjects);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = subjects - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  const int n_train = static_cast<int>(std::floor(fractions[0] * subjects + 0.5));
  const int n_val = std::min(subjects - n_train, static_cast<int>(std::floor(fractions[1] * subjects + 0.5)));
  std::vector<std::string> split(subjects, "test");
  for (int i = 0; i < subjects; ++i) {
    if (i < n_train) {
      split[order[i]] = "train";
    } else if (i < n_train + n_val) {
      split[order[i]] = "val";
    }
  }
  return split;
}

PhantomSpec subject_phantom(const BenchmarkConfig& cfg, int subject, int slice) {
  const double g = cfg.grid;
  const double center = 0.5 * (g - 1.0);
  Rng rs(derive_seed(cfg.seed, kSubjectSalt + static_cast<std::uint64_t>(subject)));

  PhantomSpec p;
  p.width = cfg.grid;
  p.height = cfg.grid;
  p.spacing = cfg.spacing;
  p.body = {center + rs.uniform(-2, 2), center + rs.uniform(-2, 2), 0.36 * g * rs.uniform(0.95, 1.05),
            0.44 * g * rs.uniform(0.95, 1.05)};
  p.body_tissue = {0.30 * rs.uniform(0.9, 1.1), rs.uniform(1.3e-3, 1.5e-3), 0.35 * rs.uniform(0.9, 1.1)};
  p.gland = {center - 0.06 * g + rs.uniform(-3, 3), center + rs.uniform(-3, 3), rs.uniform(0.12, 0.16) * g,
             rs.uniform(0.16, 0.20) * g};
  p.peripheral_zone = {0.75 * rs.uniform(0.9, 1.1), rs.uniform(1.6e-3, 2.0e-3), 0.9 * rs.uniform(0.9, 1.1)};
  p.transition_zone = {0.60 * rs.uniform(0.9, 1.1), rs.uniform(1.3e-3, 1.5e-3), 0.6 * rs.uniform(0.9, 1.1)};

  struct LesionDraw {
    double radial, angle, radius, mult, adc;
    int z_center;
  };
  const int lesion_count = cfg.max_lesions > 0 ? rs.uniform_int(0, cfg.max_lesions) : 0;
  std::vector<LesionDraw> draws;
  for (int i = 0; i < lesion_count; ++i) {
    draws.push_back({rs.uniform(0.0, 0.5), rs.uniform(0.0, 6.283185307179586), rs.uniform(0.10, 0.18),
                     rs.uniform(1.2, 1.6), rs.uniform(0.6e-3, 1.0e-3), rs.uniform_int(0, cfg.slices_per_phantom - 1)});
  }
  const double rect_row = rs.uniform(0.05, 0.08) * g;
  const double rect_col = rs.uniform(0.07, 0.10) * g;
  const double rect_gap = rs.uniform(0.0, 2.0);
  const double rect_shift = rs.uniform(-2.0, 2.0);

  // Apex and base slices have a smaller gland.
  const double mid = 0.5 * (cfg.slices_per_phantom - 1);
  const double t = cfg.slices_per_phantom > 1 ? (slice - mid) / std::max(mid, 1.0) : 0.0;
  const double shrink = 1.0 - 0.2 * t * t;
  p.gland.semi_row *= shrink;
  p.gland.semi_col *= shrink;

  Rng rz(slice_seed(cfg.seed, subject, slice));
  for (const auto& d : draws) {
    if (std::abs(slice - d.z_center) > 1) continue;
    Lesion l;
    l.row = p.gland.row + d.radial * p.gland.semi_row * std::sin(d.angle);
    l.col = p.gland.col + d.radial * p.gland.semi_col * std::cos(d.angle);
    l.radius = d.radius * p.gland.semi_col;
    l.intensity_mult = d.mult;
    l.adc = d.adc;
    p.lesions.push_back(l);
  }
  const double distension = rz.uniform(0.85, 1.2);
  p.rectum = {0.0, p.gland.col + rect_shift, rect_row * distension, rect_col * distension};
  p.rectum.row = p.gland.row + p.gland.semi_row + p.rectum.semi_row + rect_gap;
  p.noise_sigma = cfg.noise_sigma;
  p.seed = rz.uniform_int(0, 1 << 30);
  return p;
}

DipoleSpec subject_dipoles(const BenchmarkConfig& cfg, const PhantomSpec& phantom, int subject, int slice) {
  const auto& fc = cfg.field;
  const double g = cfg.grid;
  Rng rs(derive_seed(cfg.seed, kImplantSalt + static_cast<std::uint64_t>(subject)));
  const bool bilateral = rs.uniform01() < fc.bilateral_probability;
  const bool left_first = rs.uniform01() < 0.5;

  DipoleSpec spec;
  for (int side = 0; side < (bilateral ? 2 : 1); ++side) {
    const bool left = (side == 0) == left_first;
    const double offset = rs.uniform(fc.implant_offset_px[0], fc.implant_offset_px[1]);
    const double edge_hz = rs.uniform(fc.implant_edge_hz[0], fc.implant_edge_hz[1]);
    const double angle = rs.uniform(-0.3, 0.3);
    Dipole d;
    d.row = 0.5 * (g - 1.0) + rs.uniform(-0.15, 0.15) * g;
    d.col = left ? -offset : (g - 1.0) + offset;
    d.moment = edge_hz * offset * offset * offset;
    d.orientation = {std::cos(angle), std::sin(angle)};
    spec.dipoles.push_back(d);
  }
  const double gas_hz = rs.uniform(fc.gas_hz[0], fc.gas_hz[1]);
  const double gas_angle = rs.uniform(-0.3, 0.3);
  spec.background_gradient = {rs.uniform(-1.0, 1.0) * fc.background_gradient_hz_per_px,
                              rs.uniform(-1.0, 1.0) * fc.background_gradient_hz_per_px};

  Rng rz(derive_seed(slice_seed(cfg.seed, subject, slice), kImplantSalt));
  const double slice_scale = rz.uniform(0.85, 1.15);
  for (auto& d : spec.dipoles) d.moment *= slice_scale;

  const double gas_radius = 0.5 * (phantom.rectum.semi_row + phantom.rectum.semi_col);
  Dipole gas;
  gas.row = phantom.rectum.row;
  gas.col = phantom.rectum.col;
  gas.moment = gas_hz * rz.uniform(0.8, 1.25) * gas_radius * gas_radius * gas_radius;
  gas.orientation = {std::cos(gas_angle), std::sin(gas_angle)};
  gas.core_radius = gas_radius;
  spec.dipoles.push_back(gas);
  return spec;
}

Image2D subject_field(const BenchmarkConfig& cfg, const PhantomSpec& phantom, int subject, int slice) {
  const Image2D geometry(cfg.grid, cfg.grid, ImageKind::field_hz, cfg.spacing);
  const Image2D base = dipole_phantom_field(subject_dipoles(cfg, phantom, subject, slice), geometry);
  const HarmonicCoeffs coeffs = fit_harmonic(base, cfg.field.harmonic_order);
  const Image2D residual = harmonic_residual(base, coeffs);
  PerturbOptions perturb;
  perturb.low_keep_order = cfg.field.low_keep_order;
  perturb.hi_scale_range = cfg.field.hi_scale_range;
  perturb.cap_hz = cfg.field.cap_hz;
  perturb.seed = derive_seed(slice_seed(cfg.seed, subject, slice), 0xF1E1D);
  return synthesize_field(coeffs, residual, perturb);
}

namespace {

json epi_json(const EpiParams& p) {
  return json{{"s_pe", p.s_pe},   {"n_pe", p.n_pe},   {"pf", p.pf},
              {"r", p.r},         {"esp_s", p.esp_s}, {"pe_axis", std::string(to_string(p.pe_axis))}};
}

EpiParams epi_from(const json& j) {
  EpiParams p;
  p.s_pe = j.at("s_pe").get<int>();
  p.n_pe = j.at("n_pe").get<int>();
  p.pf = j.at("pf").get<double>();
  p.r = j.at("r").get<double>();
  p.esp_s = j.at("esp_s").get<double>();
  const auto axis = parse_pe_axis(j.at("pe_axis").get<std::string>());
  if (!axis) throw FormatError("params.json: unknown pe_axis");
  p.pe_axis = *axis;
  return p;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> write_sample(const SimulatedSample& s, const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  auto put = [&](const Image2D& img, const std::string& channel) {
    write_image(img, dir / channel);
    files.emplace_back(channel, channel);
  };
  for (const char* sub : {"clean", "distorted", "reverse", "truth"}) fs::create_directories(dir / sub);
  put(s.clean.b50, "clean/b50");
  put(s.clean.b1400, "clean/b1400");
  put(s.clean.adc, "clean/adc");
  put(s.clean_t2w, "clean/t2w");
  if (s.mask) put(*s.mask, "clean/mask");
  put(s.distorted.b50, "distorted/b50");
  put(s.distorted.b1400, "distorted/b1400");
  put(s.distorted.adc, "distorted/adc");
  if (s.reverse) {
    put(s.reverse->b50, "reverse/b50");
    put(s.reverse->b1400, "reverse/b1400");
    put(s.reverse->adc, "reverse/adc");
  } else {
    fs::remove(dir / "reverse");
  }
  put(s.field_hz, "truth/field_hz");
  put(s.vdm_px, "truth/vdm_px");

  json params{{"epi_params", epi_json(s.params)},
              {"pe_direction", std::string(to_string(direction_of(s.params)))},
              {"dropped_fraction", s.dropped_fraction}};
  std::ofstream out(dir / "params.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "params.json").string());
  out << params.dump(2) << '\n';
  return files;
}

SimulatedSample read_sample(const fs::path& dir) {
  SimulatedSample s;
  s.clean.b50 = read_image(dir / "clean/b50");
  s.clean.b1400 = read_image(dir / "clean/b1400");
  s.clean.adc = read_image(dir / "clean/adc");
  s.clean_t2w = read_image(dir / "clean/t2w");
  if (image_exists(dir / "clean/mask")) s.mask = read_image(dir / "clean/mask");
  s.distorted.b50 = read_image(dir / "distorted/b50");
  s.distorted.b1400 = read_image(dir / "distorted/b1400");
  s.distorted.adc = read_image(dir / "distorted/adc");
  if (image_exists(dir / "reverse/b50")) {
    s.reverse = ClinicalChannels{read_image(dir / "reverse/b50"), read_image(dir / "reverse/b1400"),
                                 read_image(dir / "reverse/adc")};
  }
  s.field_hz = read_image(dir / "truth/field_hz");
  s.vdm_px = read_image(dir / "truth/vdm_px");

  std::ifstream in(dir / "params.json");
  if (!in) throw IoError("missing " + (dir / "params.json").string());
  try {
    const json j = json::parse(in);
    s.params = epi_from(j.at("epi_params"));
    s.dropped_fraction = j.at("dropped_fraction").get<double>();
  } catch (const json::exception& e) {
    throw FormatError("invalid " + (dir / "params.json").string() + ": " + e.what());
  }
  return s;
}

void write_phantom(const PhantomImages& p, const fs::path& dir) {
  fs::create_directories(dir);
  write_image(p.dwi_b50, dir / "b50");
  write_image(p.adc, dir / "adc");
  write_image(p.t2w, dir / "t2w");
  write_image(p.mask, dir / "mask");
}

CleanInputs read_phantom(const fs::path& dir) {
  CleanInputs c{read_image(dir / "b50"), read_image(dir / "adc"), read_image(dir / "t2w"), std::nullopt};
  if (image_exists(dir / "mask")) c.mask = read_image(dir / "mask");
  return c;
}

DatasetManifest make_dataset(const BenchmarkConfig& cfg, const fs::path& out_dir, const RunOptions& run) {
  validate_benchmark_config(cfg);
  fs::create_directories(out_dir / "samples");

  DatasetManifest manifest;
  manifest.rng_seed = cfg.seed;
  for (PeDirection dir : cfg.directions) manifest.epi_params_used.push_back(with_direction(cfg.epi, dir));
  const auto splits = assign_splits(cfg.phantom_count, cfg.split, derive_seed(cfg.seed, kSplitSalt));

  struct TaskOutput {
    std::vector<PairedSample> samples;
    std::vector<SkippedSample> skipped;
  };
  const int slices = cfg.slices_per_phantom;
  std::vector<TaskOutput> outputs(static_cast<std::size_t>(cfg.phantom_count) * slices);

  parallel_for(outputs.size(), run.jobs, [&](std::size_t task) {
    const int subject = static_cast<int>(task) / slices;
    const int slice = static_cast<int>(task) % slices;
    const PhantomSpec spec = subject_phantom(cfg, subject, slice);
    const PhantomImages phantom = generate_phantom(spec);
    const Image2D field = subject_field(cfg, spec, subject, slice);
    const CleanInputs clean{phantom.dwi_b50, phantom.adc, phantom.t2w, phantom.mask};
    SimulateOptions sim;
    sim.dwi = cfg.dwi;
    sim.convention = cfg.convention;

    auto& out = outputs[task];
    for (std::size_t e = 0; e < cfg.directions.size(); ++e) {
      std::ostringstream id;
      id << 's' << std::setw(3) << std::setfill('0') << subject << "_z" << std::setw(2) << slice << '_'
         << to_string(cfg.directions[e]);
      try {
        const SimulatedSample sample = simulate_pair(clean, field, manifest.epi_params_used[e], sim);
        const std::string rel = "samples/" + id.str();
        PairedSample rec;
        rec.id = id.str();
        rec.subject = subject;
        rec.slice = slice;
        rec.split = splits[subject];
        rec.pe_direction = std::string(to_string(cfg.directions[e]));
        rec.epi_params_index = static_cast<int>(e);
        rec.seed = slice_seed(cfg.seed, subject, slice);
        rec.dir = rel;
        rec.dropped_fraction = sample.dropped_fraction;
        for (const auto& [channel, stem] : write_sample(sample, out_dir / rel)) rec.files[channel] = rel + "/" + stem;
        out.samples.push_back(std::move(rec));
      } catch (const DisplacementOverflow& e) {
        out.skipped.push_back({id.str(), e.what()});
      }
    }
  });

  for (auto& out : outputs) {
    for (auto& s : out.skipped) log_line(run.log, "skipped " + s.id + ": " + s.reason);
    std::move(out.samples.begin(), out.samples.end(), std::back_inserter(manifest.samples));
    std::move(out.skipped.begin(), out.skipped.end(), std::back_inserter(manifest.skipped));
  }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

void validate_methods(const std::vector<std::string>& methods) {
  if (methods.empty()) throw ValidationError("no methods given (valid: baseline, fugue-ideal, topup-ideal, topup-default, neural)");
  const auto& valid = benchmark_methods();
  for (const auto& m : methods) {
    if (std::find(valid.begin(), valid.end(), m) == valid.end()) {
      throw ValidationError("unknown method \"" + m +
                            "\" (valid: baseline, fugue-ideal, topup-ideal, topup-default, neural)");
    }
  }
}

RestoredChannels apply_method(const std::string& method, const SimulatedSample& s, const RestoreOptions& opts,
                              const DwiParams& dwi) {
  RestoredChannels out;
  if (method == "baseline") {
    out.images = s.distorted;
    return out;
  }
  if (method == "fugue-ideal") {
    auto b50 = unwarp_fieldmap(s.distorted.b50, s.vdm_px, opts);
    auto b1400 = unwarp_fieldmap(s.distorted.b1400, s.vdm_px, opts);
    out.images.b50 = std::move(b50.restored);
    out.images.b1400 = std::move(b1400.restored);
    out.confidence_mask = std::move(b50.confidence_mask);
  } else if (method == "topup-ideal" || method == "topup-default") {
    if (!s.reverse) throw ValidationError(method + ": sample has no reverse-PE images");
    Image2D vdm = s.vdm_px;
    if (method == "topup-default") {
      FieldEstimate est = estimate_field_dual_pe(s.distorted.b50, s.reverse->b50, s.params, opts);
      vdm = std::move(est.vdm);
      out.estimated_vdm = vdm;
    }
    out.images.b50 = restore_dual_pe(s.distorted.b50, s.reverse->b50, vdm, opts);
    out.images.b1400 = restore_dual_pe(s.distorted.b1400, s.reverse->b1400, vdm, opts);
  } else {
    throw ValidationError("apply_method: unsupported method \"" + method + "\"");
  }
  out.images.b50.set_kind(ImageKind::dwi_b50);
  out.images.b1400.set_kind(ImageKind::dwi_b1400);
  out.images.adc = compute_adc(out.images.b50, out.images.b1400, dwi);
  out.images.adc.set_pe_axis(s.vdm_px.pe_axis());
  return out;
}

std::optional<Image2D> fold_line_mask(const Image2D& vdm, const Image2D& mask, double eps) {
  require_same_geometry(vdm, mask, "fold_line_mask");
  const LineLayout layout(vdm, vdm.pe_axis());
  const auto disp = gather_lines(vdm, layout);
  const auto m = gather_lines(mask, layout);
  const auto n = static_cast<std::size_t>(layout.length);
  std::vector<double> region(disp.size(), 0.0);
  bool any = false;
  for (int l = 0; l < layout.lines; ++l) {
    const std::size_t off = static_cast<std::size_t>(l) * n;
    const auto jac = line::local_jacobian({disp.data() + off, n});
    bool folded = false;
    for (std::size_t k = 0; k < n && !folded; ++k) folded = m[off + k] != 0.0 && jac[k] <= eps;
    if (!folded) continue;
    any = true;
    for (std::size_t k = 0; k < n; ++k) region[off + k] = m[off + k] != 0.0 ? 1.0 : 0.0;
  }
  if (!any) return std::nullopt;
  Image2D out = mask.zeros_like(ImageKind::mask);
  scatter_lines(region, layout, out);
  return out;
}

EvalReport run_benchmark(const fs::path& manifest_path, const std::vector<std::string>& methods,
                         const fs::path& out_dir, const BenchmarkOptions& opts) {
  validate_methods(methods);
  validate_restore_options(opts.restore);
  const bool wants_neural = std::find(methods.begin(), methods.end(), "neural") != methods.end();
  if (wants_neural && (!opts.neural_dir || !fs::is_directory(*opts.neural_dir))) {
    throw ValidationError("method neural: missing model predictions directory (--neural-dir)");
  }
  const DatasetManifest manifest = read_manifest(manifest_path);
  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  fs::create_directories(out_dir);

  std::vector<const PairedSample*> selected;
  for (const auto& s : manifest.samples) {
    if (std::find(opts.splits.begin(), opts.splits.end(), s.split) != opts.splits.end()) selected.push_back(&s);
  }

  struct SampleOutput {
    std::vector<EvalEntry> entries;
    std::vector<EvalFailure> failures;
  };
  std::vector<SampleOutput> outputs(selected.size());

  parallel_for(selected.size(), opts.jobs, [&](std::size_t i) {
    const PairedSample& rec = *selected[i];
    auto& out = outputs[i];
    SimulatedSample sample;
    try {
      sample = read_sample(base / rec.dir);
    } catch (const Error& e) {
      for (const auto& m : methods) out.failures.push_back({rec.id, m, e.what()});
      return;
    }
    const std::optional<Image2D> mask = sample.mask;
    std::optional<Image2D> fold_region;
    if (mask) fold_region = fold_line_mask(sample.vdm_px, *mask, opts.restore.invertibility_eps);

    for (const auto& method : methods) {
      try {
        RestoredChannels restored;
        if (method == "neural") {
          const fs::path pred = *opts.neural_dir / rec.id;
          restored.images = {read_image(pred / "b50"), read_image(pred / "b1400"), read_image(pred / "adc")};
        } else {
          restored = apply_method(method, sample, opts.restore);
        }
        const fs::path dest = out_dir / method / rec.id;
        fs::create_directories(dest);
        write_image(restored.images.b50, dest / "b50");
        write_image(restored.images.b1400, dest / "b1400");
        write_image(restored.images.adc, dest / "adc");
        if (restored.confidence_mask) write_image(*restored.confidence_mask, dest / "confidence");
        if (restored.estimated_vdm) write_image(*restored.estimated_vdm, dest / "vdm_est");
        if (opts.reference_free) continue;

        std::optional<double> rmse;
        if (restored.estimated_vdm) rmse = field_rmse(sample.vdm_px, *restored.estimated_vdm, mask);
        const std::array<std::pair<const char*, std::pair<const Image2D*, const Image2D*>>, 3> contrasts{{
            {"b50", {&sample.clean.b50, &restored.images.b50}},
            {"b1400", {&sample.clean.b1400, &restored.images.b1400}},
            {"adc", {&sample.clean.adc, &restored.images.adc}},
        }};
        for (const auto& [name, imgs] : contrasts) {
          EvalEntry e;
          e.sample_id = rec.id;
          e.subject = rec.subject;
          e.slice = rec.slice;
          e.method = method;
          e.contrast = name;
          e.psnr_db = psnr(*imgs.first, *imgs.second, mask, opts.fixed_peak);
          e.nmse = nmse(*imgs.first, *imgs.second, mask);
          e.field_rmse_px = rmse;
          if (fold_region && std::string_view(name) == "b50") e.nmse_fold_lines = nmse(*imgs.first, *imgs.second, fold_region);
          out.entries.push_back(std::move(e));
        }
      } catch (const Error& e) {
        out.failures.push_back({rec.id, method, e.what()});
      }
    }
  });

  EvalReport report;
  for (auto& out : outputs) {
    for (const auto& f : out.failures) log_line(opts.log, "failed " + f.sample_id + " [" + f.method + "]: " + f.error);
    std::move(out.entries.begin(), out.entries.end(), std::back_inserter(report.entries));
    std::move(out.failures.begin(), out.failures.end(), std::back_inserter(report.failures));
  }
  write_report(report, out_dir);
  return report;
}

}  // namespace epid

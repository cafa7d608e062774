#include "epid/config.hpp"

#include <fstream>

#include "epid/error.hpp"

namespace epid {

using nlohmann::json;

namespace {

std::string_view convention_name(VdmConvention c) {
  return c == VdmConvention::multiply_esp ? "multiply_esp" : "divide_esp";
}

template <typename T>
T get_at(const json& j, const std::string& path) {
  const json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("config: missing key " + path);
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: wrong type for " + path);
  }
}

void merge_at(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError("config: " + (prefix.empty() ? std::string("root") : prefix) + " must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("config: unknown key " + path);
    json& slot = base[key];
    if (slot.is_object()) {
      merge_at(slot, value, path);
    } else {
      const bool both_numbers = slot.is_number() && value.is_number();
      if (!both_numbers && slot.type() != value.type()) throw ConfigError("config: wrong type for " + path);
      slot = value;
    }
  }
}

}  // namespace

json default_config_json() { return config_to_json(AppConfig{}); }

json config_to_json(const AppConfig& cfg) {
  const auto& b = cfg.bench;
  const auto& f = b.field;
  json directions = json::array();
  for (auto d : b.directions) directions.push_back(std::string(to_string(d)));
  return json{
      {"phantom_count", b.phantom_count},
      {"slices_per_phantom", b.slices_per_phantom},
      {"grid", b.grid},
      {"spacing_mm", {b.spacing.row_mm, b.spacing.col_mm}},
      {"noise_sigma", b.noise_sigma},
      {"max_lesions", b.max_lesions},
      {"field",
       {{"bilateral_probability", f.bilateral_probability},
        {"implant_edge_hz", f.implant_edge_hz},
        {"implant_offset_px", f.implant_offset_px},
        {"gas_hz", f.gas_hz},
        {"background_gradient_hz_per_px", f.background_gradient_hz_per_px},
        {"harmonic_order", f.harmonic_order},
        {"low_keep_order", f.low_keep_order},
        {"hi_scale_range", f.hi_scale_range},
        {"cap_hz", f.cap_hz}}},
      {"epi", {{"n_pe", b.epi.n_pe}, {"pf", b.epi.pf}, {"r", b.epi.r}, {"esp_s", b.epi.esp_s}}},
      {"directions", directions},
      {"split", b.split},
      {"dwi",
       {{"b_low", b.dwi.b_low},
        {"b_high", b.dwi.b_high},
        {"adc_floor", b.dwi.adc_floor},
        {"adc_ceiling", b.dwi.adc_ceiling},
        {"signal_floor", b.dwi.signal_floor}}},
      {"vdm_convention", std::string(convention_name(b.convention))},
      {"seed", b.seed},
      {"restore",
       {{"lambda_smooth", cfg.restore.lambda_smooth},
        {"invertibility_eps", cfg.restore.invertibility_eps},
        {"max_iters", cfg.restore.max_iters},
        {"tol", cfg.restore.tol},
        {"pyramid_levels", cfg.restore.pyramid_levels},
        {"field_smoothness", cfg.restore.field_smoothness}}},
  };
}

AppConfig config_from_json(const json& j) {
  AppConfig cfg;
  auto& b = cfg.bench;
  auto& f = b.field;
  b.phantom_count = get_at<int>(j, "phantom_count");
  b.slices_per_phantom = get_at<int>(j, "slices_per_phantom");
  b.grid = get_at<int>(j, "grid");
  const auto spacing = get_at<std::array<float, 2>>(j, "spacing_mm");
  b.spacing = {spacing[0], spacing[1]};
  b.noise_sigma = get_at<double>(j, "noise_sigma");
  b.max_lesions = get_at<int>(j, "max_lesions");
  f.bilateral_probability = get_at<double>(j, "field.bilateral_probability");
  f.implant_edge_hz = get_at<std::array<double, 2>>(j, "field.implant_edge_hz");
  f.implant_offset_px = get_at<std::array<double, 2>>(j, "field.implant_offset_px");
  f.gas_hz = get_at<std::array<double, 2>>(j, "field.gas_hz");
  f.background_gradient_hz_per_px = get_at<double>(j, "field.background_gradient_hz_per_px");
  f.harmonic_order = get_at<int>(j, "field.harmonic_order");
  f.low_keep_order = get_at<int>(j, "field.low_keep_order");
  f.hi_scale_range = get_at<std::array<double, 2>>(j, "field.hi_scale_range");
  f.cap_hz = get_at<double>(j, "field.cap_hz");
  b.epi.n_pe = get_at<int>(j, "epi.n_pe");
  b.epi.pf = get_at<double>(j, "epi.pf");
  b.epi.r = get_at<double>(j, "epi.r");
  b.epi.esp_s = get_at<double>(j, "epi.esp_s");
  b.directions.clear();
  for (const auto& name : get_at<std::vector<std::string>>(j, "directions")) {
    try {
      b.directions.push_back(parse_pe_direction(name));
    } catch (const ValidationError&) {
      throw ConfigError("config: directions: unknown direction \"" + name + "\" (valid: LR, RL, AP, PA)");
    }
  }
  b.split = get_at<std::array<double, 3>>(j, "split");
  b.dwi.b_low = get_at<double>(j, "dwi.b_low");
  b.dwi.b_high = get_at<double>(j, "dwi.b_high");
  b.dwi.adc_floor = get_at<double>(j, "dwi.adc_floor");
  b.dwi.adc_ceiling = get_at<double>(j, "dwi.adc_ceiling");
  b.dwi.signal_floor = get_at<double>(j, "dwi.signal_floor");
  const auto conv = get_at<std::string>(j, "vdm_convention");
  if (conv == "multiply_esp") {
    b.convention = VdmConvention::multiply_esp;
  } else if (conv == "divide_esp") {
    b.convention = VdmConvention::divide_esp;
  } else {
    throw ConfigError("config: vdm_convention must be multiply_esp or divide_esp");
  }
  b.seed = get_at<std::uint64_t>(j, "seed");
  cfg.restore.lambda_smooth = get_at<double>(j, "restore.lambda_smooth");
  cfg.restore.invertibility_eps = get_at<double>(j, "restore.invertibility_eps");
  cfg.restore.max_iters = get_at<int>(j, "restore.max_iters");
  cfg.restore.tol = get_at<double>(j, "restore.tol");
  cfg.restore.pyramid_levels = get_at<int>(j, "restore.pyramid_levels");
  cfg.restore.field_smoothness = get_at<double>(j, "restore.field_smoothness");
  return cfg;
}

void merge_config(json& base, const json& overlay) { merge_at(base, overlay, ""); }

void apply_override(json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got \"" + std::string(assignment) + "\"");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  // Build a nested overlay so merge_config performs the key and type checks.
  json overlay = value;
  std::size_t end = path.size();
  while (true) {
    const auto dot = path.rfind('.', end - 1);
    const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    const std::string key = path.substr(start, end - start);
    if (key.empty()) throw ConfigError("--set: malformed key \"" + path + "\"");
    overlay = json{{key, overlay}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_config(cfg, overlay);
}

AppConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  json j = default_config_json();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot open config " + file->string());
    json loaded = json::parse(in, nullptr, false);
    if (loaded.is_discarded()) throw ConfigError("config: " + file->string() + " is not valid JSON");
    merge_config(j, loaded);
  }
  for (const auto& o : overrides) apply_override(j, o);
  AppConfig cfg = config_from_json(j);
  validate_benchmark_config(cfg.bench);
  try {
    validate_restore_options(cfg.restore);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace epid

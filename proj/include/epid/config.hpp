#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epid/correct.hpp"
#include "epid/pipeline.hpp"
#include "json.hpp"

namespace epid {

struct AppConfig {
  BenchmarkConfig bench;
  RestoreOptions restore;
};

// Every key the config understands, populated with the defaults.
nlohmann::json default_config_json();

// Overlays `overlay` onto `base`. Unknown keys raise ConfigError naming the key path.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay);

// Applies "a.b.c=value". The value is parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& cfg, std::string_view assignment);

AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& cfg);

// Defaults, then the file (if any), then overrides; the result is validated.
AppConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

}  // namespace epid

#include "epid/manifest.hpp"

#include <fstream>
#include <set>

#include "epid/error.hpp"
#include "epid/imgio.hpp"
#include "json.hpp"

namespace epid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const EpiParams& p) {
  return json{{"s_pe", p.s_pe},   {"n_pe", p.n_pe},   {"pf", p.pf},
              {"r", p.r},         {"esp_s", p.esp_s}, {"pe_axis", std::string(to_string(p.pe_axis))}};
}

EpiParams epi_from_json(const json& j) {
  EpiParams p;
  p.s_pe = j.at("s_pe").get<int>();
  p.n_pe = j.at("n_pe").get<int>();
  p.pf = j.at("pf").get<double>();
  p.r = j.at("r").get<double>();
  p.esp_s = j.at("esp_s").get<double>();
  const auto axis = parse_pe_axis(j.at("pe_axis").get<std::string>());
  if (!axis) throw FormatError("manifest: unknown pe_axis in epi_params_used");
  p.pe_axis = *axis;
  return p;
}

json to_json(const PairedSample& s) {
  return json{{"id", s.id},
              {"subject", s.subject},
              {"slice", s.slice},
              {"split", s.split},
              {"pe_direction", s.pe_direction},
              {"epi_params_index", s.epi_params_index},
              {"seed", s.seed},
              {"dir", s.dir},
              {"dropped_fraction", s.dropped_fraction},
              {"files", s.files}};
}

PairedSample sample_from_json(const json& j) {
  PairedSample s;
  s.id = j.at("id").get<std::string>();
  s.subject = j.at("subject").get<int>();
  s.slice = j.at("slice").get<int>();
  s.split = j.at("split").get<std::string>();
  s.pe_direction = j.at("pe_direction").get<std::string>();
  s.epi_params_index = j.at("epi_params_index").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.dir = j.at("dir").get<std::string>();
  s.dropped_fraction = j.at("dropped_fraction").get<double>();
  s.files = j.at("files").get<std::map<std::string, std::string>>();
  return s;
}

}  // namespace

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  std::set<std::string> ids;
  for (const auto& s : m.samples) {
    if (!ids.insert(s.id).second) {
      throw ValidationError("manifest: duplicate sample id \"" + s.id + "\"");
    }
    if (s.epi_params_index < 0 ||
        static_cast<std::size_t>(s.epi_params_index) >= m.epi_params_used.size()) {
      throw ValidationError("manifest: sample \"" + s.id + "\" has out-of-range epi_params_index");
    }
  }

  json j;
  j["version"] = m.version;
  j["rng_seed"] = m.rng_seed;
  j["created_by"] = m.created_by;
  j["epi_params_used"] = json::array();
  for (const auto& p : m.epi_params_used) j["epi_params_used"].push_back(to_json(p));
  j["samples"] = json::array();
  for (const auto& s : m.samples) j["samples"].push_back(to_json(s));
  j["skipped"] = json::array();
  for (const auto& s : m.skipped) j["skipped"].push_back(json{{"id", s.id}, {"reason", s.reason}});

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("manifest write failed: " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }

  DatasetManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    if (m.version != kManifestVersion) {
      throw FormatError("manifest version mismatch: expected " + std::string(kManifestVersion) +
                        ", found " + m.version);
    }
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.created_by = j.at("created_by").get<std::string>();
    for (const auto& p : j.at("epi_params_used")) m.epi_params_used.push_back(epi_from_json(p));
    for (const auto& s : j.at("samples")) m.samples.push_back(sample_from_json(s));
    if (j.contains("skipped")) {
      for (const auto& s : j.at("skipped")) {
        m.skipped.push_back({s.at("id").get<std::string>(), s.at("reason").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("invalid manifest " + path.string() + ": " + e.what());
  }

  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::set<std::string> ids;
  for (const auto& s : m.samples) {
    if (!ids.insert(s.id).second) throw FormatError("manifest: duplicate sample id \"" + s.id + "\"");
    for (const auto& [channel, stem] : s.files) {
      if (!image_exists(base / stem)) {
        throw FormatError("manifest: dangling path for sample \"" + s.id + "\" channel " + channel +
                          ": " + (base / stem).string());
      }
    }
  }
  return m;
}

}  // namespace epid

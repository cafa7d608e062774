#include "epid/imgio.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "epid/error.hpp"

namespace epid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void require_parent(const fs::path& stem) {
  const fs::path parent = stem.has_parent_path() ? stem.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw IoError("parent directory does not exist: " + parent.string());
  }
}

}  // namespace

fs::path sidecar_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".json";
  return p;
}

fs::path payload_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".bin";
  return p;
}

bool image_exists(const fs::path& stem) {
  return fs::is_regular_file(sidecar_path(stem)) && fs::is_regular_file(payload_path(stem));
}

void write_image(const Image2D& img, const fs::path& stem) {
  validate_image(img);
  require_parent(stem);

  json header;
  header["width"] = img.width();
  header["height"] = img.height();
  header["dtype"] = "f32";
  header["order"] = "row-major";
  header["spacing_mm"] = {img.spacing().row_mm, img.spacing().col_mm};
  header["kind"] = std::string(to_string(img.kind()));
  header["pe_axis"] = std::string(to_string(img.pe_axis()));

  {
    std::ofstream out(sidecar_path(stem), std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + sidecar_path(stem).string());
    out << header.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + sidecar_path(stem).string());
  }

  std::vector<std::uint32_t> words(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    words[i] = to_little_endian(std::bit_cast<std::uint32_t>(px[i]));
  }
  std::ofstream out(payload_path(stem), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + payload_path(stem).string());
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!out) throw IoError("write failed: " + payload_path(stem).string());
}

Image2D read_image(const fs::path& stem) {
  const fs::path hdr_path = sidecar_path(stem);
  const fs::path bin_path = payload_path(stem);
  if (!fs::is_regular_file(hdr_path)) throw IoError("missing image header: " + hdr_path.string());
  if (!fs::is_regular_file(bin_path)) throw IoError("missing image payload: " + bin_path.string());

  json header;
  try {
    std::ifstream in(hdr_path);
    header = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed image header " + hdr_path.string() + ": " + e.what());
  }

  int width = 0;
  int height = 0;
  Spacing spacing;
  std::string kind_text;
  std::string axis_text;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    if (header.at("dtype").get<std::string>() != "f32") {
      throw FormatError("unsupported dtype in " + hdr_path.string());
    }
    if (header.at("order").get<std::string>() != "row-major") {
      throw FormatError("unsupported order in " + hdr_path.string());
    }
    const auto& sp = header.at("spacing_mm");
    spacing = {sp.at(0).get<float>(), sp.at(1).get<float>()};
    kind_text = header.at("kind").get<std::string>();
    axis_text = header.at("pe_axis").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("invalid image header " + hdr_path.string() + ": " + e.what());
  }

  const auto kind = parse_image_kind(kind_text);
  if (!kind) throw FormatError("unknown image kind \"" + kind_text + "\" in " + hdr_path.string());
  const auto axis = parse_pe_axis(axis_text);
  if (!axis) throw FormatError("unknown pe_axis \"" + axis_text + "\" in " + hdr_path.string());
  if (width <= 0 || height <= 0) {
    throw FormatError("non-positive dimensions in " + hdr_path.string());
  }

  const std::uintmax_t expected =
      static_cast<std::uintmax_t>(width) * static_cast<std::uintmax_t>(height) * 4u;
  const std::uintmax_t actual = fs::file_size(bin_path);
  if (actual != expected) {
    throw FormatError("payload length mismatch in " + bin_path.string() + ": expected " +
                      std::to_string(expected) + " bytes, found " + std::to_string(actual));
  }

  Image2D img(width, height, *kind, spacing, *axis);
  std::vector<std::uint32_t> words(img.size());
  std::ifstream in(bin_path, std::ios::binary);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected));
  if (!in) throw IoError("read failed: " + bin_path.string());
  auto px = img.pixels();
  for (std::size_t i = 0; i < words.size(); ++i) {
    px[i] = std::bit_cast<float>(to_little_endian(words[i]));
  }
  try {
    validate_image(img);
  } catch (const InvariantError& e) {
    throw FormatError(bin_path.string() + ": " + e.what());
  }
  return img;
}

namespace {

void put_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::ofstream& out, const char* type, const std::vector<unsigned char>& data) {
  std::vector<unsigned char> buf;
  put_be32(buf, static_cast<std::uint32_t>(data.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, buf.data() + 4, static_cast<uInt>(buf.size() - 4));
  put_be32(buf, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

void export_png(const Image2D& img, const fs::path& png_path) {
  validate_image(img);
  require_parent(png_path);
  const auto px = img.pixels();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const float lo = *lo_it;
  const float range = *hi_it - lo;

  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(img.height()) * (img.width() + 1));
  for (int r = 0; r < img.height(); ++r) {
    raw.push_back(0);  // filter: none
    for (int c = 0; c < img.width(); ++c) {
      const float t = range > 0.0f ? (img.at(r, c) - lo) / range : 0.0f;
      raw.push_back(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0f, 1.0f) * 255.0f)));
    }
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw IoError("png compression failed for " + png_path.string());
  }
  packed.resize(packed_len);

  std::ofstream out(png_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + png_path.string());
  const unsigned char signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.write(reinterpret_cast<const char*>(signature), 8);
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width()));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  if (!out) throw IoError("write failed: " + png_path.string());
}

}  // namespace epid

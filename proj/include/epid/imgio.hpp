#pragma once

#include <cstdint>
#include <filesystem>

#include "epid/image.hpp"

namespace epid {

// On-disk raster: `<stem>.json` header plus `<stem>.bin` little-endian float32
// payload in row-major order. Header fields: width, height, dtype ("f32"),
// order ("row-major"), spacing_mm ([row, col]), kind, pe_axis.
void write_image(const Image2D& img, const std::filesystem::path& stem);
Image2D read_image(const std::filesystem::path& stem);

// True when both the header and the payload of `stem` exist.
bool image_exists(const std::filesystem::path& stem);

std::filesystem::path sidecar_path(const std::filesystem::path& stem);
std::filesystem::path payload_path(const std::filesystem::path& stem);

// Lossy 8-bit grayscale PNG, min-max windowed. For viewing only; never read back.
void export_png(const Image2D& img, const std::filesystem::path& png_path);

}  // namespace epid

#include "epid/image.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "epid/error.hpp"

namespace epid {

namespace {

constexpr std::array<std::pair<ImageKind, std::string_view>, 7> kKindNames{{
    {ImageKind::dwi_b50, "dwi_b50"},
    {ImageKind::dwi_b1400, "dwi_b1400"},
    {ImageKind::adc, "adc"},
    {ImageKind::t2w, "t2w"},
    {ImageKind::field_hz, "field_hz"},
    {ImageKind::vdm_px, "vdm_px"},
    {ImageKind::mask, "mask"},
}};

}  // namespace

std::string_view to_string(ImageKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view to_string(PeAxis axis) { return axis == PeAxis::row ? "row" : "col"; }

std::optional<ImageKind> parse_image_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::optional<PeAxis> parse_pe_axis(std::string_view text) {
  if (text == "row") return PeAxis::row;
  if (text == "col") return PeAxis::col;
  return std::nullopt;
}

Image2D::Image2D(int width, int height, ImageKind kind, Spacing spacing, PeAxis pe_axis)
    : width_(width), height_(height), kind_(kind), spacing_(spacing), pe_axis_(pe_axis) {
  if (width <= 0 || height <= 0) {
    throw InvariantError("image dimensions must be positive, got " + std::to_string(width) +
                         "x" + std::to_string(height));
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f);
}

bool Image2D::same_geometry(const Image2D& other) const {
  return width_ == other.width_ && height_ == other.height_ && spacing_ == other.spacing_;
}

Image2D Image2D::zeros_like(ImageKind kind) const {
  return Image2D(width_, height_, kind, spacing_, pe_axis_);
}

void validate_image(const Image2D& img) {
  if (img.width() <= 0 || img.height() <= 0) {
    throw InvariantError("image dimensions must be positive");
  }
  if (img.size() != static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(img.height())) {
    throw InvariantError("pixel buffer length does not match width*height");
  }
  if (!(img.spacing().row_mm > 0.0f) || !(img.spacing().col_mm > 0.0f) ||
      !std::isfinite(img.spacing().row_mm) || !std::isfinite(img.spacing().col_mm)) {
    throw InvariantError("pixel spacing must be finite and positive");
  }
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float v = px[i];
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite pixel value at index " << i << " (row " << i / img.width() << ", col "
         << i % img.width() << ")";
      throw InvariantError(os.str());
    }
    if (img.kind() == ImageKind::adc && v < 0.0f) {
      throw InvariantError("adc pixel is negative at index " + std::to_string(i));
    }
    if (img.kind() == ImageKind::mask && v != 0.0f && v != 1.0f) {
      throw InvariantError("mask pixel is not 0 or 1 at index " + std::to_string(i));
    }
  }
}

void require_same_geometry(const Image2D& a, const Image2D& b, std::string_view what) {
  if (!a.same_geometry(b)) {
    std::ostringstream os;
    os << "geometry mismatch in " << what << ": " << a.width() << "x" << a.height() << " vs "
       << b.width() << "x" << b.height();
    throw GeometryError(os.str());
  }
}

LineLayout::LineLayout(int width_px, int height_px, PeAxis pe_axis)
    : lines(pe_axis == PeAxis::row ? width_px : height_px),
      length(pe_axis == PeAxis::row ? height_px : width_px),
      width(width_px),
      axis(pe_axis) {}

std::vector<double> gather_lines(const Image2D& img, const LineLayout& layout) {
  std::vector<double> out(static_cast<std::size_t>(layout.lines) * layout.length);
  const auto px = img.pixels();
  for (int l = 0; l < layout.lines; ++l) {
    for (int k = 0; k < layout.length; ++k) {
      out[static_cast<std::size_t>(l) * layout.length + k] = px[layout.index(l, k)];
    }
  }
  return out;
}

void scatter_lines(std::span<const double> data, const LineLayout& layout, Image2D& img) {
  auto px = img.pixels();
  for (int l = 0; l < layout.lines; ++l) {
    for (int k = 0; k < layout.length; ++k) {
      px[layout.index(l, k)] = static_cast<float>(data[static_cast<std::size_t>(l) * layout.length + k]);
    }
  }
}

}  // namespace epid

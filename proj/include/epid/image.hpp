#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epid {

enum class ImageKind { dwi_b50, dwi_b1400, adc, t2w, field_hz, vdm_px, mask };

// Axis along which phase-encoding displacement acts.
//   row: shifts change the row index (vertical, anterior-posterior).
//   col: shifts change the column index (horizontal, left-right).
enum class PeAxis { row, col };

std::string_view to_string(ImageKind kind);
std::string_view to_string(PeAxis axis);
std::optional<ImageKind> parse_image_kind(std::string_view text);
std::optional<PeAxis> parse_pe_axis(std::string_view text);

struct Spacing {
  float row_mm = 1.0f;
  float col_mm = 1.0f;

  bool operator==(const Spacing&) const = default;
};

// A 2D float32 raster stored row-major.
class Image2D {
 public:
  Image2D() = default;
  Image2D(int width, int height, ImageKind kind, Spacing spacing = {},
          PeAxis pe_axis = PeAxis::row);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  ImageKind kind() const { return kind_; }
  PeAxis pe_axis() const { return pe_axis_; }
  Spacing spacing() const { return spacing_; }

  void set_kind(ImageKind kind) { kind_ = kind; }
  void set_pe_axis(PeAxis axis) { pe_axis_ = axis; }
  void set_spacing(Spacing spacing) { spacing_ = spacing; }

  float& at(int row, int col) { return pixels_[index(row, col)]; }
  float at(int row, int col) const { return pixels_[index(row, col)]; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  std::span<float> pixels() { return pixels_; }
  std::span<const float> pixels() const { return pixels_; }

  // Same width, height, and spacing.
  bool same_geometry(const Image2D& other) const;

  // A zero image with this geometry and the given kind.
  Image2D zeros_like(ImageKind kind) const;

  bool operator==(const Image2D&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ImageKind kind_ = ImageKind::dwi_b50;
  Spacing spacing_{};
  PeAxis pe_axis_ = PeAxis::row;
  std::vector<float> pixels_;
};

// Throws InvariantError describing the first violated invariant.
void validate_image(const Image2D& img);

// Throws GeometryError unless a and b share width, height, and spacing.
void require_same_geometry(const Image2D& a, const Image2D& b, std::string_view what);

// Views an image as a set of 1D lines running along a phase-encoding axis.
// Line l, position k maps to a pixel so that k is the coordinate that shifts.
struct LineLayout {
  int lines = 0;   // number of independent lines
  int length = 0;  // samples per line
  int width = 0;
  PeAxis axis = PeAxis::row;

  LineLayout(int width_px, int height_px, PeAxis pe_axis);
  explicit LineLayout(const Image2D& img) : LineLayout(img.width(), img.height(), img.pe_axis()) {}
  LineLayout(const Image2D& img, PeAxis pe_axis) : LineLayout(img.width(), img.height(), pe_axis) {}

  std::size_t index(int line, int k) const {
    return axis == PeAxis::row
               ? static_cast<std::size_t>(k) * static_cast<std::size_t>(width) + static_cast<std::size_t>(line)
               : static_cast<std::size_t>(line) * static_cast<std::size_t>(width) + static_cast<std::size_t>(k);
  }
};

// Copies line data into a dense (lines x length) double buffer and back.
std::vector<double> gather_lines(const Image2D& img, const LineLayout& layout);
void scatter_lines(std::span<const double> data, const LineLayout& layout, Image2D& img);

}  // namespace epid

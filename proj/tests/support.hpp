#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "epid/image.hpp"
#include "epid/random.hpp"

namespace testsupport {

// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("epid_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline epid::Image2D random_image(int w, int h, epid::Rng& rng, epid::ImageKind kind = epid::ImageKind::dwi_b50,
                                  double lo = 0.0, double hi = 1.0) {
  epid::Image2D img(w, h, kind);
  for (float& v : img.pixels()) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

// Sum of a few low-frequency cosines plus a ramp, scaled so that
// max|d| <= max_abs and max|d'| along pe_axis <= max_slope.
inline epid::Image2D smooth_vdm(int w, int h, epid::PeAxis axis, epid::Rng& rng, double max_abs, double max_slope) {
  epid::Image2D d(w, h, epid::ImageKind::vdm_px, {}, axis);
  struct Wave {
    double fr, fc, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    waves.push_back({rng.uniform(0.0, 1.5) / h, rng.uniform(0.0, 1.5) / w, rng.uniform(0.0, 6.283185307179586),
                     rng.uniform(0.3, 1.0)});
  }
  const double gr = rng.uniform(-1.0, 1.0) / h;
  const double gc = rng.uniform(-1.0, 1.0) / w;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double v = gr * r + gc * c;
      for (const auto& wv : waves) v += wv.amp * std::cos(6.283185307179586 * (wv.fr * r + wv.fc * c) + wv.phase);
      d.at(r, c) = static_cast<float>(v);
    }
  }
  double peak = 0.0;
  double slope = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      peak = std::max(peak, std::abs(static_cast<double>(d.at(r, c))));
      if (axis == epid::PeAxis::row && r + 1 < h) slope = std::max(slope, std::abs(double(d.at(r + 1, c)) - d.at(r, c)));
      if (axis == epid::PeAxis::col && c + 1 < w) slope = std::max(slope, std::abs(double(d.at(r, c + 1)) - d.at(r, c)));
    }
  }
  double scale = max_abs / std::max(peak, 1e-12);
  if (slope * scale > max_slope) scale = max_slope / slope;
  for (float& v : d.pixels()) v = static_cast<float>(v * scale);
  return d;
}

// Separable Gaussian blur with edge clamping.
inline epid::Image2D gaussian_blur(const epid::Image2D& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= total;
  const int w = img.width();
  const int h = img.height();
  epid::Image2D tmp = img;
  epid::Image2D out = img;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(r, std::clamp(c + i, 0, w - 1));
      tmp.at(r, c) = static_cast<float>(acc);
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(std::clamp(r + i, 0, h - 1), c);
      out.at(r, c) = static_cast<float>(acc);
    }
  }
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// True when both trees contain the same relative paths with identical bytes.
inline bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b, std::string* first_diff = nullptr) {
  namespace fs = std::filesystem;
  std::vector<fs::path> ra;
  std::vector<fs::path> rb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) ra.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rb.push_back(fs::relative(e.path(), b));
  }
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  if (ra != rb) {
    if (first_diff) *first_diff = "file lists differ";
    return false;
  }
  for (const auto& rel : ra) {
    if (slurp(a / rel) != slurp(b / rel)) {
      if (first_diff) *first_diff = rel.string();
      return false;
    }
  }
  return true;
}

}  // namespace testsupport

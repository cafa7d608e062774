#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "epid/image.hpp"

namespace epid {

inline constexpr double kDefaultFieldCapHz = 3000.0;

enum class HarmonicBasis { polynomial2d };

// Coefficients of the planar harmonic basis x^i y^j with i + j <= max_order.
// Terms are ordered by total order n = 0..L, and within an order by
// decreasing power of x: x^n, x^(n-1) y, ..., y^n. x runs along columns and
// y along rows, both normalized to [-1, 1].
struct HarmonicCoeffs {
  int max_order = 0;
  std::vector<double> coeffs;
  HarmonicBasis basis = HarmonicBasis::polynomial2d;
};

constexpr int harmonic_term_count(int max_order) { return (max_order + 1) * (max_order + 2) / 2; }

// Total order of the term at `index` in the ordering above.
int harmonic_term_order(int index);

// Least-squares fit over pixels where mask != 0 (all pixels when no mask).
// Throws FitError when the unmasked pixels cannot determine every coefficient.
HarmonicCoeffs fit_harmonic(const Image2D& field, int max_order,
                            const std::optional<Image2D>& mask = std::nullopt);

// Evaluates the expansion on the grid of `geometry`; result has kind field_hz.
Image2D evaluate_harmonic(const HarmonicCoeffs& coeffs, const Image2D& geometry);

// field - evaluate_harmonic(coeffs).
Image2D harmonic_residual(const Image2D& field, const HarmonicCoeffs& coeffs);

struct PerturbOptions {
  int low_keep_order = 2;
  std::array<double, 2> hi_scale_range{0.5, 2.0};
  std::uint64_t seed = 0;
  double cap_hz = kDefaultFieldCapHz;
};

// Keeps orders <= low_keep_order, scales every higher-order coefficient and
// the residual by independent draws from U[hi_scale_range], then clamps to
// +/- cap_hz. Deterministic in (coeffs, residual, options).
Image2D synthesize_field(const HarmonicCoeffs& coeffs, const Image2D& residual,
                         const PerturbOptions& perturb);

struct Dipole {
  double row = 0.0;  // pixels; may lie off-grid
  double col = 0.0;
  double moment = 0.0;  // Hz * px^3
  std::array<double, 2> orientation{1.0, 0.0};  // unit (row, col)
  // Radii below this (and below 2 px) are clamped; a gas pocket uses its own radius.
  double core_radius = 0.0;
};

struct DipoleSpec {
  std::vector<Dipole> dipoles;
  std::array<double, 2> background_gradient{0.0, 0.0};  // Hz/px along (row, col)
};

inline constexpr double kDipoleMinRadiusPx = 2.0;

// Sum of in-plane dipole patterns m (3 cos^2(theta) - 1) / rho^3 plus a linear
// background measured from the image center.
Image2D dipole_phantom_field(const DipoleSpec& spec, const Image2D& geometry);

// Clamps every pixel to [-cap_hz, cap_hz].
void clamp_field(Image2D& field, double cap_hz);

}  // namespace epid

#include "epid/field.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "epid/error.hpp"
#include "epid/random.hpp"

namespace epid {

namespace {

double normalized(int index, int extent) {
  return extent > 1 ? 2.0 * index / (extent - 1) - 1.0 : 0.0;
}

// Fills `out` with the basis terms at (x, y) in the canonical order.
void basis_terms(double x, double y, int max_order, std::vector<double>& out) {
  out.clear();
  std::vector<double> xp(max_order + 1, 1.0);
  std::vector<double> yp(max_order + 1, 1.0);
  for (int i = 1; i <= max_order; ++i) {
    xp[i] = xp[i - 1] * x;
    yp[i] = yp[i - 1] * y;
  }
  for (int n = 0; n <= max_order; ++n) {
    for (int j = 0; j <= n; ++j) out.push_back(xp[n - j] * yp[j]);
  }
}

std::vector<double> evaluate_raw(const HarmonicCoeffs& coeffs, int width, int height) {
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  std::vector<double> terms;
  for (int r = 0; r < height; ++r) {
    const double y = normalized(r, height);
    for (int c = 0; c < width; ++c) {
      basis_terms(normalized(c, width), y, coeffs.max_order, terms);
      double acc = 0.0;
      for (std::size_t t = 0; t < terms.size(); ++t) acc += coeffs.coeffs[t] * terms[t];
      out[static_cast<std::size_t>(r) * width + c] = acc;
    }
  }
  return out;
}

void check_coeffs(const HarmonicCoeffs& coeffs) {
  if (coeffs.max_order < 0) throw ValidationError("harmonic max_order must be >= 0");
  if (coeffs.coeffs.size() != static_cast<std::size_t>(harmonic_term_count(coeffs.max_order))) {
    throw ValidationError("harmonic coefficient count does not match max_order " +
                          std::to_string(coeffs.max_order));
  }
}

}  // namespace

int harmonic_term_order(int index) {
  int n = 0;
  while (harmonic_term_count(n) <= index) ++n;
  return n;
}

HarmonicCoeffs fit_harmonic(const Image2D& field, int max_order, const std::optional<Image2D>& mask) {
  if (max_order < 0) throw ValidationError("fit_harmonic: order must be >= 0");
  if (mask) require_same_geometry(field, *mask, "fit_harmonic mask");
  const int terms = harmonic_term_count(max_order);

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!mask || mask->pixels()[i] != 0.0f) used.push_back(i);
  }
  if (used.size() < static_cast<std::size_t>(terms)) {
    throw FitError("fit_harmonic: underdetermined fit, " + std::to_string(used.size()) +
                   " pixels for " + std::to_string(terms) + " coefficients");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(used.size()), terms);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(used.size()));
  std::vector<double> row_terms;
  for (std::size_t k = 0; k < used.size(); ++k) {
    const int r = static_cast<int>(used[k] / field.width());
    const int c = static_cast<int>(used[k] % field.width());
    basis_terms(normalized(c, field.width()), normalized(r, field.height()), max_order, row_terms);
    for (int t = 0; t < terms; ++t) design(static_cast<Eigen::Index>(k), t) = row_terms[t];
    rhs(static_cast<Eigen::Index>(k)) = field.pixels()[used[k]];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < terms) {
    throw FitError("fit_harmonic: degenerate mask, design matrix rank " + std::to_string(qr.rank()) +
                   " < " + std::to_string(terms));
  }
  const Eigen::VectorXd solution = qr.solve(rhs);

  HarmonicCoeffs out;
  out.max_order = max_order;
  out.coeffs.assign(solution.data(), solution.data() + solution.size());
  return out;
}

Image2D evaluate_harmonic(const HarmonicCoeffs& coeffs, const Image2D& geometry) {
  check_coeffs(coeffs);
  Image2D out = geometry.zeros_like(ImageKind::field_hz);
  const auto values = evaluate_raw(coeffs, geometry.width(), geometry.height());
  auto px = out.pixels();
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = static_cast<float>(values[i]);
  return out;
}

Image2D harmonic_residual(const Image2D& field, const HarmonicCoeffs& coeffs) {
  Image2D out = evaluate_harmonic(coeffs, field);
  auto px = out.pixels();
  const auto src = field.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = src[i] - px[i];
  return out;
}

Image2D synthesize_field(const HarmonicCoeffs& coeffs, const Image2D& residual,
                         const PerturbOptions& perturb) {
  check_coeffs(coeffs);
  const auto [lo, hi] = perturb.hi_scale_range;
  if (!(lo >= 0.0 && hi <= 4.0 && lo <= hi)) {
    throw ValidationError("synthesize_field: hi_scale_range must satisfy 0 <= lo <= hi <= 4");
  }
  if (perturb.low_keep_order < 0 || perturb.low_keep_order > coeffs.max_order) {
    throw ValidationError("synthesize_field: low_keep_order must lie in [0, max_order]");
  }
  if (!(perturb.cap_hz > 0.0)) throw ValidationError("synthesize_field: cap_hz must be > 0");

  Rng rng(perturb.seed);
  HarmonicCoeffs scaled = coeffs;
  for (std::size_t t = 0; t < scaled.coeffs.size(); ++t) {
    if (harmonic_term_order(static_cast<int>(t)) > perturb.low_keep_order) {
      scaled.coeffs[t] *= rng.uniform(lo, hi);
    }
  }
  const float residual_scale = static_cast<float>(rng.uniform(lo, hi));

  Image2D out = evaluate_harmonic(scaled, residual);
  auto px = out.pixels();
  const auto res = residual.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = px[i] + residual_scale * res[i];
  clamp_field(out, perturb.cap_hz);
  return out;
}

Image2D dipole_phantom_field(const DipoleSpec& spec, const Image2D& geometry) {
  if (spec.dipoles.empty()) throw ValidationError("dipole_phantom_field: at least one dipole required");
  for (const auto& d : spec.dipoles) {
    const double norm = std::hypot(d.orientation[0], d.orientation[1]);
    if (!(d.core_radius >= 0.0)) throw ValidationError("dipole_phantom_field: core_radius must be >= 0");
    if (std::abs(norm - 1.0) > 1e-6) {
      throw ValidationError("dipole_phantom_field: orientation must be a unit vector");
    }
  }
  Image2D out = geometry.zeros_like(ImageKind::field_hz);
  const double row0 = 0.5 * (geometry.height() - 1);
  const double col0 = 0.5 * (geometry.width() - 1);
  for (int r = 0; r < geometry.height(); ++r) {
    for (int c = 0; c < geometry.width(); ++c) {
      double acc = 0.0;
      for (const auto& d : spec.dipoles) {
        double dr = r - d.row;
        double dc = c - d.col;
        double rho = std::hypot(dr, dc);
        double cos_theta = 1.0;
        if (rho > 0.0) cos_theta = (dr * d.orientation[0] + dc * d.orientation[1]) / rho;
        rho = std::max({rho, kDipoleMinRadiusPx, d.core_radius});
        acc += d.moment * (3.0 * cos_theta * cos_theta - 1.0) / (rho * rho * rho);
      }
      acc += spec.background_gradient[0] * (r - row0) + spec.background_gradient[1] * (c - col0);
      out.at(r, c) = static_cast<float>(acc);
    }
  }
  return out;
}

void clamp_field(Image2D& field, double cap_hz) {
  const float cap = static_cast<float>(cap_hz);
  for (float& v : field.pixels()) v = std::clamp(v, -cap, cap);
}

}  // namespace epid

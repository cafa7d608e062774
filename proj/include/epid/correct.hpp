#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "epid/epi_params.hpp"
#include "epid/image.hpp"

namespace epid {

struct RestoreOptions {
  double lambda_smooth = 0.05;      // Tikhonov weight on first differences
  double invertibility_eps = 0.05;  // 1 + d' at or below this is a fold
  int max_iters = 40;               // per pyramid level
  double tol = 1e-3;                // px, largest control-point update
  int pyramid_levels = 4;
  double field_smoothness = 2e-3;   // membrane weight for the field estimator
};

void validate_restore_options(const RestoreOptions& opts);

enum class CorrectionMethod { fugue_ideal, topup_ideal, topup_default };

std::string_view to_string(CorrectionMethod m);
CorrectionMethod parse_correction_method(std::string_view text);  // throws ValidationError

struct UnwarpResult {
  Image2D restored;
  Image2D confidence_mask;  // 1 where the warp is locally invertible
};

// Field-map unwarping: restored(k) = distorted(k + d(k)) / rho(k + d(k)), with
// linear interpolation along pe_axis and rho the splat of a unit image (the
// discrete counterpart of 1 / (1 + d')). Folds use a central-difference d'; pixels with
// 1 + d' <= invertibility_eps are flagged 0 in the confidence mask and filled
// from the nearest valid pixel on the same line.
UnwarpResult unwarp_fieldmap(const Image2D& distorted, const Image2D& vdm,
                             const RestoreOptions& opts = {});

// Dual-PE least squares: per line, minimizes
//   |A+ u - I+|^2 + |A- u - I-|^2 + lambda |D u|^2
// where A+/- are the splat operators of +vdm/-vdm and D is the first
// difference. Output clamped at 0. Throws IllPosedError listing singular lines.
Image2D restore_dual_pe(const Image2D& img_plus, const Image2D& img_minus, const Image2D& vdm,
                        const RestoreOptions& opts = {});

// Objective of restore_dual_pe evaluated at `u` (summed over lines).
double dual_pe_objective(const Image2D& u, const Image2D& img_plus, const Image2D& img_minus,
                         const Image2D& vdm, double lambda);

struct FieldEstimate {
  Image2D vdm;  // displacement of img_plus, in pixels
  bool converged = false;
  int iterations = 0;
  double final_cost = 0.0;
};

// Estimates a smooth displacement d from a reverse-PE pair, with img_plus
// displaced by +d and img_minus by -d. Gauss-Newton on a cubic B-spline
// control grid, coarse to fine over a Gaussian pyramid, minimizing the
// mismatch of the two Jacobian-modulated unwarped images plus a membrane
// penalty. Only epi_params.pe_axis is used.
FieldEstimate estimate_field_dual_pe(const Image2D& img_plus, const Image2D& img_minus,
                                     const EpiParams& epi_params, const RestoreOptions& opts = {});

// Single-line building blocks, exposed for testing.
namespace line {

// Splats `src` by `disp` (the same kernel as forward_splat).
std::vector<double> splat(std::span<const double> src, std::span<const double> disp);

// Unclamped least-squares solution for one line; returns false when singular.
bool solve_dual_pe(std::span<const double> plus, std::span<const double> minus,
                   std::span<const double> disp, double lambda, std::vector<double>& out);

struct DualPeTerms {
  double data = 0.0;        // |A+ u - I+|^2 + |A- u - I-|^2
  double smoothness = 0.0;  // |D u|^2
};

DualPeTerms dual_pe_terms(std::span<const double> u, std::span<const double> plus,
                          std::span<const double> minus, std::span<const double> disp);

// 1 + d'(k) with central differences (one-sided at the ends).
std::vector<double> local_jacobian(std::span<const double> disp);

}  // namespace line

}  // namespace epid

#include "epid/correct.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epid/banded.hpp"
#include "epid/error.hpp"

namespace epid {

void validate_restore_options(const RestoreOptions& opts) {
  if (!(opts.lambda_smooth >= 0.0)) throw ValidationError("lambda_smooth must be >= 0");
  if (opts.pyramid_levels < 1) throw ValidationError("pyramid_levels must be >= 1");
  if (opts.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (!(opts.field_smoothness >= 0.0)) throw ValidationError("field_smoothness must be >= 0");
  if (!std::isfinite(opts.invertibility_eps)) throw ValidationError("invertibility_eps must be finite");
}

std::string_view to_string(CorrectionMethod m) {
  switch (m) {
    case CorrectionMethod::fugue_ideal: return "fugue-ideal";
    case CorrectionMethod::topup_ideal: return "topup-ideal";
    case CorrectionMethod::topup_default: return "topup-default";
  }
  return "?";
}

CorrectionMethod parse_correction_method(std::string_view text) {
  if (text == "fugue-ideal") return CorrectionMethod::fugue_ideal;
  if (text == "topup-ideal") return CorrectionMethod::topup_ideal;
  if (text == "topup-default") return CorrectionMethod::topup_default;
  throw ValidationError("unknown correction method \"" + std::string(text) +
                        "\" (valid: fugue-ideal, topup-ideal, topup-default)");
}

namespace line {

namespace {

struct Deposit {
  int target;
  double weight;
};

struct Contribution {
  int source;
  double weight;
};

// Up to two non-zero deposits of source k displaced by `shift`.
int deposits(int k, double shift, int n, Deposit out[2]) {
  const double t = k + shift;
  const double base = std::floor(t);
  const double frac = t - base;
  const int i0 = static_cast<int>(base);
  int count = 0;
  if (i0 >= 0 && i0 < n && 1.0 - frac != 0.0) out[count++] = {i0, 1.0 - frac};
  if (i0 + 1 >= 0 && i0 + 1 < n && frac != 0.0) out[count++] = {i0 + 1, frac};
  return count;
}

// Accumulates A^T A into `normal` and A^T rhs into `atb` for the operator
// that splats by sign * disp.
void accumulate(std::span<const double> image, std::span<const double> disp, double sign,
                std::vector<std::vector<Contribution>>& by_target, SymmetricBand* normal,
                std::vector<double>* atb) {
  const int n = static_cast<int>(disp.size());
  for (auto& v : by_target) v.clear();
  Deposit dep[2];
  for (int k = 0; k < n; ++k) {
    const int count = deposits(k, sign * disp[k], n, dep);
    for (int c = 0; c < count; ++c) by_target[dep[c].target].push_back({k, dep[c].weight});
  }
  for (int t = 0; t < n; ++t) {
    const auto& src = by_target[t];
    for (std::size_t a = 0; a < src.size(); ++a) {
      if (atb) (*atb)[src[a].source] += src[a].weight * image[t];
      if (!normal) continue;
      for (std::size_t b = 0; b <= a; ++b) {
        normal->at(src[a].source, src[b].source) += src[a].weight * src[b].weight;
      }
    }
  }
}

int coupling_bandwidth(std::span<const double> disp, double sign,
                       std::vector<std::vector<Contribution>>& by_target) {
  const int n = static_cast<int>(disp.size());
  for (auto& v : by_target) v.clear();
  Deposit dep[2];
  for (int k = 0; k < n; ++k) {
    const int count = deposits(k, sign * disp[k], n, dep);
    for (int c = 0; c < count; ++c) by_target[dep[c].target].push_back({k, dep[c].weight});
  }
  int bw = 0;
  for (const auto& src : by_target) {
    if (src.empty()) continue;
    const auto [lo, hi] = std::minmax_element(src.begin(), src.end(),
                                              [](const Contribution& a, const Contribution& b) { return a.source < b.source; });
    bw = std::max(bw, hi->source - lo->source);
  }
  return bw;
}

}  // namespace

std::vector<double> splat(std::span<const double> src, std::span<const double> disp) {
  const int n = static_cast<int>(src.size());
  std::vector<double> out(n, 0.0);
  Deposit dep[2];
  for (int k = 0; k < n; ++k) {
    const int count = deposits(k, disp[k], n, dep);
    for (int c = 0; c < count; ++c) out[dep[c].target] += dep[c].weight * src[k];
  }
  return out;
}

bool solve_dual_pe(std::span<const double> plus, std::span<const double> minus,
                   std::span<const double> disp, double lambda, std::vector<double>& out) {
  const int n = static_cast<int>(disp.size());
  std::vector<std::vector<Contribution>> by_target(n);
  int bw = std::max(coupling_bandwidth(disp, +1.0, by_target), coupling_bandwidth(disp, -1.0, by_target));
  if (lambda > 0.0 && n > 1) bw = std::max(bw, 1);

  SymmetricBand normal(n, bw);
  out.assign(n, 0.0);
  accumulate(plus, disp, +1.0, by_target, &normal, &out);
  accumulate(minus, disp, -1.0, by_target, &normal, &out);
  if (lambda > 0.0) {
    for (int k = 0; k + 1 < n; ++k) {
      normal.at(k, k) += lambda;
      normal.at(k + 1, k + 1) += lambda;
      normal.at(k + 1, k) -= lambda;
    }
  }
  if (normal.factor()) return false;
  normal.solve(out);
  return true;
}

DualPeTerms dual_pe_terms(std::span<const double> u, std::span<const double> plus,
                          std::span<const double> minus, std::span<const double> disp) {
  const int n = static_cast<int>(u.size());
  std::vector<double> neg(disp.begin(), disp.end());
  for (double& v : neg) v = -v;
  const auto pred_plus = splat(u, disp);
  const auto pred_minus = splat(u, neg);
  DualPeTerms terms;
  for (int k = 0; k < n; ++k) {
    terms.data += (pred_plus[k] - plus[k]) * (pred_plus[k] - plus[k]);
    terms.data += (pred_minus[k] - minus[k]) * (pred_minus[k] - minus[k]);
  }
  for (int k = 0; k + 1 < n; ++k) terms.smoothness += (u[k + 1] - u[k]) * (u[k + 1] - u[k]);
  return terms;
}

std::vector<double> local_jacobian(std::span<const double> disp) {
  const int n = static_cast<int>(disp.size());
  std::vector<double> jac(n, 1.0);
  if (n < 2) return jac;
  jac[0] = 1.0 + (disp[1] - disp[0]);
  jac[n - 1] = 1.0 + (disp[n - 1] - disp[n - 2]);
  for (int k = 1; k + 1 < n; ++k) jac[k] = 1.0 + 0.5 * (disp[k + 1] - disp[k - 1]);
  return jac;
}

}  // namespace line

namespace {

void require_vdm(const Image2D& vdm, const Image2D& img, std::string_view what) {
  require_same_geometry(img, vdm, what);
  if (vdm.kind() != ImageKind::vdm_px) {
    throw GeometryError(std::string(what) + ": displacement image must have kind vdm_px");
  }
}

// Linear interpolation with zero signal outside the line.
constexpr double kMinDensity = 1e-6;

double sample_zero(std::span<const double> line, double pos) {
  const int n = static_cast<int>(line.size());
  const double base = std::floor(pos);
  const double frac = pos - base;
  const int i0 = static_cast<int>(base);
  const double a = (i0 >= 0 && i0 < n) ? line[i0] : 0.0;
  const double b = (i0 + 1 >= 0 && i0 + 1 < n) ? line[i0 + 1] : 0.0;
  return frac == 0.0 ? a : (1.0 - frac) * a + frac * b;
}

}  // namespace

UnwarpResult unwarp_fieldmap(const Image2D& distorted, const Image2D& vdm, const RestoreOptions& opts) {
  validate_restore_options(opts);
  require_vdm(vdm, distorted, "unwarp_fieldmap");
  const LineLayout layout(distorted, vdm.pe_axis());
  const auto data = gather_lines(distorted, layout);
  const auto disp = gather_lines(vdm, layout);
  const int n = layout.length;

  std::vector<double> restored(data.size());
  std::vector<double> valid(data.size());
  for (int l = 0; l < layout.lines; ++l) {
    const std::size_t off = static_cast<std::size_t>(l) * n;
    const std::span<const double> src(data.data() + off, n);
    const std::span<const double> d(disp.data() + off, n);
    const auto jac = line::local_jacobian(d);
    // Intensity change of the discrete splat itself: the density a unit line
    // receives. Dividing by it cancels the sub-pixel ripple that the analytic
    // factor |1 + d'| leaves behind.
    const std::vector<double> ones(n, 1.0);
    const auto density = line::splat(ones, d);
    for (int k = 0; k < n; ++k) {
      const bool ok = jac[k] > opts.invertibility_eps;
      valid[off + k] = ok ? 1.0 : 0.0;
      const double rho = sample_zero(density, k + d[k]);
      restored[off + k] = ok && rho > kMinDensity ? sample_zero(src, k + d[k]) / rho : 0.0;
    }
    for (int k = 0; k < n; ++k) {
      if (valid[off + k] != 0.0) continue;
      for (int step = 1; step < n; ++step) {
        if (k - step >= 0 && valid[off + k - step] != 0.0) {
          restored[off + k] = restored[off + k - step];
          break;
        }
        if (k + step < n && valid[off + k + step] != 0.0) {
          restored[off + k] = restored[off + k + step];
          break;
        }
      }
    }
  }

  UnwarpResult out{distorted.zeros_like(distorted.kind()), distorted.zeros_like(ImageKind::mask)};
  out.restored.set_pe_axis(vdm.pe_axis());
  out.confidence_mask.set_pe_axis(vdm.pe_axis());
  scatter_lines(restored, layout, out.restored);
  scatter_lines(valid, layout, out.confidence_mask);
  return out;
}

Image2D restore_dual_pe(const Image2D& img_plus, const Image2D& img_minus, const Image2D& vdm,
                        const RestoreOptions& opts) {
  validate_restore_options(opts);
  require_same_geometry(img_plus, img_minus, "restore_dual_pe");
  require_vdm(vdm, img_plus, "restore_dual_pe");
  const LineLayout layout(img_plus, vdm.pe_axis());
  const auto plus = gather_lines(img_plus, layout);
  const auto minus = gather_lines(img_minus, layout);
  const auto disp = gather_lines(vdm, layout);
  const int n = layout.length;

  std::vector<double> result(plus.size());
  std::vector<int> singular;
  std::vector<double> u;
  for (int l = 0; l < layout.lines; ++l) {
    const std::size_t off = static_cast<std::size_t>(l) * n;
    if (!line::solve_dual_pe({plus.data() + off, static_cast<std::size_t>(n)},
                             {minus.data() + off, static_cast<std::size_t>(n)},
                             {disp.data() + off, static_cast<std::size_t>(n)}, opts.lambda_smooth, u)) {
      singular.push_back(l);
      continue;
    }
    for (int k = 0; k < n; ++k) result[off + k] = std::max(u[k], 0.0);
  }
  if (!singular.empty()) {
    std::ostringstream os;
    os << "restore_dual_pe: ill-posed system on " << singular.size() << " line(s) along pe_axis "
       << to_string(vdm.pe_axis()) << ":";
    for (int l : singular) os << ' ' << l;
    throw IllPosedError(os.str());
  }

  Image2D out = img_plus.zeros_like(img_plus.kind());
  out.set_pe_axis(vdm.pe_axis());
  scatter_lines(result, layout, out);
  return out;
}

double dual_pe_objective(const Image2D& u, const Image2D& img_plus, const Image2D& img_minus,
                         const Image2D& vdm, double lambda) {
  require_same_geometry(u, img_plus, "dual_pe_objective");
  require_same_geometry(img_plus, img_minus, "dual_pe_objective");
  require_vdm(vdm, img_plus, "dual_pe_objective");
  const LineLayout layout(img_plus, vdm.pe_axis());
  const auto uu = gather_lines(u, layout);
  const auto plus = gather_lines(img_plus, layout);
  const auto minus = gather_lines(img_minus, layout);
  const auto disp = gather_lines(vdm, layout);
  const auto n = static_cast<std::size_t>(layout.length);
  double total = 0.0;
  for (int l = 0; l < layout.lines; ++l) {
    const std::size_t off = static_cast<std::size_t>(l) * n;
    const auto terms = line::dual_pe_terms({uu.data() + off, n}, {plus.data() + off, n},
                                           {minus.data() + off, n}, {disp.data() + off, n});
    total += terms.data + lambda * terms.smoothness;
  }
  return total;
}

}  // namespace epid

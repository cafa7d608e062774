#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "epid/correct.hpp"
#include "epid/error.hpp"

namespace epid {

namespace {

// Dense (lines x n) buffer with n running along the phase-encoding axis.
struct Grid {
  int lines = 0;
  int n = 0;
  std::vector<double> v;

  double at(int l, int k) const { return v[static_cast<std::size_t>(l) * n + k]; }
  double& at(int l, int k) { return v[static_cast<std::size_t>(l) * n + k]; }
  const double* line(int l) const { return v.data() + static_cast<std::size_t>(l) * n; }
};

Grid blur_and_decimate(const Grid& g) {
  static constexpr std::array<double, 5> kKernel{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  auto clamp_idx = [](int i, int size) { return std::clamp(i, 0, size - 1); };

  Grid tmp{g.lines, (g.n + 1) / 2, {}};
  tmp.v.assign(static_cast<std::size_t>(tmp.lines) * tmp.n, 0.0);
  for (int l = 0; l < g.lines; ++l) {
    for (int k = 0; k < tmp.n; ++k) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t) acc += kKernel[t + 2] * g.at(l, clamp_idx(2 * k + t, g.n));
      tmp.at(l, k) = acc;
    }
  }
  Grid out{(g.lines + 1) / 2, tmp.n, {}};
  out.v.assign(static_cast<std::size_t>(out.lines) * out.n, 0.0);
  for (int l = 0; l < out.lines; ++l) {
    for (int k = 0; k < out.n; ++k) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t) acc += kKernel[t + 2] * tmp.at(clamp_idx(2 * l + t, tmp.lines), k);
      out.at(l, k) = acc;
    }
  }
  return out;
}

Grid gradient_along_pe(const Grid& g) {
  Grid out{g.lines, g.n, std::vector<double>(g.v.size(), 0.0)};
  if (g.n < 2) return out;
  for (int l = 0; l < g.lines; ++l) {
    out.at(l, 0) = g.at(l, 1) - g.at(l, 0);
    out.at(l, g.n - 1) = g.at(l, g.n - 1) - g.at(l, g.n - 2);
    for (int k = 1; k + 1 < g.n; ++k) out.at(l, k) = 0.5 * (g.at(l, k + 1) - g.at(l, k - 1));
  }
  return out;
}

double sample_clamped(const double* line, int n, double pos) {
  pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const int i0 = std::min(static_cast<int>(pos), n - 1);
  const double frac = pos - i0;
  if (frac == 0.0 || i0 + 1 >= n) return line[i0];
  return (1.0 - frac) * line[i0] + frac * line[i0 + 1];
}

// Uniform cubic B-spline basis along one axis.
struct SplineWeights {
  int cell = 0;
  std::array<double, 4> w{};
  std::array<double, 4> dw{};  // derivative per pixel
};

struct SplineAxis {
  int size = 1;
  int intervals = 1;
  double spacing = 1.0;
  std::vector<SplineWeights> table;

  int coeffs() const { return intervals + 3; }

  SplineWeights at(double pos) const {
    const double t = pos / spacing;
    SplineWeights s;
    s.cell = std::clamp(static_cast<int>(std::floor(t)), 0, intervals - 1);
    const double u = t - s.cell;
    const double v = 1.0 - u;
    s.w = {v * v * v / 6.0, (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0,
           (-3.0 * u * u * u + 3.0 * u * u + 3.0 * u + 1.0) / 6.0, u * u * u / 6.0};
    s.dw = {-0.5 * v * v / spacing, (1.5 * u * u - 2.0 * u) / spacing,
            (-1.5 * u * u + u + 0.5) / spacing, 0.5 * u * u / spacing};
    return s;
  }
};

SplineAxis make_axis(int size) {
  SplineAxis a;
  a.size = size;
  a.intervals = std::clamp(size / 4, 1, 16);
  a.spacing = size > 1 ? static_cast<double>(size - 1) / a.intervals : 1.0;
  a.table.reserve(size);
  for (int i = 0; i < size; ++i) a.table.push_back(a.at(i));
  return a;
}

struct Level {
  Grid plus, minus, grad_plus, grad_minus;
  SplineAxis across, along;  // across lines, along the PE axis
  Eigen::MatrixXd membrane;  // c^T M c = mean squared gradient of d

  int coeff_count() const { return across.coeffs() * along.coeffs(); }
  int coeff_index(int i, int j) const { return i * along.coeffs() + j; }
};

// Per-pixel local support: 16 coefficient indices with value and PE-derivative weights.
struct Support {
  std::array<int, 16> idx{};
  std::array<double, 16> value{};
  std::array<double, 16> deriv_pe{};
  std::array<double, 16> deriv_across{};
};

Support support_at(const Level& lv, const SplineWeights& wa, const SplineWeights& wn) {
  Support s;
  int q = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j, ++q) {
      s.idx[q] = lv.coeff_index(wa.cell + i, wn.cell + j);
      s.value[q] = wa.w[i] * wn.w[j];
      s.deriv_pe[q] = wa.w[i] * wn.dw[j];
      s.deriv_across[q] = wa.dw[i] * wn.w[j];
    }
  }
  return s;
}

Eigen::MatrixXd build_membrane(const Level& lv) {
  const int m = lv.coeff_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  const double inv_n = 1.0 / (static_cast<double>(lv.plus.lines) * lv.plus.n);
  for (int l = 0; l < lv.plus.lines; ++l) {
    for (int k = 0; k < lv.plus.n; ++k) {
      const Support s = support_at(lv, lv.across.table[l], lv.along.table[k]);
      for (int p = 0; p < 16; ++p) {
        for (int q = 0; q < 16; ++q) {
          r(s.idx[p], s.idx[q]) +=
              inv_n * (s.deriv_pe[p] * s.deriv_pe[q] + s.deriv_across[p] * s.deriv_across[q]);
        }
      }
    }
  }
  return r;
}

Level make_level(Grid plus, Grid minus) {
  Level lv;
  lv.grad_plus = gradient_along_pe(plus);
  lv.grad_minus = gradient_along_pe(minus);
  lv.plus = std::move(plus);
  lv.minus = std::move(minus);
  lv.across = make_axis(lv.plus.lines);
  lv.along = make_axis(lv.plus.n);
  lv.membrane = build_membrane(lv);
  return lv;
}

struct PixelTerms {
  double residual;
  double d_disp;   // dr/dd
  double d_slope;  // dr/dd'
};

PixelTerms pixel_terms(const Level& lv, int l, int k, double d, double slope) {
  const int n = lv.plus.n;
  const double pos_p = k + d;
  const double pos_m = k - d;
  const double p = sample_clamped(lv.plus.line(l), n, pos_p);
  const double m = sample_clamped(lv.minus.line(l), n, pos_m);
  const double gp = sample_clamped(lv.grad_plus.line(l), n, pos_p);
  const double gm = sample_clamped(lv.grad_minus.line(l), n, pos_m);
  return {p * (1.0 + slope) - m * (1.0 - slope), gp * (1.0 + slope) + gm * (1.0 - slope), p + m};
}

double evaluate_cost(const Level& lv, const Eigen::VectorXd& c, double smoothness) {
  double data = 0.0;
  for (int l = 0; l < lv.plus.lines; ++l) {
    for (int k = 0; k < lv.plus.n; ++k) {
      const Support s = support_at(lv, lv.across.table[l], lv.along.table[k]);
      double d = 0.0;
      double slope = 0.0;
      for (int q = 0; q < 16; ++q) {
        d += c[s.idx[q]] * s.value[q];
        slope += c[s.idx[q]] * s.deriv_pe[q];
      }
      const double r = pixel_terms(lv, l, k, d, slope).residual;
      data += r * r;
    }
  }
  data /= static_cast<double>(lv.plus.lines) * lv.plus.n;
  return data + smoothness * c.dot(lv.membrane * c);
}

struct LevelResult {
  bool converged = false;
  int iterations = 0;
  double cost = 0.0;
};

LevelResult refine_level(const Level& lv, Eigen::VectorXd& c, const RestoreOptions& opts) {
  const int m = lv.coeff_count();
  const double inv_n = 1.0 / (static_cast<double>(lv.plus.lines) * lv.plus.n);
  const double alpha = opts.field_smoothness;
  double cost = evaluate_cost(lv, c, alpha);
  double damping = 1e-3;
  LevelResult out;

  Eigen::MatrixXd h(m, m);
  Eigen::VectorXd g(m);
  for (int it = 0; it < opts.max_iters; ++it) {
    ++out.iterations;
    h.setZero();
    g.setZero();
    for (int l = 0; l < lv.plus.lines; ++l) {
      for (int k = 0; k < lv.plus.n; ++k) {
        const Support s = support_at(lv, lv.across.table[l], lv.along.table[k]);
        double d = 0.0;
        double slope = 0.0;
        for (int q = 0; q < 16; ++q) {
          d += c[s.idx[q]] * s.value[q];
          slope += c[s.idx[q]] * s.deriv_pe[q];
        }
        const PixelTerms t = pixel_terms(lv, l, k, d, slope);
        std::array<double, 16> jac{};
        for (int q = 0; q < 16; ++q) jac[q] = t.d_disp * s.value[q] + t.d_slope * s.deriv_pe[q];
        for (int p = 0; p < 16; ++p) {
          g[s.idx[p]] += jac[p] * t.residual;
          for (int q = 0; q < 16; ++q) h(s.idx[p], s.idx[q]) += jac[p] * jac[q];
        }
      }
    }
    h *= inv_n;
    g *= inv_n;
    h += alpha * lv.membrane;
    g += alpha * (lv.membrane * c);

    bool accepted = false;
    Eigen::VectorXd step;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      Eigen::MatrixXd a = h;
      for (int i = 0; i < m; ++i) a(i, i) += damping * h(i, i) + 1e-12;
      step = -a.ldlt().solve(g);
      const Eigen::VectorXd trial = c + step;
      const double trial_cost = evaluate_cost(lv, trial, alpha);
      if (trial_cost < cost) {
        c = trial;
        cost = trial_cost;
        damping = std::max(damping / 3.0, 1e-7);
        accepted = true;
      } else {
        damping *= 5.0;
      }
    }
    if (!accepted || step.cwiseAbs().maxCoeff() < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.cost = cost;
  return out;
}

// Least-squares projection of a sampled displacement onto the level's spline.
Eigen::VectorXd project(const Level& lv, const Grid& disp) {
  const int m = lv.coeff_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (int l = 0; l < disp.lines; ++l) {
    for (int k = 0; k < disp.n; ++k) {
      const Support s = support_at(lv, lv.across.table[l], lv.along.table[k]);
      for (int p = 0; p < 16; ++p) {
        b[s.idx[p]] += s.value[p] * disp.at(l, k);
        for (int q = 0; q < 16; ++q) a(s.idx[p], s.idx[q]) += s.value[p] * s.value[q];
      }
    }
  }
  for (int i = 0; i < m; ++i) a(i, i) += 1e-9;
  return a.ldlt().solve(b);
}

// Displacement of the coarse level, expressed in pixels of the finer grid.
Grid upsample_displacement(const Level& coarse, const Eigen::VectorXd& c, int lines, int n) {
  Grid out{lines, n, std::vector<double>(static_cast<std::size_t>(lines) * n, 0.0)};
  for (int l = 0; l < lines; ++l) {
    const SplineWeights wa = coarse.across.at(0.5 * l);
    for (int k = 0; k < n; ++k) {
      const SplineWeights wn = coarse.along.at(0.5 * k);
      const Support s = support_at(coarse, wa, wn);
      double d = 0.0;
      for (int q = 0; q < 16; ++q) d += c[s.idx[q]] * s.value[q];
      out.at(l, k) = 2.0 * d;
    }
  }
  return out;
}

}  // namespace

FieldEstimate estimate_field_dual_pe(const Image2D& img_plus, const Image2D& img_minus,
                                     const EpiParams& epi_params, const RestoreOptions& opts) {
  validate_restore_options(opts);
  validate_epi_params(epi_params);
  require_same_geometry(img_plus, img_minus, "estimate_field_dual_pe");
  validate_image(img_plus);
  validate_image(img_minus);

  const LineLayout layout(img_plus, epi_params.pe_axis);
  Grid plus{layout.lines, layout.length, gather_lines(img_plus, layout)};
  Grid minus{layout.lines, layout.length, gather_lines(img_minus, layout)};

  FieldEstimate result{img_plus.zeros_like(ImageKind::vdm_px), true, 0, 0.0};
  result.vdm.set_pe_axis(epi_params.pe_axis);

  double scale = 0.0;
  for (std::size_t i = 0; i < plus.v.size(); ++i) scale += std::abs(plus.v[i]) + std::abs(minus.v[i]);
  scale /= 2.0 * static_cast<double>(plus.v.size());
  if (!(scale > 0.0)) return result;
  for (std::size_t i = 0; i < plus.v.size(); ++i) {
    plus.v[i] /= scale;
    minus.v[i] /= scale;
  }

  std::vector<std::pair<Grid, Grid>> pyramid;
  pyramid.emplace_back(std::move(plus), std::move(minus));
  for (int lvl = 1; lvl < opts.pyramid_levels; ++lvl) {
    const auto& prev = pyramid.back();
    if (prev.first.n < 8 || prev.first.lines < 8) break;
    pyramid.emplace_back(blur_and_decimate(prev.first), blur_and_decimate(prev.second));
  }

  Eigen::VectorXd coeffs;
  Level current;
  LevelResult last;
  for (int lvl = static_cast<int>(pyramid.size()) - 1; lvl >= 0; --lvl) {
    Level next = make_level(pyramid[lvl].first, pyramid[lvl].second);
    if (coeffs.size() == 0) {
      coeffs = Eigen::VectorXd::Zero(next.coeff_count());
    } else {
      const Grid disp = upsample_displacement(current, coeffs, next.plus.lines, next.plus.n);
      coeffs = project(next, disp);
    }
    current = std::move(next);
    last = refine_level(current, coeffs, opts);
    result.iterations += last.iterations;
  }
  result.converged = last.converged;
  result.final_cost = last.cost;

  std::vector<double> disp(static_cast<std::size_t>(layout.lines) * layout.length);
  for (int l = 0; l < layout.lines; ++l) {
    for (int k = 0; k < layout.length; ++k) {
      const Support s = support_at(current, current.across.table[l], current.along.table[k]);
      double d = 0.0;
      for (int q = 0; q < 16; ++q) d += coeffs[s.idx[q]] * s.value[q];
      disp[static_cast<std::size_t>(l) * layout.length + k] = d;
    }
  }
  scatter_lines(disp, layout, result.vdm);
  return result;
}

}  // namespace epid

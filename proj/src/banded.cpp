#include "epid/banded.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "epid/error.hpp"

namespace epid {

SymmetricBand::SymmetricBand(int n, int bandwidth)
    : n_(n), bw_(std::clamp(bandwidth, 0, std::max(n - 1, 0))) {
  if (n <= 0) throw ValidationError("SymmetricBand: size must be positive");
  band_.assign(static_cast<std::size_t>(n_) * (bw_ + 1), 0.0);
}

double& SymmetricBand::at(int i, int j) {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) throw ValidationError("SymmetricBand: entry outside band");
  return raw(i, i - j);
}

double SymmetricBand::at(int i, int j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return raw(i, i - j);
}

std::vector<double> SymmetricBand::multiply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    y[i] += raw(i, 0) * x[i];
    for (int k = 1; k <= bw_ && i - k >= 0; ++k) {
      const double a = raw(i, k);
      y[i] += a * x[i - k];
      y[i - k] += a * x[i];
    }
  }
  return y;
}

std::optional<int> SymmetricBand::factor(double pivot_tol) {
  double scale = 0.0;
  for (int i = 0; i < n_; ++i) scale = std::max(scale, std::abs(raw(i, 0)));
  const double threshold = pivot_tol * std::max(scale, 1e-300);

  // Column j: D_j = A_jj - sum L_jk^2 D_k; L_ij = (A_ij - sum L_ik L_jk D_k) / D_j.
  for (int j = 0; j < n_; ++j) {
    double d = raw(j, 0);
    for (int k = std::max(0, j - bw_); k < j; ++k) {
      const double l = raw(j, j - k);
      d -= l * l * raw(k, 0);
    }
    if (!(d > threshold)) return j;
    raw(j, 0) = d;
    for (int i = j + 1; i <= std::min(n_ - 1, j + bw_); ++i) {
      double v = raw(i, i - j);
      for (int k = std::max(0, i - bw_); k < j; ++k) v -= raw(i, i - k) * raw(j, j - k) * raw(k, 0);
      raw(i, i - j) = v / d;
    }
  }
  factored_ = true;
  return std::nullopt;
}

void SymmetricBand::solve(std::span<double> rhs) const {
  if (!factored_) throw ValidationError("SymmetricBand: solve before factor");
  for (int i = 0; i < n_; ++i) {
    for (int k = 1; k <= bw_ && i - k >= 0; ++k) rhs[i] -= raw(i, k) * rhs[i - k];
  }
  for (int i = 0; i < n_; ++i) rhs[i] /= raw(i, 0);
  for (int i = n_ - 1; i >= 0; --i) {
    for (int k = 1; k <= bw_ && i + k < n_; ++k) rhs[i] -= raw(i + k, k) * rhs[i + k];
  }
}

}  // namespace epid

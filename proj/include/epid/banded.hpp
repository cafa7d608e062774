#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace epid {

// Symmetric band matrix holding the lower band: entry (i, i-k) for
// 0 <= k <= bandwidth. Factored in place as L D L^T without square roots, so
// diagonal systems solve exactly.
class SymmetricBand {
 public:
  SymmetricBand(int n, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  // Requires |i - j| <= bandwidth.
  double& at(int i, int j);
  double at(int i, int j) const;

  // y = A x using the unfactored entries.
  std::vector<double> multiply(std::span<const double> x) const;

  // Factors in place. Returns the index of the first non-positive pivot
  // (relative to the largest diagonal entry) or nullopt on success.
  std::optional<int> factor(double pivot_tol = 1e-12);

  // Solves with the factored matrix; rhs is overwritten with the solution.
  void solve(std::span<double> rhs) const;

 private:
  double& raw(int i, int k) { return band_[static_cast<std::size_t>(i) * (bw_ + 1) + k]; }
  double raw(int i, int k) const { return band_[static_cast<std::size_t>(i) * (bw_ + 1) + k]; }

  int n_;
  int bw_;
  std::vector<double> band_;
  bool factored_ = false;
};

}  // namespace epid

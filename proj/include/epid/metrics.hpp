#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epid/image.hpp"

namespace epid {

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

// sum (ref - test)^2 / sum ref^2 over pixels where mask != 0.
// Throws ValidationError when the reference has zero energy in the mask.
double nmse(const Image2D& ref, const Image2D& test, const std::optional<Image2D>& mask = std::nullopt);

// 10 log10(peak^2 / MSE). Peak defaults to max(ref) within the mask; returns
// kPsnrInfinite when MSE is zero.
double psnr(const Image2D& ref, const Image2D& test, const std::optional<Image2D>& mask = std::nullopt,
            std::optional<double> fixed_peak = std::nullopt);

// Root-mean-square displacement error (px) within the mask.
double field_rmse(const Image2D& truth, const Image2D& est, const std::optional<Image2D>& mask = std::nullopt);

struct EvalEntry {
  std::string sample_id;
  int subject = 0;
  int slice = 0;
  std::string method;
  std::string contrast;  // "b50", "b1400" or "adc"
  double psnr_db = 0.0;
  double nmse = 0.0;
  std::optional<double> field_rmse_px;
  // NMSE restricted to PE lines containing non-invertible pixels.
  std::optional<double> nmse_fold_lines;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  int count = 0;
};

Summary summarize(const std::vector<double>& values);

struct AggregateRow {
  std::string method;
  std::string contrast;
  std::string granularity;  // "slice" or "subject"
  Summary psnr_db;
  Summary nmse;
  std::optional<Summary> field_rmse_px;
  std::optional<Summary> nmse_fold_lines;
};

struct EvalFailure {
  std::string sample_id;
  std::string method;
  std::string error;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  std::vector<EvalFailure> failures;

  // Mean +/- SD per (method, contrast), both per slice and per subject (slices
  // of a subject averaged first). Recomputed from `entries` on each call.
  std::vector<AggregateRow> aggregates() const;
};

// Structured report (`report.json`) and a flat table (`report.csv`, one row
// per sample/contrast/method). Infinite PSNR is written as "inf".
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace epid

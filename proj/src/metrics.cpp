#include "epid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "epid/error.hpp"
#include "json.hpp"

namespace epid {

using nlohmann::json;

namespace {

void check_inputs(const Image2D& ref, const Image2D& test, const std::optional<Image2D>& mask,
                  const char* what) {
  require_same_geometry(ref, test, what);
  if (mask) require_same_geometry(ref, *mask, what);
}

bool selected(const std::optional<Image2D>& mask, std::size_t i) {
  return !mask || mask->pixels()[i] != 0.0f;
}

}  // namespace

double nmse(const Image2D& ref, const Image2D& test, const std::optional<Image2D>& mask) {
  check_inputs(ref, test, mask, "nmse");
  const auto a = ref.pixels();
  const auto b = test.pixels();
  double err = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!selected(mask, i)) continue;
    const double diff = static_cast<double>(a[i]) - b[i];
    err += diff * diff;
    energy += static_cast<double>(a[i]) * a[i];
  }
  if (!(energy > 0.0)) throw ValidationError("nmse: reference has zero energy in the mask");
  return err / energy;
}

double psnr(const Image2D& ref, const Image2D& test, const std::optional<Image2D>& mask,
            std::optional<double> fixed_peak) {
  check_inputs(ref, test, mask, "psnr");
  const auto a = ref.pixels();
  const auto b = test.pixels();
  double err = 0.0;
  double peak = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!selected(mask, i)) continue;
    const double diff = static_cast<double>(a[i]) - b[i];
    err += diff * diff;
    peak = std::max(peak, static_cast<double>(a[i]));
    ++count;
  }
  if (count == 0) throw ValidationError("psnr: empty mask");
  if (fixed_peak) peak = *fixed_peak;
  const double mse = err / static_cast<double>(count);
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(peak * peak / mse);
}

double field_rmse(const Image2D& truth, const Image2D& est, const std::optional<Image2D>& mask) {
  check_inputs(truth, est, mask, "field_rmse");
  const auto a = truth.pixels();
  const auto b = est.pixels();
  double err = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!selected(mask, i)) continue;
    const double diff = static_cast<double>(a[i]) - b[i];
    err += diff * diff;
    ++count;
  }
  if (count == 0) throw ValidationError("field_rmse: empty mask");
  return std::sqrt(err / static_cast<double>(count));
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / values.size();
  if (values.size() > 1 && std::isfinite(s.mean)) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (values.size() - 1));
  }
  return s;
}

std::vector<AggregateRow> EvalReport::aggregates() const {
  using Key = std::pair<std::string, std::string>;
  struct Columns {
    std::vector<double> psnr, nmse, rmse, fold;
  };
  std::map<Key, Columns> per_slice;
  std::map<Key, std::map<int, Columns>> per_subject;
  for (const auto& e : entries) {
    const Key key{e.method, e.contrast};
    for (Columns* c : {&per_slice[key], &per_subject[key][e.subject]}) {
      c->psnr.push_back(e.psnr_db);
      c->nmse.push_back(e.nmse);
      if (e.field_rmse_px) c->rmse.push_back(*e.field_rmse_px);
      if (e.nmse_fold_lines) c->fold.push_back(*e.nmse_fold_lines);
    }
  }

  auto make_row = [](const Key& key, const std::string& granularity, const Columns& c) {
    AggregateRow row{key.first, key.second, granularity, summarize(c.psnr), summarize(c.nmse), {}, {}};
    if (!c.rmse.empty()) row.field_rmse_px = summarize(c.rmse);
    if (!c.fold.empty()) row.nmse_fold_lines = summarize(c.fold);
    return row;
  };

  std::vector<AggregateRow> rows;
  for (const auto& [key, cols] : per_slice) rows.push_back(make_row(key, "slice", cols));
  for (const auto& [key, subjects] : per_subject) {
    Columns means;
    for (const auto& [subject, cols] : subjects) {
      means.psnr.push_back(summarize(cols.psnr).mean);
      means.nmse.push_back(summarize(cols.nmse).mean);
      if (!cols.rmse.empty()) means.rmse.push_back(summarize(cols.rmse).mean);
      if (!cols.fold.empty()) means.fold.push_back(summarize(cols.fold).mean);
    }
    rows.push_back(make_row(key, "subject", means));
  }
  return rows;
}

namespace {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string cell(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json summary_json(const Summary& s) {
  return json{{"mean", number(s.mean)}, {"sd", number(s.sd)}, {"count", s.count}};
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  json j;
  j["entries"] = json::array();
  for (const auto& e : report.entries) {
    json row{{"sample_id", e.sample_id}, {"subject", e.subject},        {"slice", e.slice},
             {"method", e.method},       {"contrast", e.contrast},      {"psnr_db", number(e.psnr_db)},
             {"nmse", number(e.nmse)}};
    if (e.field_rmse_px) row["field_rmse_px"] = number(*e.field_rmse_px);
    if (e.nmse_fold_lines) row["nmse_fold_lines"] = number(*e.nmse_fold_lines);
    j["entries"].push_back(row);
  }
  j["aggregates"] = json::array();
  for (const auto& a : report.aggregates()) {
    json row{{"method", a.method},
             {"contrast", a.contrast},
             {"granularity", a.granularity},
             {"psnr_db", summary_json(a.psnr_db)},
             {"nmse", summary_json(a.nmse)}};
    if (a.field_rmse_px) row["field_rmse_px"] = summary_json(*a.field_rmse_px);
    if (a.nmse_fold_lines) row["nmse_fold_lines"] = summary_json(*a.nmse_fold_lines);
    j["aggregates"].push_back(row);
  }
  j["failures"] = json::array();
  for (const auto& f : report.failures) {
    j["failures"].push_back(json{{"sample_id", f.sample_id}, {"method", f.method}, {"error", f.error}});
  }

  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "report.json").string());
    out << j.dump(2) << '\n';
  }
  std::ofstream csv(dir / "report.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (dir / "report.csv").string());
  csv << "sample_id,subject,slice,method,contrast,psnr_db,nmse,field_rmse_px,nmse_fold_lines\n";
  for (const auto& e : report.entries) {
    csv << e.sample_id << ',' << e.subject << ',' << e.slice << ',' << e.method << ',' << e.contrast << ','
        << cell(e.psnr_db) << ',' << cell(e.nmse) << ','
        << (e.field_rmse_px ? cell(*e.field_rmse_px) : "") << ','
        << (e.nmse_fold_lines ? cell(*e.nmse_fold_lines) : "") << '\n';
  }
}

}  // namespace epid

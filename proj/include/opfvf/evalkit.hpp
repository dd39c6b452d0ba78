#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "opfvf/dataset.hpp"
#include "opfvf/icnn.hpp"
#include "opfvf/jsonio.hpp"

namespace opfvf {

// Optimality-gap metrics: gap = |z_pred - z_true| / |z_true|, reported as a
// fraction here and as percent in rendered tables. The signed variant keeps
// the numerator sign: positive means over-estimation.

struct GapPair {
  double signed_gap = 0.0;
  double abs_gap = 0.0;
};

inline GapPair gap(double z_pred, double z_true) {
  if (z_true == 0.0) throw std::invalid_argument("gap: undefined for z_true == 0");
  const double s = (z_pred - z_true) / std::abs(z_true);
  return {s, std::abs(s)};
}

inline constexpr double kGapFloor = 1e-12;

// geometric mean with each entry floored at kGapFloor; log-sum keeps the
// product from under/overflowing
inline double geo_mean(const std::vector<double>& gaps) {
  if (gaps.empty()) throw std::invalid_argument("geo_mean: empty input");
  double log_sum = 0.0;
  for (double g : gaps) {
    if (g < 0.0) throw std::invalid_argument("geo_mean: gaps must be nonnegative");
    log_sum += std::log(std::max(g, kGapFloor));
  }
  return std::exp(log_sum / static_cast<double>(gaps.size()));
}

struct GapRecord {
  std::int64_t id = 0;
  double z_true = 0.0;
  double z_pred = 0.0;
  double signed_gap = 0.0;
  double abs_gap = 0.0;
  double total_load = 0.0;
};

struct EvalSummary {
  std::string model_label;
  std::string case_name;
  std::string formulation;
  std::size_t count = 0;
  double geo_mean_gap = 0.0; // fraction
  double worst_gap = 0.0;    // fraction
  double floor = kGapFloor;
};

struct EvalResult {
  EvalSummary summary;
  std::vector<GapRecord> records;
};

inline EvalResult evaluate(const IcnnModel& model, const Dataset& ds, Split split,
                           const std::string& model_label) {
  const auto samples = ds.split_view(split);
  if (samples.empty()) throw std::invalid_argument("evaluate: empty split");
  if (ds.input_dim() != static_cast<std::size_t>(model.cfg.input_dim))
    throw std::invalid_argument("evaluate: model input dimension does not match the dataset");

  EvalResult out;
  out.summary.model_label = model_label;
  out.summary.case_name = ds.case_name;
  out.summary.formulation = ds.formulation;
  std::vector<double> abs_gaps;
  for (const LabeledSample* s : samples) {
    const double z_pred = forward(model, s->input());
    const GapPair g = gap(z_pred, s->z);
    out.records.push_back({s->id, s->z, z_pred, g.signed_gap, g.abs_gap, s->total_load()});
    abs_gaps.push_back(g.abs_gap);
  }
  out.summary.count = abs_gaps.size();
  out.summary.geo_mean_gap = geo_mean(abs_gaps);
  out.summary.worst_gap = *std::max_element(abs_gaps.begin(), abs_gaps.end());
  return out;
}

// --- report rendering (Table-II-shaped markdown, CSV, SVG plots) ---

namespace eval_detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return std::string(buf);
}

inline std::string percent2(double fraction) { return fmt(100.0 * fraction, "%.2f"); }

struct AxisScale {
  double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
  double operator()(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

} // namespace eval_detail

inline std::string gaps_csv(const std::vector<GapRecord>& records) {
  std::string out = "id,z_true,z_pred,gap_signed,gap_abs,total_load\n";
  for (const auto& r : records) {
    out += std::to_string(r.id) + "," + format_double(r.z_true) + "," + format_double(r.z_pred) +
           "," + format_double(r.signed_gap) + "," + format_double(r.abs_gap) + "," +
           format_double(r.total_load) + "\n";
  }
  return out;
}

inline std::string report_markdown(const std::vector<EvalSummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("report: no summaries");
  std::string out = "# Value-function evaluation\n\n";
  out += "| System | OPF | Samples |";
  for (const auto& s : summaries) out += " Mean gap (%) " + s.model_label + " |";
  for (const auto& s : summaries) out += " Worst gap (%) " + s.model_label + " |";
  out += "\n|---|---|---|";
  for (std::size_t i = 0; i < 2 * summaries.size(); ++i) out += "---|";
  out += "\n| " + summaries.front().case_name + " | " + summaries.front().formulation + " | " +
         std::to_string(summaries.front().count) + " |";
  for (const auto& s : summaries) out += " " + eval_detail::percent2(s.geo_mean_gap) + " |";
  for (const auto& s : summaries) out += " " + eval_detail::percent2(s.worst_gap) + " |";
  out += "\n\nGaps below " + format_double(kGapFloor) +
         " are floored before entering the geometric mean.\n";
  return out;
}

// histogram of signed gaps, one series per model
inline std::string histogram_svg(const std::vector<std::vector<GapRecord>>& record_sets,
                                 const std::vector<std::string>& labels, int bins = 40) {
  using eval_detail::AxisScale;
  using eval_detail::fmt;
  if (record_sets.empty()) throw std::invalid_argument("histogram: no records");
  double lo = 0.0, hi = 0.0;
  for (const auto& records : record_sets)
    for (const auto& r : records) {
      lo = std::min(lo, r.signed_gap);
      hi = std::max(hi, r.signed_gap);
    }
  if (hi <= lo) hi = lo + 1e-9;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  std::vector<std::vector<int>> counts(record_sets.size(), std::vector<int>(bins, 0));
  int max_count = 1;
  for (std::size_t m = 0; m < record_sets.size(); ++m) {
    for (const auto& r : record_sets[m]) {
      int bin = static_cast<int>((r.signed_gap - lo) / (hi - lo) * bins);
      bin = std::clamp(bin, 0, bins - 1);
      max_count = std::max(max_count, ++counts[m][bin]);
    }
  }

  const double width = 640.0, height = 400.0, mleft = 50.0, mbot = 40.0, mtop = 20.0, mright = 20.0;
  AxisScale xs{lo, hi, mleft, width - mright};
  AxisScale ys{0.0, static_cast<double>(max_count), height - mbot, mtop};
  const char* colors[2] = {"#2b6cb0", "#dd6b20"};

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "viewBox=\"0 0 640 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + fmt(mleft) + "\" y1=\"" + fmt(height - mbot) + "\" x2=\"" +
         fmt(width - mright) + "\" y2=\"" + fmt(height - mbot) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(mleft) + "\" y1=\"" + fmt(mtop) + "\" x2=\"" + fmt(mleft) +
         "\" y2=\"" + fmt(height - mbot) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt(width / 2) + "\" y=\"" + fmt(height - 8.0) +
         "\" font-size=\"13\" text-anchor=\"middle\">signed relative gap</text>\n";
  for (std::size_t m = 0; m < record_sets.size(); ++m) {
    svg += "<g fill=\"" + std::string(colors[m % 2]) + "\" fill-opacity=\"0.55\" data-model=\"" +
           labels[m] + "\">\n";
    const double bw = (xs(hi) - xs(lo)) / bins;
    for (int b = 0; b < bins; ++b) {
      if (counts[m][b] == 0) continue;
      const double x = xs(lo) + b * bw;
      const double y = ys(counts[m][b]);
      svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(bw) +
             "\" height=\"" + fmt(ys(0.0) - y) + "\"><title>" + std::to_string(counts[m][b]) +
             "</title></rect>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// scatter of signed gap against total active load, one circle per record
inline std::string scatter_svg(const std::vector<std::vector<GapRecord>>& record_sets,
                               const std::vector<std::string>& labels) {
  using eval_detail::AxisScale;
  using eval_detail::fmt;
  if (record_sets.empty()) throw std::invalid_argument("scatter: no records");
  double xlo = 1e300, xhi = -1e300, ylo = 0.0, yhi = 0.0;
  for (const auto& records : record_sets)
    for (const auto& r : records) {
      xlo = std::min(xlo, r.total_load);
      xhi = std::max(xhi, r.total_load);
      ylo = std::min(ylo, r.signed_gap);
      yhi = std::max(yhi, r.signed_gap);
    }
  if (xhi <= xlo) xhi = xlo + 1e-9;
  if (yhi <= ylo) yhi = ylo + 1e-9;
  const double xpad = 0.05 * (xhi - xlo), ypad = 0.05 * (yhi - ylo);

  const double width = 640.0, height = 400.0, mleft = 50.0, mbot = 40.0, mtop = 20.0, mright = 20.0;
  AxisScale xs{xlo - xpad, xhi + xpad, mleft, width - mright};
  AxisScale ys{ylo - ypad, yhi + ypad, height - mbot, mtop};
  const char* colors[2] = {"#2b6cb0", "#dd6b20"};

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "viewBox=\"0 0 640 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + fmt(mleft) + "\" y1=\"" + fmt(height - mbot) + "\" x2=\"" +
         fmt(width - mright) + "\" y2=\"" + fmt(height - mbot) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(mleft) + "\" y1=\"" + fmt(mtop) + "\" x2=\"" + fmt(mleft) +
         "\" y2=\"" + fmt(height - mbot) + "\" stroke=\"black\"/>\n";
  if (ys(0.0) > mtop && ys(0.0) < height - mbot)
    svg += "<line x1=\"" + fmt(mleft) + "\" y1=\"" + fmt(ys(0.0)) + "\" x2=\"" +
           fmt(width - mright) + "\" y2=\"" + fmt(ys(0.0)) +
           "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  svg += "<text x=\"" + fmt(width / 2) + "\" y=\"" + fmt(height - 8.0) +
         "\" font-size=\"13\" text-anchor=\"middle\">total active load (p.u.)</text>\n";
  for (std::size_t m = 0; m < record_sets.size(); ++m) {
    svg += "<g fill=\"" + std::string(colors[m % 2]) + "\" fill-opacity=\"0.6\" data-model=\"" +
           labels[m] + "\">\n";
    for (const auto& r : record_sets[m])
      svg += "<circle cx=\"" + fmt(xs(r.total_load)) + "\" cy=\"" + fmt(ys(r.signed_gap)) +
             "\" r=\"2.2\"/>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// writes report.md, gaps.csv (plus gaps_<label>.csv for extra models),
// hist.svg and scatter.svg into out_dir
inline void render_report(const std::vector<EvalResult>& results, const std::string& out_dir) {
  if (results.empty()) throw std::invalid_argument("render_report: no results");
  std::vector<EvalSummary> summaries;
  std::vector<std::vector<GapRecord>> record_sets;
  std::vector<std::string> labels;
  for (const auto& r : results) {
    summaries.push_back(r.summary);
    record_sets.push_back(r.records);
    labels.push_back(r.summary.model_label);
  }
  write_text_file(out_dir + "/report.md", report_markdown(summaries));
  write_text_file(out_dir + "/gaps.csv", gaps_csv(record_sets.front()));
  for (std::size_t m = 1; m < record_sets.size(); ++m)
    write_text_file(out_dir + "/gaps_" + labels[m] + ".csv", gaps_csv(record_sets[m]));
  write_text_file(out_dir + "/hist.svg", histogram_svg(record_sets, labels));
  write_text_file(out_dir + "/scatter.svg", scatter_svg(record_sets, labels));
}

} // namespace opfvf

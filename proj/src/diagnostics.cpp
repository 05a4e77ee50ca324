#include "modeshift/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "modeshift/error.hpp"

namespace modeshift {

std::optional<double> standardized_mean_difference(double mean_treated, double mean_control,
                                                   double sd_treated) {
  if (!(sd_treated > 0.0) || !std::isfinite(sd_treated)) return std::nullopt;
  return 100.0 * (mean_treated - mean_control) / sd_treated;
}

std::vector<double> matching_weights(std::span<const bool> treated, const MatchSet& matches) {
  if (matches.matches.size() != treated.size()) {
    throw ValidationError("match set does not cover the sample");
  }
  std::vector<double> w(treated.size(), 1.0);
  for (const auto& m : matches.matches) {
    const double share = 1.0 / static_cast<double>(m.size());
    for (std::size_t j : m) w[j] += share;
  }
  return w;
}

std::vector<double> overlap_weights(std::span<const bool> treated,
                                    std::span<const double> scores) {
  if (scores.size() != treated.size()) throw ValidationError("one score per record needed");
  std::vector<double> w(scores.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = treated[i] ? 1.0 - scores[i] : scores[i];
  return w;
}

namespace {

std::optional<double> finite_or_empty(double p) {
  if (std::isnan(p)) return std::nullopt;
  return p;
}

}  // namespace

std::vector<BalanceRow> balance_table(const Dataset& data, std::span<const Field> fields,
                                      std::optional<std::span<const double>> after_weights) {
  if (after_weights && after_weights->size() != data.size()) {
    throw ValidationError("one weight per record needed");
  }
  std::vector<BalanceRow> rows;
  for (Field f : fields) {
    std::vector<double> vt, vc, wt, wc;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto v = field_value(data[i], f);
      if (!v) continue;
      const double w = after_weights ? (*after_weights)[i] : 1.0;
      if (data[i].informed) {
        vt.push_back(*v);
        wt.push_back(w);
      } else {
        vc.push_back(*v);
        wc.push_back(w);
      }
    }
    if (vt.empty()) throw EstimationError("treated group has no values for " +
                                          std::string(field_name(f)));
    if (vc.empty()) throw EstimationError("control group has no values for " +
                                          std::string(field_name(f)));
    BalanceRow row{};
    row.field = f;
    const auto mt = stats::moments(vt);
    const auto mc = stats::moments(vc);
    const double sd_t = std::sqrt(mt.variance);
    row.mean_treated_before = mt.mean;
    row.mean_control_before = mc.mean;
    row.smd_before = standardized_mean_difference(mt.mean, mc.mean, sd_t);
    row.smd_undefined = !row.smd_before.has_value();
    row.p_before = finite_or_empty(stats::welch_t_test(mt, mc).p_value);
    if (after_weights) {
      const auto at = stats::weighted_moments(vt, wt);
      const auto ac = stats::weighted_moments(vc, wc);
      row.mean_treated_after = at.mean;
      row.mean_control_after = ac.mean;
      row.smd_after = standardized_mean_difference(at.mean, ac.mean, sd_t);
      row.p_after = finite_or_empty(stats::welch_t_test(at, ac).p_value);
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", *v);
  return buffer;
}

}  // namespace

void write_balance_csv(std::ostream& out, const std::vector<BalanceRow>& rows) {
  out << "covariate,mean_treated_before,mean_control_before,smd_before,p_before,"
         "mean_treated_after,mean_control_after,smd_after,p_after,smd_undefined\n";
  for (const auto& r : rows) {
    out << field_name(r.field) << ',' << csv_number(r.mean_treated_before) << ','
        << csv_number(r.mean_control_before) << ',' << csv_number(r.smd_before) << ','
        << csv_number(r.p_before) << ',' << csv_number(r.mean_treated_after) << ','
        << csv_number(r.mean_control_after) << ',' << csv_number(r.smd_after) << ','
        << csv_number(r.p_after) << ',' << (r.smd_undefined ? 1 : 0) << '\n';
  }
}

OverlapReport overlap_report(std::span<const double> scores, std::span<const bool> treated,
                             int bins) {
  if (scores.size() != treated.size()) throw ValidationError("one score per record needed");
  if (bins < 1) throw ValidationError("need at least one histogram bin");
  OverlapReport report;
  report.bins.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    report.bins[static_cast<std::size_t>(b)].lower = static_cast<double>(b) / bins;
    report.bins[static_cast<std::size_t>(b)].upper = static_cast<double>(b + 1) / bins;
  }
  auto widen = [](std::optional<double>& lo, std::optional<double>& hi, double s) {
    lo = lo ? std::min(*lo, s) : s;
    hi = hi ? std::max(*hi, s) : s;
  };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ValidationError("propensity score outside [0, 1] at record " + std::to_string(i + 1));
    }
    if (s == 0.0 || s == 1.0) ++report.boundary_scores;
    const auto b = std::min(static_cast<std::size_t>(s * bins), report.bins.size() - 1);
    if (treated[i]) {
      ++report.bins[b].treated;
      widen(report.min_treated, report.max_treated, s);
    } else {
      ++report.bins[b].control;
      widen(report.min_control, report.max_control, s);
    }
  }
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    if (report.bins[b].single_group()) report.single_group_bins.push_back(b);
  }
  return report;
}

void write_histogram_svg(std::ostream& out, const std::string& title, double lower,
                         double upper, const std::vector<HistogramSeries>& series) {
  constexpr double kWidth = 640, kHeight = 360, kLeft = 50, kRight = 20, kTop = 40,
                   kBottom = 40;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  std::size_t bins = 0;
  double peak = 0.0;
  for (const auto& s : series) {
    bins = std::max(bins, s.counts.size());
    for (double c : s.counts) peak = std::max(peak, c);
  }
  if (peak <= 0.0) peak = 1.0;
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"640\" height=\"360\" fill=\"white\"/>\n";
  out << "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h);
  out << buf;
  if (bins > 0) {
    const double slot = plot_w / static_cast<double>(bins);
    const double bar = slot / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      for (std::size_t b = 0; b < s.counts.size(); ++b) {
        const double h = plot_h * s.counts[b] / peak;
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                      "fill=\"%s\" fill-opacity=\"0.8\"/>\n",
                      kLeft + b * slot + k * bar, kTop + plot_h - h, bar, h, s.color.c_str());
        out << buf;
      }
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/>"
                    "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                    kLeft + plot_w - 120, kTop + 14.0 * k, s.color.c_str(),
                    kLeft + plot_w - 105, kTop + 14.0 * k + 9, s.label.c_str());
      out << buf;
    }
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n"
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n"
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.0f</text>\n",
                kLeft, kTop + plot_h + 16, lower, kLeft + plot_w, kTop + plot_h + 16, upper,
                kLeft - 4, kTop + 4, peak);
  out << buf;
  out << "</svg>\n";
}

void write_overlap_svg(std::ostream& out, const OverlapReport& report) {
  HistogramSeries treated{"informed", "#d95f02", {}};
  HistogramSeries control{"uninformed", "#1b9e77", {}};
  for (const auto& b : report.bins) {
    treated.counts.push_back(static_cast<double>(b.treated));
    control.counts.push_back(static_cast<double>(b.control));
  }
  write_histogram_svg(out, "Propensity scores", 0.0, 1.0, {treated, control});
}

void write_cate_svg(std::ostream& out, std::span<const double> cates, int bins) {
  if (bins < 1) throw ValidationError("need at least one histogram bin");
  double lo = 0.0, hi = 0.0;
  if (!cates.empty()) {
    const auto [mn, mx] = std::minmax_element(cates.begin(), cates.end());
    lo = *mn;
    hi = *mx;
  }
  if (hi <= lo) hi = lo + 1e-9;
  HistogramSeries s{"CATE", "#7570b3", std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  for (double c : cates) {
    const auto b = std::min(static_cast<std::size_t>((c - lo) / (hi - lo) * bins),
                            s.counts.size() - 1);
    s.counts[b] += 1.0;
  }
  write_histogram_svg(out, "Conditional average treatment effects", lo, hi, {s});
}

StabilityResult subsample_stability_check(const Dataset& data, std::span<const bool> subgroup,
                                          const ForestConfig& config,
                                          const CausalFitOptions& options) {
  if (subgroup.size() != data.size()) throw ValidationError("one subgroup flag per record");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < subgroup.size(); ++i) {
    if (subgroup[i]) keep.push_back(i);
  }
  if (keep.empty()) throw ValidationError("stability subgroup is empty");

  const Dataset sub = data.retain(keep, "stability_subgroup");
  StabilityResult result;
  result.subgroup_size = keep.size();

  const CausalForestModel full = fit_causal_forest(data, config, options);
  CausalForestModel part;
  try {
    part = fit_causal_forest(sub, config, options);
  } catch (const EstimationError& e) {
    throw EstimationError(std::string("stability subgroup: ") + e.what());
  }
  result.cate_full = predict_cate(full, data);
  result.cate_subgroup = predict_cate(part, data);
  result.difference.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    result.difference[i] = result.cate_full[i] - result.cate_subgroup[i];
  }
  result.mean_difference = stats::mean(result.difference);
  result.test = stats::paired_t_test(result.difference);
  return result;
}

}  // namespace modeshift

#include "teachsim/report.hpp"

#include <json.hpp>

namespace teachsim {

namespace {

using nlohmann::ordered_json;

std::size_t usable_rows(const std::vector<TraceRow>& rows) {
  std::size_t n = 0;
  for (const TraceRow& r : rows) n += r.param_dist > 1e-12 ? 1 : 0;
  return n;
}

}  // namespace

std::string summarize_traces(const std::vector<Trace>& traces) {
  ordered_json doc;
  doc["threshold_fraction"] = kReportThreshold;
  doc["teachers"] = ordered_json::array();
  for (const Trace& t : traces) {
    ordered_json e;
    e["teacher"] = t.teacher;
    e["rows"] = t.rows.size();
    if (t.rows.empty()) {
      e["samples_to_threshold"] = nullptr;
      e["rate"] = nullptr;
      doc["teachers"].push_back(e);
      continue;
    }
    const auto hit = samples_to_threshold(t.rows, kReportThreshold);
    e["samples_to_threshold"] = hit ? ordered_json(*hit) : ordered_json(nullptr);

    std::vector<TraceRow> window = rows_until_fraction(t.rows, kReportThreshold);
    std::string fit_window = "to_threshold";
    if (usable_rows(window) < 10) {
      window = t.rows;
      fit_window = "full";
    }
    if (usable_rows(window) >= 10) {
      const ExpFit fit = exponential_fit(window);
      e["rate"] = fit.rate;
      e["fit_residual"] = fit.residual;
      e["fit_rows"] = fit.rows_used;
      e["fit_window"] = fit_window;
    } else {
      e["rate"] = nullptr;
    }
    e["initial_param_dist"] = t.rows.front().param_dist;
    e["final_param_dist"] = t.rows.back().param_dist;
    e["teaching_samples"] = t.rows.back().teaching_samples;
    e["query_samples"] = t.rows.back().query_samples;
    doc["teachers"].push_back(e);
  }
  return doc.dump(2) + "\n";
}

}  // namespace teachsim

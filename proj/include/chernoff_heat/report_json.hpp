#pragma once

// JSON and CSV serialization of reports. Wall times and timestamps live under
// a top-level "sidecar" key so the rest of a report is reproducible bit for bit.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "chernoff_heat/analysis.hpp"

namespace chernoff_heat {

using Json = nlohmann::ordered_json;

namespace detail {
/// NaN and infinities are not JSON numbers; they are written as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline Json to_json(const ConvergenceReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"label", row.label},
                    {"steps", row.steps},
                    {"mesh", row.mesh},
                    {"min_gap", row.min_gap},
                    {"sup_error", row.sup_error},
                    {"weighted_l2_error", row.l2_error}});
  }
  return {{"manifold", r.manifold},
          {"radii", {r.radii[0], r.radii[1]}},
          {"t", r.t},
          {"level", r.level},
          {"family", r.family},
          {"rows_evaluated", r.rows_evaluated},
          {"rows", std::move(rows)},
          {"estimated_order", detail::number_or_null(r.estimated_order)}};
}

inline Json timing_json(const ConvergenceReport& r) {
  Json t = Json::object();
  for (const auto& row : r.rows) t[row.label] = row.wall_time;
  return t;
}

inline Json to_json(const CheckReport& r) {
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json values = Json::array();
    for (double v : s.values) values.push_back(detail::number_or_null(v));
    series.push_back({{"name", s.name},
                      {"rule", {{"kind", to_string(s.rule.kind)}, {"a", s.rule.a}, {"b", s.rule.b}}},
                      {"values", std::move(values)},
                      {"skipped", s.skipped},
                      {"pass", s.pass}});
  }
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = v;
  return {{"check", r.check_name},
          {"manifold", r.manifold},
          {"sweep_name", r.sweep_name},
          {"sweep", r.sweep},
          {"parameters", std::move(params)},
          {"series", std::move(series)},
          {"notes", r.notes},
          {"pass", r.pass}};
}

inline void write_study_csv(std::ostream& os, const std::vector<ConvergenceReport>& reports) {
  os << "level,label,steps,mesh,min_gap,sup_error,weighted_l2_error,wall_time\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      os << r.level << ',' << row.label << ',' << row.steps << ',' << detail::csv_number(row.mesh) << ','
         << detail::csv_number(row.min_gap) << ',' << detail::csv_number(row.sup_error) << ','
         << detail::csv_number(row.l2_error) << ',' << detail::csv_number(row.wall_time) << '\n';
    }
  }
}

inline void write_checks_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  os << "check,manifold,series,sweep_name,sweep_value,value,skipped,rule,series_pass\n";
  for (const auto& r : reports) {
    for (const auto& s : r.series) {
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double sweep = i < r.sweep.size() ? r.sweep[i] : static_cast<double>(i);
        os << r.check_name << ',' << r.manifold << ',' << s.name << ',' << r.sweep_name << ','
           << detail::csv_number(sweep) << ',' << detail::csv_number(s.values[i]) << ','
           << (i < s.skipped.size() && s.skipped[i] ? 1 : 0) << ',' << to_string(s.rule.kind) << ','
           << (s.pass ? 1 : 0) << '\n';
      }
    }
  }
}

/// Copy of `report` without the "sidecar" key.
inline Json strip_sidecar(Json report) {
  report.erase("sidecar");
  return report;
}

}  // namespace chernoff_heat

#pragma once

#include <string>

#include "agcnn/sweep.hpp"

namespace agcnn {

enum class ReportFormat { csv, json };

// CSV columns: axis_value, mean_accuracy, std_accuracy, pct_change,
// n_replications, seed, with numbers printed to six decimal places.
// JSON mirrors the full report at double precision; its only volatile
// content is the single timestamp line.
void emit_report(const SweepReport& report, const std::string& path,
                 ReportFormat format);

nlohmann::json report_to_json(const SweepReport& report);
SweepReport report_from_json(const nlohmann::json& j);

SweepReport load_report_json(const std::string& path);

// Re-renders a stored JSON report as CSV (the `report` CLI command).
void render_report_csv(const std::string& json_path,
                       const std::string& csv_path);

}  // namespace agcnn

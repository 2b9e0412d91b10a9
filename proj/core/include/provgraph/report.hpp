#pragma once

#include <span>
#include <string>
#include <string_view>

#include "provgraph/metrics.hpp"

namespace provgraph {

enum class ReportFormat { kTextTable, kJson, kCsv };

std::string_view to_string(ReportFormat format);
// "text", "json" or "csv".
ReportFormat parse_report_format(std::string_view text);

// "100.00±0.00": mean and population std in percent, two decimals.
std::string format_percent(const MeanStd& value);

// TEXT_TABLE: one row per summary (dataset, precision, recall, F1).
// JSON: the summary object (an array for several summaries); reparses with
//   summary_from_json.
// CSV: header, one row per fold, then one aggregate row per summary.
std::string report(std::span<const CrossValidationSummary> summaries, ReportFormat format);
std::string report(const CrossValidationSummary& summary, ReportFormat format);

}  // namespace provgraph

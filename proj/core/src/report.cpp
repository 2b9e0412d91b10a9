#include "provgraph/report.hpp"

#include <algorithm>
#include <cstdio>

#include "provgraph/error.hpp"

namespace provgraph {

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::kTextTable: return "text";
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
  }
  return "text";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text" || text == "table" || text == "TEXT_TABLE") return ReportFormat::kTextTable;
  if (text == "json" || text == "JSON") return ReportFormat::kJson;
  if (text == "csv" || text == "CSV") return ReportFormat::kCsv;
  throw InvalidArgument("unknown report format '" + std::string(text) + "'");
}

namespace {

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * value);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // "±" is two bytes in UTF-8 but one column wide.
  std::size_t columns = 0;
  for (unsigned char c : s) columns += (c & 0xC0) != 0x80;
  if (columns < width) s.append(width - columns, ' ');
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_percent(const MeanStd& value) {
  return percent(value.mean) + "±" + percent(value.std);
}

std::string report(std::span<const CrossValidationSummary> summaries, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kTextTable: {
      std::size_t name_width = 7;
      for (const auto& s : summaries) name_width = std::max(name_width, s.name.size());
      name_width += 2;
      constexpr std::size_t kCol = 16;
      out += pad("dataset", name_width) + pad("precision", kCol) + pad("recall", kCol) + "f1\n";
      for (const auto& s : summaries) {
        out += pad(s.name, name_width) + pad(format_percent(s.precision), kCol) +
               pad(format_percent(s.recall), kCol) + format_percent(s.f1) + "\n";
      }
      break;
    }
    case ReportFormat::kJson: {
      nlohmann::json j;
      if (summaries.size() == 1) {
        j = to_json(summaries[0]);
      } else {
        j = nlohmann::json::array();
        for (const auto& s : summaries) j.push_back(to_json(s));
      }
      out = j.dump(2) + "\n";
      break;
    }
    case ReportFormat::kCsv: {
      out += "dataset,fold,precision,recall,f1,tp,fp,fn,tn\n";
      for (const auto& s : summaries) {
        const std::string name = csv_field(s.name);
        for (std::size_t i = 0; i < s.folds.size(); ++i) {
          const Metrics& m = s.folds[i];
          out += name + "," + std::to_string(i) + "," + percent(m.precision) + "," +
                 percent(m.recall) + "," + percent(m.f1) + "," + std::to_string(m.tp) + "," +
                 std::to_string(m.fp) + "," + std::to_string(m.fn) + "," + std::to_string(m.tn) +
                 "\n";
        }
        out += name + ",aggregate," + format_percent(s.precision) + "," +
               format_percent(s.recall) + "," + format_percent(s.f1) + ",,,,\n";
      }
      break;
    }
  }
  return out;
}

std::string report(const CrossValidationSummary& summary, ReportFormat format) {
  return report(std::span<const CrossValidationSummary>(&summary, 1), format);
}

}  // namespace provgraph

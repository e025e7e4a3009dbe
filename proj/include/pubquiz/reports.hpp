#pragma once

#include <string>

#include "pubquiz/analysis.hpp"
#include "pubquiz/results.hpp"

namespace pubquiz {

enum class ReportFormat { Table, Csv, Json, Markdown };

ReportFormat report_format_from_string(const std::string& s);

std::string render(const MetricsReport& report, ReportFormat format);
std::string render(const BiasReport& report, ReportFormat format);
std::string render(const TrajectoryReport& report, ReportFormat format);
std::string render(const ComparisonTable& table, ReportFormat format);

}  // namespace pubquiz

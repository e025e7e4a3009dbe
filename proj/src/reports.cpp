#include "pubquiz/reports.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

using ordered_json = nlohmann::ordered_json;

namespace pubquiz {

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "table")
        return ReportFormat::Table;
    if (s == "csv")
        return ReportFormat::Csv;
    if (s == "json")
        return ReportFormat::Json;
    if (s == "markdown" || s == "md")
        return ReportFormat::Markdown;
    throw std::invalid_argument("unknown format: \"" + s + "\"");
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

// Generic grid renderer: first column left-aligned, the rest right-aligned.
struct Grid {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string table() const {
        std::vector<std::size_t> widths(header.size());
        for (std::size_t c = 0; c < header.size(); ++c)
            widths[c] = header[c].size();
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                widths[c] = std::max(widths[c], row[c].size());
        std::ostringstream out;
        auto emit = [&](const std::vector<std::string>& row) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0)
                    out << "  ";
                if (c == 0) {
                    out << row[c] << std::string(widths[c] - row[c].size(), ' ');
                } else {
                    out << std::string(widths[c] - row[c].size(), ' ') << row[c];
                }
            }
            out << "\n";
        };
        emit(header);
        for (const auto& row : rows)
            emit(row);
        return out.str();
    }

    std::string csv() const {
        std::ostringstream out;
        auto emit = [&](const std::vector<std::string>& row) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0)
                    out << ",";
                out << csv_quote(row[c]);
            }
            out << "\n";
        };
        emit(header);
        for (const auto& row : rows)
            emit(row);
        return out.str();
    }

    std::string markdown() const {
        std::ostringstream out;
        auto emit = [&](const std::vector<std::string>& row) {
            out << "|";
            for (const auto& cell : row)
                out << " " << cell << " |";
            out << "\n";
        };
        emit(header);
        out << "|";
        for (std::size_t c = 0; c < header.size(); ++c)
            out << (c == 0 ? " --- |" : " ---: |");
        out << "\n";
        for (const auto& row : rows)
            emit(row);
        return out.str();
    }

    std::string in(ReportFormat format) const {
        switch (format) {
            case ReportFormat::Table: return table();
            case ReportFormat::Csv: return csv();
            case ReportFormat::Markdown: return markdown();
            case ReportFormat::Json: break;
        }
        throw std::logic_error("json handled separately");
    }
};

}  // namespace

std::string render(const MetricsReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json j = ordered_json::object();
        j["grouping"] = to_string(report.grouping);
        j["template_policy"] = report.template_policy == TemplatePolicy::PerTemplate
                                   ? "per-template"
                                   : "mean-over-templates";
        ordered_json rows = ordered_json::array();
        for (const auto& row : report.rows)
            rows.push_back({{"group", row.key}, {"accuracy", row.accuracy}, {"support", row.support}});
        j["rows"] = std::move(rows);
        return j.dump(2) + "\n";
    }
    Grid grid;
    grid.header = {to_string(report.grouping), "accuracy", "support"};
    for (const auto& row : report.rows)
        grid.rows.push_back({row.key, fixed(row.accuracy, 6), fixed(row.support, 1)});
    return grid.in(format);
}

std::string render(const BiasReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json j = ordered_json::object();
        j["relation"] = report.relation_id;
        j["reduction"] = report.reduction;
        j["answer_labels"] = report.answer_labels;
        j["per_template"] = report.per_template;
        if (!report.per_subject.empty())
            j["per_subject"] = report.per_subject;
        j["mean"] = report.mean;
        j["min"] = report.min;
        j["max"] = report.max;
        return j.dump(2) + "\n";
    }
    Grid grid;
    grid.header = {"answer", "mean", "min", "max"};
    for (std::size_t a = 0; a < report.answer_labels.size(); ++a)
        grid.rows.push_back({report.answer_labels[a], fixed(report.mean[a], 6),
                             fixed(report.min[a], 6), fixed(report.max[a], 6)});
    return grid.in(format);
}

std::string render(const TrajectoryReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json j = ordered_json::object();
        j["group"] = report.group_key;
        ordered_json points = ordered_json::array();
        for (const auto& p : report.points) {
            ordered_json pj = {{"position", p.position}, {"absolute", p.absolute}};
            if (p.relative)
                pj["relative"] = *p.relative;
            else
                pj["relative"] = nullptr;
            points.push_back(std::move(pj));
        }
        j["points"] = std::move(points);
        return j.dump(2) + "\n";
    }
    Grid grid;
    grid.header = {"position", "absolute", "relative (%)"};
    for (const auto& p : report.points)
        grid.rows.push_back({std::to_string(p.position), fixed(p.absolute, 6),
                             p.relative ? fixed(*p.relative, 2) : "undefined"});
    return grid.in(format);
}

std::string render(const ComparisonTable& table, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json j = ordered_json::object();
        j["dataset_mismatch"] = table.dataset_mismatch;
        j["columns"] = table.columns;
        ordered_json rows = ordered_json::array();
        for (const auto& row : table.rows) {
            ordered_json rj = ordered_json::object();
            rj["model"] = row.model;
            ordered_json vals = ordered_json::object();
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                if (row.values[c])
                    vals[table.columns[c]] = *row.values[c];
                else
                    vals[table.columns[c]] = nullptr;
            }
            rj["scores"] = std::move(vals);
            rows.push_back(std::move(rj));
        }
        j["rows"] = std::move(rows);
        return j.dump(2) + "\n";
    }
    Grid grid;
    grid.header.push_back("model");
    for (const auto& c : table.columns)
        grid.header.push_back(c);
    for (const auto& row : table.rows) {
        std::vector<std::string> cells{row.model};
        for (const auto& v : row.values)
            cells.push_back(v ? fixed(*v, 6) : "-");
        grid.rows.push_back(std::move(cells));
    }
    std::string out = grid.in(format);
    if (table.dataset_mismatch)
        out = "WARNING: results were evaluated on different datasets\n" + out;
    return out;
}

}  // namespace pubquiz

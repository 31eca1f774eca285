#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace riskplan {

/// Minimal CSV with RFC-style quoting: fields holding a comma, quote or
/// newline are wrapped in double quotes with quotes doubled. Every file this
/// project writes parses back losslessly through read_csv.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const CsvTable&) const = default;
};

std::string csv_escape(const std::string& field);
std::string format_double(double v);  // shortest round-trip decimal

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace riskplan

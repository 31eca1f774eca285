#include "riskplan/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "riskplan/types.hpp"

namespace riskplan {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

void write_row(std::ostream& os, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(row[i]);
    }
    os << '\n';
}

}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    for (const auto& row : table.rows)
        require(row.size() == table.columns.size(), "csv row width mismatch");
    std::ofstream os(path);
    if (!os) throw InvalidInputError("cannot open for writing: " + path.string());
    write_row(os, table.columns);
    for (const auto& row : table.rows) write_row(os, row);
    if (!os) throw InvalidInputError("write failed: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInputError("cannot open for reading: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            // ignored: this project writes \n, and \r\n input degrades to \n
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw InvalidInputError("unterminated quote in " + path.string());
    if (field_started || !record.empty()) end_record();

    CsvTable table;
    if (records.empty()) return table;
    table.columns = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.columns.size())
            throw InvalidInputError("ragged csv row in " + path.string());
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

}  // namespace riskplan

#include "psephos/csv.hpp"

#include <fstream>
#include <sstream>

#include "psephos/common.hpp"

namespace psephos {

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& field) {
    if (!needs_quoting(field)) {
        out += field;
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("csv: missing column '" + name + "'");
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        any_field = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw ParseError(origin + ":" + std::to_string(line) + ": stray quote mid-field");
                in_quotes = true;
                any_field = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                if (!record.empty() || !field.empty() || any_field) end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                any_field = true;
                break;
        }
    }
    if (in_quotes) throw ParseError(origin + ": unterminated quoted field");
    if (!record.empty() || !field.empty() || any_field) end_record();

    if (records.empty()) throw ParseError(origin + ": empty csv");

    CsvTable out;
    out.header = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != out.header.size()) {
            throw ParseError(origin + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(records[r].size()) + " fields, expected " +
                             std::to_string(out.header.size()));
        }
        out.rows.push_back(std::move(records[r]));
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open csv file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path.string());
}

std::string csv_to_string(const CsvTable& table) {
    std::string out;
    auto write_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            append_field(out, row[i]);
        }
        out.push_back('\n');
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
    return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write csv file: " + path.string());
    out << csv_to_string(table);
    if (!out) throw IoError("error writing csv file: " + path.string());
}

}  // namespace psephos

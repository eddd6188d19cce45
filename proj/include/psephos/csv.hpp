#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace psephos {

// Minimal RFC-4180-ish CSV support: quoted fields, embedded commas/quotes/
// newlines. Every artifact table in the pipeline goes through this, so the
// writer is deterministic: same rows in, same bytes out.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name; throws ParseError if absent.
    std::size_t col(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string csv_to_string(const CsvTable& table);

}  // namespace psephos

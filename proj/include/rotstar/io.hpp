#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rotstar::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits; "null" for non-finite values.
std::string format_double(double x);

/// JSON text with two-space indentation and 17-digit floats.
std::string dump_json(const Json& j);

/// Columns of equal length written as CSV with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    void add(std::string name, std::vector<double> values);
    std::string str() const;
};

/// Writes through a temporary file in the same directory, then renames.
/// Throws IOError.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace rotstar::io

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace stacklab {

/// Whole-file helpers; failures throw IoError carrying the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& value);

/// Fixed-point formatting with `decimals` digits, "-0.00" normalized to "0.00".
std::string format_fixed(double value, int decimals);

/// Shortest text that parses back to the same double.
std::string format_exact(double value);

}  // namespace stacklab

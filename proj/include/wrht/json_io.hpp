#pragma once

#include <json.hpp>
#include <string>

namespace wrht {

/// Deterministic JSON serialization: insertion-ordered keys, two-space
/// indent, floating-point numbers at 17 significant digits (so values
/// round-trip exactly and equal inputs produce byte-identical output).
/// Throws io_error on non-finite numbers, which have no JSON representation.
std::string json_to_string(const nlohmann::ordered_json& value);

/// Parses a JSON document; throws io_error with the parser's message on
/// malformed input.
nlohmann::ordered_json json_from_string(const std::string& text);

/// Whole-file helpers built on the two above.
nlohmann::ordered_json json_read_file(const std::string& path);
void json_write_file(const std::string& path, const nlohmann::ordered_json& value);

}  // namespace wrht

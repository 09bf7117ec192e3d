#include "wrht/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wrht/errors.hpp"

namespace wrht {

namespace {

void append_escaped(const std::string& s, std::string& out) {
  out += '"';
  for (const char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

void append_number(double v, std::string& out) {
  if (!std::isfinite(v)) throw io_error("cannot serialize a non-finite number to JSON");
  if (v == 0.0) {  // normalize -0 so reruns and round-trips stay byte-identical
    out += '0';
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void emit(const nlohmann::ordered_json& v, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
  switch (v.type()) {
    case nlohmann::ordered_json::value_t::null: out += "null"; return;
    case nlohmann::ordered_json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      return;
    case nlohmann::ordered_json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      return;
    case nlohmann::ordered_json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      return;
    case nlohmann::ordered_json::value_t::number_float:
      append_number(v.get<double>(), out);
      return;
    case nlohmann::ordered_json::value_t::string:
      append_escaped(v.get<std::string>(), out);
      return;
    case nlohmann::ordered_json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        out += pad_in;
        emit(v[i], out, depth + 1);
        if (i + 1 < v.size()) out += ',';
        out += '\n';
      }
      out += pad;
      out += ']';
      return;
    }
    case nlohmann::ordered_json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++i) {
        out += pad_in;
        append_escaped(it.key(), out);
        out += ": ";
        emit(it.value(), out, depth + 1);
        if (i + 1 < v.size()) out += ',';
        out += '\n';
      }
      out += pad;
      out += '}';
      return;
    }
    default:
      throw io_error("cannot serialize this JSON value type");
  }
}

}  // namespace

std::string json_to_string(const nlohmann::ordered_json& value) {
  std::string out;
  emit(value, out, 0);
  return out;
}

nlohmann::ordered_json json_from_string(const std::string& text) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error(std::string("malformed JSON: ") + e.what());
  }
}

nlohmann::ordered_json json_read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return json_from_string(ss.str());
}

void json_write_file(const std::string& path, const nlohmann::ordered_json& value) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << json_to_string(value) << '\n';
  if (!out) throw io_error("failed while writing '" + path + "'");
}

}  // namespace wrht

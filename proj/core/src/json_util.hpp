// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

// Private helpers shared by the file-format and pipeline sources.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtbias/error.hpp"

namespace mtbias::detail {

using Json = nlohmann::ordered_json;

/// Schema problem inside one record; callers attach file and line.
class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const Json& require(const Json& j, std::string_view key) {
  if (!j.is_object()) throw FieldError("record is not a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw FieldError("missing field '" + std::string(key) + "'");
  return *it;
}

inline std::string get_string(const Json& j, std::string_view key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw FieldError("field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline double get_number(const Json& j, std::string_view key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw FieldError("field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline bool get_bool(const Json& j, std::string_view key) {
  const Json& v = require(j, key);
  if (!v.is_boolean()) throw FieldError("field '" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

inline std::optional<double> get_optional_number(const Json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw FieldError("field '" + std::string(key) + "' must be a number");
  return it->get<double>();
}

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct JsonLine {
  std::size_t line = 0;   // 1-based
  std::string text;
};

/// Non-blank lines of a text file. Throws IoError when unreadable.
inline std::vector<JsonLine> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<JsonLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back({n, line});
  }
  return out;
}

/// Opens a file for writing, creating parent directories.
inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// Shortest round-trip decimal form, as nlohmann emits it.
inline std::string format_number(double v) { return Json(v).dump(); }

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace mtbias::detail

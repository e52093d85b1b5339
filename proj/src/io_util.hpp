// Copyright 2026 The latprune Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATPRUNE_IO_UTIL_HPP_
#define LATPRUNE_IO_UTIL_HPP_

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "latprune/error.hpp"

namespace latprune::detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

inline nlohmann::json parse_json(const std::string& text,
                                 const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<std::string_view> known,
                                const std::string& what) {
  if (!obj.is_object()) throw ValidationError(what + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) throw ValidationError(what + ": unknown field '" + key + "'");
  }
}

// Typed field access that reports schema errors as ValidationError.
template <typename T>
T get_field(const nlohmann::json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key)) {
    throw ValidationError(what + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(what + ": bad field '" + key + "': " + e.what());
  }
}

template <typename T>
T get_field_or(const nlohmann::json& obj, const char* key, T fallback,
               const std::string& what) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return get_field<T>(obj, key, what);
}

}  // namespace latprune::detail

#endif  // LATPRUNE_IO_UTIL_HPP_

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "berkson/error.hpp"

// Typed lookups that report the offending key path on failure.
namespace berkson::json_util {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::optional<double> optional_number(const nlohmann::json& j, const std::string& key,
                                             const std::string& path) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected a number");
  return j[key].get<double>();
}

inline double require_number(const nlohmann::json& j, const std::string& key, const std::string& path) {
  auto v = optional_number(j, key, path);
  if (!v) throw Error(ErrorCode::ConfigError, join(path, key) + ": required number is missing");
  return *v;
}

inline std::optional<std::int64_t> optional_int(const nlohmann::json& j, const std::string& key,
                                                const std::string& path) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number_integer()) {
    throw Error(ErrorCode::ConfigError, join(path, key) + ": expected an integer");
  }
  return j[key].get<std::int64_t>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const std::string& key,
                                                  const std::string& path) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected a string");
  return j[key].get<std::string>();
}

inline std::optional<std::vector<double>> optional_number_list(const nlohmann::json& j,
                                                               const std::string& key,
                                                               const std::string& path) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return std::nullopt;
  const auto& arr = j[key];
  if (!arr.is_array()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw Error(ErrorCode::ConfigError, join(path, key) + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(arr[i].get<double>());
  }
  return out;
}

}  // namespace berkson::json_util

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "berkson/convolution.hpp"
#include "berkson/function_class.hpp"

namespace berkson {

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip text form of a double.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of the canonical dump (object keys sorted), so key order does not matter.
std::string config_hash(const nlohmann::json& config);

std::string utc_timestamp();

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
};

/// "w,m,F" rows over the admissible region of F, `points` evenly spaced.
std::string convolve_curve_csv(const ConvolvedFunction& f, std::size_t points);

/// "w,F0,F1,gap" rows over `region`.
std::string gap_curve_csv(const ConvolvedFunction& f0, const ConvolvedFunction& f1, const Interval& region,
                          std::size_t points);

}  // namespace berkson

#include "berkson/io.hpp"

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include "berkson/error.hpp"

namespace berkson {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code dir_ec;
    std::filesystem::create_directories(path.parent_path(), dir_ec);
    if (dir_ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + dir_ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into place at " + path.string());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  // nlohmann::json objects are std::map backed, so dump() is already key-sorted.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"config_hash", config_hash}, {"seed", seed},         {"tool_version", tool_version},
                        {"started", started},         {"finished", finished}, {"outputs", outputs}};
}

std::string convolve_curve_csv(const ConvolvedFunction& f, std::size_t points) {
  if (points < 2) throw Error(ErrorCode::BadParams, "curve needs at least 2 points");
  const Interval region = f.admissible();
  std::string out = "w,m,F\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double w = i + 1 == points ? region.hi
                                     : region.lo + region.width() * static_cast<double>(i) /
                                                       static_cast<double>(points - 1);
    out += format_double(w) + ',' + format_double(f.source()(w)) + ',' + format_double(f(w)) + '\n';
  }
  return out;
}

std::string gap_curve_csv(const ConvolvedFunction& f0, const ConvolvedFunction& f1, const Interval& region,
                          std::size_t points) {
  if (points < 2) throw Error(ErrorCode::BadParams, "curve needs at least 2 points");
  std::string out = "w,F0,F1,gap\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double w = i + 1 == points ? region.hi
                                     : region.lo + region.width() * static_cast<double>(i) /
                                                       static_cast<double>(points - 1);
    const double a = f0.eval_unchecked(w);
    const double b = f1.eval_unchecked(w);
    out += format_double(w) + ',' + format_double(a) + ',' + format_double(b) + ',' + format_double(std::fabs(b - a)) +
           '\n';
  }
  return out;
}

}  // namespace berkson

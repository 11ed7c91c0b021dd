#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "berkson/error.hpp"
#include "berkson/io.hpp"

using namespace berkson;
namespace fs = std::filesystem;

TEST_CASE("atomic writes replace the target and leave no temp files") {
  const fs::path dir = fs::temp_directory_path() / "berkson_io_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path target = dir / "out.txt";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second\n");
  std::ifstream in(target);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "second\n");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);

  try {
    write_file_atomic(dir / "out.txt" / "x.txt", "x");  // parent is a regular file
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  fs::remove_all(dir);
}

TEST_CASE("config hash ignores key order") {
  const nlohmann::json a = nlohmann::json::parse(R"({"k": 2, "c": 0.25, "n": [1, 2, 3]})");
  const nlohmann::json b = nlohmann::json::parse(R"({"n": [1, 2, 3], "c": 0.25, "k": 2})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(nlohmann::json::parse(R"({"k": 3, "c": 0.25, "n": [1, 2, 3]})")));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("curve csv") {
  MarginParams p;
  p.k = 1;
  p.c = 0.25;
  p.sigma = 0.2;
  const ConvolvedFunction F = convolve(make_power(p, 0.0), 0.2);
  const std::string csv = convolve_curve_csv(F, 5);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "w,m,F");
  std::getline(in, line);
  CHECK(line.rfind("-0.8,0.25,", 0) == 0);
  CHECK(std::stod(line.substr(10)) == doctest::Approx(0.25).epsilon(1e-14));
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
}

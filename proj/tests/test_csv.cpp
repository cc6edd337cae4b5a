#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hflsim/csv.hpp"

using namespace hflsim;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "hflsim_csv";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("emit_csv: empty row set writes a header-only newline-terminated file") {
  auto path = tmp_path("empty.csv");
  emit_csv(path, {"a", "b"}, {});
  CHECK(slurp(path) == "a,b\n");
}

TEST_CASE("emit_csv: doubles round-trip bit-exactly through 17 significant digits") {
  auto path = tmp_path("roundtrip.csv");
  std::vector<double> values = {1.0 / 3.0, 2.2250738585072014e-308, 0.1, 12345.6789012345678,
                                -7.0e101, 1e-9};
  std::vector<std::vector<std::string>> rows;
  for (double v : values) rows.push_back({fmt_double(v)});
  emit_csv(path, {"x"}, rows);
  auto file = read_csv(path);
  REQUIRE(file.rows.size() == values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    double parsed = std::strtod(file.rows[i][0].c_str(), nullptr);
    CHECK(parsed == values[i]);
  }
}

TEST_CASE("emit_csv: identical content yields identical bytes") {
  auto p1 = tmp_path("det1.csv"), p2 = tmp_path("det2.csv");
  std::vector<std::vector<std::string>> rows = {{fmt_double(1.0 / 7.0), "x"},
                                                {fmt_double(2.0 / 7.0), "y"}};
  emit_csv(p1, {"v", "tag"}, rows);
  emit_csv(p2, {"v", "tag"}, rows);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("emit_csv: row width mismatches are rejected") {
  CHECK_THROWS_AS(emit_csv(tmp_path("bad.csv"), {"a", "b"}, {{"only-one"}}), std::logic_error);
}

TEST_CASE("emit_csv: unwritable path surfaces the path in the error") {
  CHECK_THROWS_WITH_AS(emit_csv("/nonexistent-dir/x.csv", {"a"}, {}),
                       doctest::Contains("/nonexistent-dir/x.csv"), std::runtime_error);
}

#include <doctest.h>

#include <cmath>
#include <limits>

#include "librotor/error.hpp"
#include "librotor/io.hpp"
#include "test_support.hpp"

using namespace librotor;
using testing::TempDir;

namespace {

PsdTrace small_trace() {
  PsdTrace t;
  for (int i = 0; i < 20; ++i) {
    t.freq_hz.push_back(4e6 + 1234.5678901234567 * i);
    t.values.push_back(1.0 / 3.0 + 1e-7 * i * i);
  }
  t.meta.detuning_hz = 1.042e6;
  t.meta.het_freq_hz = 4.99814e6;
  t.meta.averages = 100;
  t.meta.seed = 123456789012345ULL;
  t.meta.channel = Channel::cavity_z;
  t.meta.orientation = SidebandOrientation::lo_red;
  t.meta.note = "unit";
  t.meta.modes = {{ModeLabel::beta, 978e3}};
  return t;
}

std::string body(int bad_line) {
  std::string s = std::string(io::kPsdHeader) + "\n" + std::string(io::kPsdColumns) + "\n";
  for (int i = 3; i < 3 + 20; ++i) {
    if (i == bad_line)
      s += "1e6,abc\n";
    else
      s += std::to_string(1e6 + i) + ",1.0\n";
  }
  return s;
}

}  // namespace

TEST_CASE("trace files round-trip exactly") {
  TempDir dir("io");
  const PsdTrace t = small_trace();
  io::write_trace(dir / "trace_000.csv", t);
  CHECK(std::filesystem::exists(dir / "trace_000.meta.json"));
  const PsdTrace back = io::read_trace(dir / "trace_000.csv");
  CHECK(back.freq_hz == t.freq_hz);
  CHECK(back.values == t.values);
  CHECK(io::meta_to_json(back.meta) == io::meta_to_json(t.meta));
}

TEST_CASE("a trace without a sidecar has unknown averages") {
  TempDir dir("io");
  io::write_file_atomic(dir / "bare.csv", io::psd_csv(small_trace()));
  CHECK(io::read_trace(dir / "bare.csv").meta.averages == 0);
}

TEST_CASE("CSV errors name the file and line") {
  CHECK_THROWS_WITH_AS(io::parse_psd_csv(body(7), "x.csv"), "x.csv:7: malformed PSD value", InputError);
  CHECK_THROWS_WITH_AS(io::parse_psd_csv("freq,psd\n", "y.csv"), doctest::Contains("y.csv:1: expected header"),
                       InputError);
  std::string three = body(0);
  three.insert(three.find("\n", 40) + 1, "1,2,3\n");
  CHECK_THROWS_WITH_AS(io::parse_psd_csv(three, "z.csv"), doctest::Contains("two comma-separated fields"),
                       InputError);
  CHECK_THROWS_WITH_AS(io::parse_psd_csv(std::string(io::kPsdHeader) + "\n", "w.csv"),
                       doctest::Contains("w.csv"), InputError);
  std::string nan = body(0);
  nan.replace(nan.find(",1.0", 40), 4, ",nan");
  CHECK_THROWS_AS(io::parse_psd_csv(nan, "n.csv"), InputError);
}

TEST_CASE("CSV content is validated") {
  std::string s = std::string(io::kPsdHeader) + "\n" + std::string(io::kPsdColumns) + "\n";
  for (int i = 0; i < 20; ++i) s += std::to_string(1e6 - i) + ",1\n";
  CHECK_THROWS_AS(io::parse_psd_csv(s, "dec.csv"), InputError);
  CHECK_NOTHROW(io::parse_psd_csv(body(0), "ok.csv"));
}

TEST_CASE("metadata rejects unknown keys") {
  io::json j = io::meta_to_json(small_trace().meta);
  j["detunning_hz"] = 1.0;
  CHECK_THROWS_WITH_AS(io::meta_from_json(j, "m.json"), "m.json: detunning_hz: unknown key", InputError);
  CHECK_THROWS_AS(io::meta_from_json(io::json::array(), "a.json"), InputError);
  io::json bad = io::meta_to_json(small_trace().meta);
  bad["channel"] = "sideways";
  CHECK_THROWS_AS(io::meta_from_json(bad, "c.json"), InputError);
}

TEST_CASE("JSON printing") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(1.0) == "1.0");
  const io::json j = {{"b", 1.0 / 3.0}, {"a", {1, 2}}, {"n", std::numeric_limits<double>::quiet_NaN()}};
  const std::string s = io::dump_json(j);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("0.33333333333333331") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);
  CHECK(s.find("\n  \"a\"") != std::string::npos);
  CHECK(io::json::parse(s)["b"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("SHA-256") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  TempDir dir("io");
  io::write_file_atomic(dir / "f.txt", "abc");
  CHECK(io::sha256_file(dir / "f.txt") == io::sha256_hex("abc"));
}

TEST_CASE("atomic writes replace whole files") {
  TempDir dir("io");
  io::write_file_atomic(dir / "f.txt", "first version, longer");
  io::write_file_atomic(dir / "f.txt", "second");
  CHECK(io::read_file(dir / "f.txt") == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), InputError);
  io::write_file_atomic(dir / "sub" / "dir" / "f.txt", "x");
  CHECK(io::read_file(dir / "sub" / "dir" / "f.txt") == "x");
  CHECK_THROWS(io::write_file_atomic(dir / "f.txt" / "below.txt", "x"));
}

TEST_CASE("plot CSV") {
  const double f[] = {1.0, 2.0};
  const double d[] = {3.0, 4.0};
  const double m[] = {2.5, 4.5};
  const double r[] = {0.5, -0.5};
  CHECK(io::plot_csv(f, d, m, r) == "freq_hz,data,fit,residual\n1,3,2.5,0.5\n2,4,4.5,-0.5\n");
}

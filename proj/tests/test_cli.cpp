#include <doctest.h>

#include <cmath>
#include <sstream>

#include "librotor/cli.hpp"
#include "librotor/config.hpp"
#include "librotor/io.hpp"
#include "test_support.hpp"

using namespace librotor;
using testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

io::json read_json(const std::filesystem::path& p) { return io::json::parse(io::read_file(p)); }

std::filesystem::path write_config(const TempDir& dir, const RunConfig& c, const std::string& name = "config.json") {
  const auto p = dir / name;
  io::write_file_atomic(p, io::dump_json(config_to_json(c)));
  return p;
}

// Fewer detunings than the replica to keep the command-line tests quick.
RunConfig short_scan(std::vector<double> detunings = {1030e3, 1042e3, 1060e3, 1090e3, 1150e3}) {
  RunConfig c = run_config_from_scenario(replica_1d());
  c.synthesis.detunings_hz = std::move(detunings);
  return c;
}

}  // namespace

TEST_CASE("help and version") {
  const Run help = run({"--help"});
  CHECK(help.code == kExitOk);
  for (const char* sub : {"simulate", "analyze", "scanfit", "classify"}) CHECK(help.out.find(sub) != std::string::npos);
  const Run version = run({"--version"});
  CHECK(version.code == kExitOk);
  CHECK(version.out.find("librotor 1.0.0") != std::string::npos);
  CHECK(run({"analyze", "--help"}).code == kExitOk);
  CHECK(run({"simulate", "--version"}).out.find("1.0.0") != std::string::npos);
}

TEST_CASE("bad arguments exit 2") {
  CHECK(run({}).code == kExitInput);
  CHECK(run({"simulate"}).code == kExitInput);
  CHECK(run({"frobnicate"}).code == kExitInput);
  CHECK(run({"analyze", "--traces", "x", "--out", "y", "--method", "guess"}).code == kExitInput);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  TempDir dir("cli");
  const auto cfg = write_config(dir, short_scan());
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "7"}).code == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--seed", "7"}).code == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "8"}).code == kExitOk);
  for (const char* f : {"trace_000.csv", "trace_004.csv", "trace_002.meta.json", "shot.csv", "dark.csv"})
    CHECK(io::read_file(dir / "a" / f) == io::read_file(dir / "b" / f));
  CHECK(io::read_file(dir / "a" / "trace_000.csv") != io::read_file(dir / "c" / "trace_000.csv"));
  const io::json ra = read_json(dir / "a" / "run_record.json");
  const io::json rb = read_json(dir / "b" / "run_record.json");
  CHECK(ra.contains("timestamps"));
  CHECK(io::dump_json(without_timestamps(ra)) == io::dump_json(without_timestamps(rb)));
  CHECK(ra["schema"] == "librotor-run/1");
  CHECK(ra["tool_version"] == "1.0.0");
  CHECK(ra["config"]["synthesis"]["seed"] == 7);
  CHECK(ra["summary"]["traces"] == 5);
  for (const io::json& o : ra["outputs"])
    CHECK(o["sha256"] == io::sha256_file(dir / "a" / o["path"].get<std::string>()));
}

TEST_CASE("a detuning without cooling is flagged, not fatal") {
  TempDir dir("cli");
  const auto cfg = write_config(dir, short_scan({0.0, 1042e3}));
  const Run r = run({"simulate", "--config", cfg.string(), "--out", (dir / "s").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("warning: trace_000.csv") != std::string::npos);
  CHECK(read_json(dir / "s" / "trace_000.meta.json")["valid"] == false);
  CHECK(read_json(dir / "s" / "run_record.json")["summary"]["invalid_traces"] == 1);
}

TEST_CASE("invalid configs exit 2 with the field path") {
  TempDir dir("cli");
  io::json j = config_to_json(short_scan());
  j["optics"]["kappa_hz"] = 0.0;
  io::write_file_atomic(dir / "bad.json", io::dump_json(j));
  const Run r = run({"simulate", "--config", (dir / "bad.json").string(), "--out", (dir / "s").string()});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("config.optics.kappa_hz") != std::string::npos);
  CHECK(run({"simulate", "--config", (dir / "missing.json").string(), "--out", (dir / "s").string()}).code ==
        kExitInput);
}

TEST_CASE("analyze recovers the simulated occupations") {
  TempDir dir("cli");
  const auto cfg = write_config(dir, short_scan());
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "s").string(), "--seed", "11"}).code == kExitOk);
  const auto out = dir / "results.json";
  const Run r = run({"analyze", "--traces", (dir / "s" / "trace_*.csv").string(), "--shot",
                     (dir / "s" / "shot.csv").string(), "--dark", (dir / "s" / "dark.csv").string(), "--out",
                     out.string()});
  REQUIRE(r.code == kExitOk);
  const io::json res = read_json(out);
  const io::json truth = read_json(dir / "s" / "run_record.json")["summary"]["truth"];
  CHECK(res["schema"] == "librotor-results/1");
  CHECK(res["calibration"] == "shot_dark");
  REQUIRE(res["traces"].size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const io::json& occ = res["traces"][i]["modes"][0]["occupation"];
    const double n_true = truth[i]["modes"][0]["n"].get<double>();
    CHECK(std::abs(occ["n_raw"].get<double>() - n_true) <= 3.0 * occ["n_err"].get<double>());
    CHECK(std::filesystem::exists(dir / res["traces"][i]["modes"][0]["plot"].get<std::string>()));
  }
  CHECK(std::filesystem::exists(dir / "results.json.record.json"));

  SUBCASE("difference-calibrated method") {
    const Run d = run({"analyze", "--traces", (dir / "s" / "trace_*.csv").string(), "--shot",
                       (dir / "s" / "shot.csv").string(), "--dark", (dir / "s" / "dark.csv").string(), "--out",
                       (dir / "diffcal.json").string(), "--method", "diffcal"});
    CHECK(d.code == kExitOk);
    CHECK(read_json(dir / "diffcal.json")["method"] == "diffcal");
  }
  SUBCASE("missing calibration warns and assumes a flat response") {
    const Run f = run({"analyze", "--traces", (dir / "s" / "trace_001.csv").string(), "--out",
                       (dir / "flat.json").string()});
    CHECK(f.code == kExitOk);
    CHECK(f.err.find("warning: no shot/dark calibration") != std::string::npos);
    CHECK(read_json(dir / "flat.json")["calibration"] == "flat");
  }
}

TEST_CASE("analyze input errors exit 2") {
  TempDir dir("cli");
  io::write_file_atomic(dir / "broken.csv", std::string(io::kPsdHeader) + "\nfreq_hz,psd\n1,2\n3,x\n");
  const Run r = run({"analyze", "--traces", (dir / "broken.csv").string(), "--out", (dir / "r.json").string()});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("broken.csv:4:") != std::string::npos);
  CHECK(run({"analyze", "--traces", (dir / "none_*.csv").string(), "--out", (dir / "r.json").string()}).code ==
        kExitInput);
}

TEST_CASE("scanfit on the dumbbell replica assigns modes to their cavity channels" * doctest::timeout(300)) {
  TempDir dir("cli");
  const auto cfg = write_config(dir, run_config_from_scenario(replica_2d()));
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "s").string()}).code == kExitOk);
  const Run r = run({"scanfit", "--traces", (dir / "s").string(), "--out", (dir / "fit.json").string()});
  REQUIRE(r.code == kExitOk);
  const io::json fit = read_json(dir / "fit.json");
  CHECK(fit["schema"] == "librotor-scanfit/1");
  REQUIRE(fit["modes"].size() == 2);
  for (const io::json& m : fit["modes"]) {
    const std::string expected = m["label"] == "alpha" ? "cavity_y" : "cavity_z";
    REQUIRE(m["channels"].size() == 1);
    CHECK(m["channels"][0] == expected);
  }
  for (const io::json& t : fit["traces"]) {
    const std::string expected = t["label"] == "alpha" ? "cavity_y" : "cavity_z";
    CHECK(t["channel"] == expected);
  }
}

TEST_CASE("scanfit with too few traces exits 3") {
  TempDir dir("cli");
  const auto cfg = write_config(dir, short_scan({1030e3, 1042e3, 1060e3}));
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "s").string()}).code == kExitOk);
  const Run r = run({"scanfit", "--traces", (dir / "s").string(), "--out", (dir / "fit.json").string()});
  CHECK(r.code == kExitAnalysis);
  CHECK(r.err.find("underdetermined scan") != std::string::npos);
}

TEST_CASE("classify labels particles from damping anisotropy") {
  TempDir dir("cli");
  const std::string input = std::string(LIBROTOR_TEST_DATA) + "/damping_anisotropy.csv";
  const Run r = run({"classify", "--input", input, "--out", (dir / "shapes.json").string()});
  REQUIRE(r.code == kExitOk);
  const io::json res = read_json(dir / "shapes.json");
  CHECK(res["schema"] == "librotor-classification/1");
  std::map<std::string, std::string> got;
  for (const io::json& row : res["rows"]) got[row["label"].get<std::string>()] = row["geometry"].get<std::string>();
  CHECK(got["sphere"] == "sphere");
  CHECK(got["ii"] == "dumbbell");
  CHECK(got["iii"] == "dumbbell");
  CHECK(got["v"] == "dumbbell");
  CHECK(got["iv"] == "trimer");
  CHECK(got["vi"] == "trimer");
  CHECK(got["i"] == "unclassified");
  CHECK(res["summary"]["counts"]["dumbbell"] == 3);
}

TEST_CASE("classify input errors") {
  TempDir dir("cli");
  io::write_file_atomic(dir / "empty.csv", "# nothing here\n");
  CHECK(run({"classify", "--input", (dir / "empty.csv").string(), "--out", (dir / "o.json").string()}).code ==
        kExitInput);
  io::write_file_atomic(dir / "zero.csv", "0,0.1,1.0,0.1\n1.0,0.01,1.27,0.01\n");
  REQUIRE(run({"classify", "--input", (dir / "zero.csv").string(), "--out", (dir / "o.json").string()}).code ==
          kExitOk);
  const io::json res = read_json(dir / "o.json");
  CHECK(res["rows"][0]["error"] == "gamma_x must be > 0");
  CHECK(res["rows"][1]["geometry"] == "dumbbell");
  io::write_file_atomic(dir / "short.csv", "1.0,0.1,1.0\n");
  const Run r = run({"classify", "--input", (dir / "short.csv").string(), "--out", (dir / "o.json").string()});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("short.csv:1") != std::string::npos);
}

TEST_CASE("scenario writes a loadable config") {
  TempDir dir("cli");
  REQUIRE(run({"scenario", "--name", "replica_2d", "--out", (dir / "c.json").string()}).code == kExitOk);
  CHECK(load_config(dir / "c.json").modes.size() == 2);
  CHECK(run({"scenario", "--name", "nope", "--out", (dir / "c.json").string()}).code == kExitInput);
}

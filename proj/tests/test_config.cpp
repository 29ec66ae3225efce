#include <doctest.h>

#include "librotor/config.hpp"
#include "librotor/error.hpp"
#include "librotor/units.hpp"
#include "test_support.hpp"

using namespace librotor;

namespace {

io::json replica_json() { return config_to_json(run_config_from_scenario(replica_1d())); }

}  // namespace

TEST_CASE("config round trip is exact") {
  for (const Scenario& sc : {replica_1d(), replica_2d()}) {
    const io::json j = config_to_json(run_config_from_scenario(sc));
    const io::json again = config_to_json(config_from_json(j));
    CHECK(io::dump_json(again) == io::dump_json(j));
  }
}

TEST_CASE("config file round trip") {
  testing::TempDir dir("config");
  const io::json j = replica_json();
  io::write_file_atomic(dir / "c.json", io::dump_json(j));
  CHECK(config_to_json(load_config(dir / "c.json")) == j);
  io::write_file_atomic(dir / "bad.json", "{ not json");
  CHECK_THROWS_WITH_AS(load_config(dir / "bad.json"), doctest::Contains("bad.json"), InputError);
}

TEST_CASE("unknown and missing keys name their path") {
  io::json j = replica_json();
  j["optics"]["kapa_hz"] = 1.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.optics.kapa_hz: unknown key", InputError);
  j = replica_json();
  j["optics"].erase("kappa_hz");
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.optics.kappa_hz: required", InputError);
  j = replica_json();
  j.erase("rotor");
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.rotor: required", InputError);
  j = replica_json();
  j["modes"][0]["gamma_thermal"] = "lots";
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.modes[0].gamma_thermal: must be a number", InputError);
  j = replica_json();
  j["surprise"] = true;
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.surprise: unknown key", InputError);
}

TEST_CASE("validation names the offending field") {
  io::json j = replica_json();
  j["optics"]["kappa_hz"] = -1.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.optics.kappa_hz: must be > 0", InputError);
  j = replica_json();
  j["synthesis"]["averages"] = 0u;
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.synthesis.averages: must be >= 1", InputError);
  j = replica_json();
  j["modes"][0]["area_scale_c"] = 0.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.modes[0].area_scale_c: must be > 0", InputError);
  j = replica_json();
  j["modes"].push_back(j["modes"][0]);
  CHECK_THROWS_WITH_AS(config_from_json(j), "config.modes[1].label: duplicate mode", InputError);
  j = replica_json();
  j["rotor"]["inertia_a"] = -1.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("config.rotor"), InputError);
  j = replica_json();
  j["analysis"]["method"] = "guess";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("config.analysis.method"), InputError);
}

TEST_CASE("boundary Hz become internal rad/s") {
  const RunConfig c = config_from_json(replica_json());
  const OpticalSetup o = make_optics(c);
  CHECK(o.kappa == doctest::Approx(2.0 * kPi * c.optics.kappa_hz).epsilon(1e-15));
  CHECK(o.detuning == doctest::Approx(2.0 * kPi * 1042e3).epsilon(1e-15));
  const ScanConfig s = make_scan_config(c);
  REQUIRE(s.modes.size() == 1);
  CHECK(rad_to_hz(s.modes[0].mode.omega) == doctest::Approx(1030e3).epsilon(1e-6));
  CHECK(s.modes[0].mode.heating_rate() == doctest::Approx(6800.0).epsilon(1e-12));
  CHECK(scan_detunings_hz(c).size() == 12);
}

TEST_CASE("complex fields accept a bare number") {
  io::json j = replica_json();
  j["optics"]["e_tw0"] = 2.5e6;
  CHECK(config_from_json(j).optics.e_tw0 == std::complex<double>(2.5e6, 0.0));
  j["optics"]["e_tw0"] = io::json::array({1.0});
  CHECK_THROWS_AS(config_from_json(j), InputError);
}

TEST_CASE("optional sections take defaults") {
  io::json j = replica_json();
  j.erase("noise");
  j.erase("analysis");
  j.erase("synthesis");
  j.erase("response");
  const RunConfig c = config_from_json(j);
  CHECK(c.noise.shot_level == 1.0);
  CHECK(c.analysis.method == OccupationMethod::ratio);
  CHECK(scan_detunings_hz(c) == std::vector<double>{c.optics.detuning_hz});
}

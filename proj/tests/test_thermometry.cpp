#include <doctest.h>

#include <cmath>

#include "librotor/error.hpp"
#include "librotor/scenarios.hpp"
#include "librotor/thermometry.hpp"
#include "test_support.hpp"

using namespace librotor;
using testing::pair_trace;
using testing::PairSetup;

namespace {

PsdTrace constant_trace(double v, TraceKind kind) {
  PsdTrace t;
  t.freq_hz = uniform_grid(4e6, 6e6, 400);
  t.values.assign(400, v);
  t.meta.kind = kind;
  return t;
}

TraceOccupation extract(const PsdTrace& t, const PairSetup& s, ExtractOptions o = {}) {
  return extract_occupation(t, {}, s.mode_hz, o);
}

}  // namespace

TEST_CASE("response calibration") {
  const DetectorResponse r = calibrate_response(constant_trace(2.0, TraceKind::shot), constant_trace(1.0, TraceKind::dark));
  for (double g : r.gain) CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(calibrate_response(constant_trace(1.0, TraceKind::shot), constant_trace(1.0, TraceKind::dark)),
                       "calibration traces inconsistent", AnalysisError);
  PsdTrace other = constant_trace(1.0, TraceKind::dark);
  other.freq_hz[5] += 1.0;
  CHECK_THROWS_AS(calibrate_response(constant_trace(2.0, TraceKind::shot), other), InputError);
}

TEST_CASE("normalisation divides by the gain") {
  PsdTrace t = constant_trace(3.0, TraceKind::signal);
  const DetectorResponse r{{hz_to_rad(4e6), hz_to_rad(6e6)}, {1.5, 1.5}};
  for (double v : normalize(t, r).values) CHECK(v == doctest::Approx(2.0));
  CHECK(normalize(t, {}).values == t.values);
}

TEST_CASE("occupation from areas") {
  SUBCASE("ratio method") {
    const OccupationResult r = occupation_from_areas({1.21, 0.21, 1e-6, 1e-6, 0.0}, OccupationMethod::ratio);
    CHECK(r.n == doctest::Approx(0.21).epsilon(1e-12));
    CHECK(r.ground_state_prob == doctest::Approx(1.0 / 1.21).epsilon(1e-12));
    CHECK(r.n_err > 0.0);
  }
  SUBCASE("ground state") {
    const OccupationResult r = occupation_from_areas({1.0, 0.0, 1e-4, 1e-4, 0.0}, OccupationMethod::ratio);
    CHECK(r.n == 0.0);
    CHECK(r.ground_state_prob == 1.0);
  }
  SUBCASE("difference-calibrated method") {
    const OccupationResult r =
        occupation_from_areas({2.4, 0.4, 1e-4, 1e-4, 0.0}, OccupationMethod::difference_calibrated, CFactor{2.0, 0.0});
    CHECK(r.n == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.n_err_from_c == 0.0);
    const OccupationResult c =
        occupation_from_areas({2.4, 0.4, 1e-4, 1e-4, 0.0}, OccupationMethod::difference_calibrated, CFactor{2.0, 0.02});
    CHECK(c.n_err_from_c > 0.0);
    CHECK(c.n_err > r.n_err);
  }
  SUBCASE("unphysical asymmetry") {
    CHECK_THROWS_WITH_AS(occupation_from_areas({1.0, 1.0, 1e-4, 1e-4, 0.0}, OccupationMethod::ratio),
                         "unphysical asymmetry", AnalysisError);
    CHECK_THROWS_AS(occupation_from_areas({1.0, -0.5, 1e-4, 0.01, 0.0}, OccupationMethod::ratio), AnalysisError);
  }
  SUBCASE("slightly negative anti-Stokes area is clamped") {
    const OccupationResult r = occupation_from_areas({1.0, -0.01, 1e-4, 1e-4, 0.0}, OccupationMethod::ratio);
    CHECK(r.clamped);
    CHECK(r.n == 0.0);
    CHECK(r.n_raw < 0.0);
    CHECK(r.n_err > 0.0);
  }
}

TEST_CASE("noise-free extraction") {
  PairSetup s;
  const TraceOccupation t = extract(pair_trace(s, false), s);
  CHECK(t.occupation.n == doctest::Approx(0.21).epsilon(1e-6));
  CHECK(t.occupation.ground_state_prob == doctest::Approx(0.83).epsilon(0.01));
  CHECK(t.occupation.anti_stokes_area / t.occupation.stokes_area == doctest::Approx(0.21 / 1.21).epsilon(1e-6));
  SUBCASE("invariant under global rescaling") {
    PsdTrace scaled = pair_trace(s, false);
    for (double& v : scaled.values) v *= 40.0;
    const TraceOccupation u = extract(scaled, s);
    CHECK(u.occupation.n == doctest::Approx(t.occupation.n).epsilon(1e-8));
    CHECK(u.occupation.stokes_area == doctest::Approx(40.0 * t.occupation.stokes_area).epsilon(1e-8));
  }
  SUBCASE("monotone in the true occupation") {
    double prev = -1.0;
    for (double n : {0.0, 0.1, 0.5, 1.0, 5.0, 20.0}) {
      s.n = n;
      const double got = extract(pair_trace(s, false), s).occupation.n;
      CHECK(got > prev);
      CHECK(got == doctest::Approx(n).epsilon(1e-6));
      prev = got;
    }
  }
  SUBCASE("with a dark floor and a tilted gain") {
    s.dark = 0.05;
    PsdTrace raw = pair_trace(s, false);
    const DetectorResponse tilt{{hz_to_rad(3.9e6), hz_to_rad(6.1e6)}, {0.8, 1.2}};
    for (std::size_t i = 0; i < raw.values.size(); ++i)
      raw.values[i] = s.dark + detector_gain(tilt, hz_to_rad(raw.freq_hz[i])) * (raw.values[i] - s.dark);
    const TraceOccupation u = extract_occupation(raw, tilt, s.mode_hz);
    // The dark term divided by a sloped gain is not flat; the offsets absorb most of it.
    CHECK(u.occupation.n == doctest::Approx(0.21).epsilon(2e-3));
  }
  SUBCASE("sidebands outside the trace") {
    CHECK_THROWS_AS(extract_occupation(pair_trace(s, false), {}, 3e6), InputError);
  }
  SUBCASE("invalid traces are refused") {
    PsdTrace bad = pair_trace(s, false);
    bad.meta.valid = false;
    CHECK_THROWS_AS(extract(bad, s), AnalysisError);
  }
}

TEST_CASE("C calibration") {
  const AreaEstimate same[] = {{3.0, 1.0, 0.01, 0.01, 0.0}, {5.0, 3.0, 0.02, 0.02, 0.0}, {2.5, 0.5, 0.01, 0.01, 0.0}};
  const CCalibration c = calibrate_c(same);
  CHECK(c.c == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.chi2 == doctest::Approx(0.0).epsilon(1e-12));
  for (double v : c.normalized) CHECK(v == doctest::Approx(1.0));
  const AreaEstimate one[] = {{3.0, 1.0, 0.01, 0.01, 0.0}};
  CHECK_THROWS_AS(calibrate_c(one), InputError);
  const AreaEstimate off[] = {{3.0, 1.0, 1e-6, 1e-6, 0.0}, {5.0, 1.0, 1e-6, 1e-6, 0.0}};
  CHECK(calibrate_c(off).inconsistent);
}

TEST_CASE("C and n from a noisy 12-detuning series") {
  // C = 1 in shot-noise units times the bin-width scale of the replica.
  const Scenario sc = replica_1d();
  const std::vector<ScanTrace> scan = scan_series(sc.scan, sc.detunings_hz);
  std::vector<AreaEstimate> areas;
  std::vector<TraceOccupation> ratio;
  for (const ScanTrace& t : scan) {
    ratio.push_back(extract_occupation(t.trace, {}, t.trace.meta.modes[0].hint_hz));
    const OccupationResult& r = ratio.back().occupation;
    areas.push_back({r.stokes_area, r.anti_stokes_area, r.stokes_area_err * r.stokes_area_err,
                     r.anti_stokes_area_err * r.anti_stokes_area_err, r.area_covariance});
  }
  const CCalibration c = calibrate_c(areas);
  CHECK(c.c / sc.scan.modes[0].area_scale_c == doctest::Approx(1.0).epsilon(0.02));
  double mean = 0.0;
  for (double v : c.normalized) mean += v / static_cast<double>(c.normalized.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.03));
  CHECK_FALSE(c.inconsistent);
  // The two methods agree within their combined 1 sigma on most traces.
  int agree = 0;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const OccupationResult d =
        occupation_from_areas(areas[i], OccupationMethod::difference_calibrated, CFactor{c.c, c.c_err});
    const OccupationResult& r = ratio[i].occupation;
    CAPTURE(i);
    if (std::abs(d.n - r.n) <= std::hypot(d.n_err, r.n_err)) ++agree;
  }
  CHECK(agree == static_cast<int>(areas.size()));
}

TEST_CASE("occupation errors are calibrated" * doctest::timeout(300)) {
  PairSetup s;
  s.n = 0.21;
  const int trials = 1000;
  int cover = 0;
  for (int k = 0; k < trials; ++k) {
    s.seed = trace_seed(4242, static_cast<std::size_t>(k));
    const OccupationResult r = extract(pair_trace(s), s).occupation;
    if (std::abs(r.n_raw - s.n) <= r.n_err) ++cover;
  }
  CHECK(cover >= 640);
  CHECK(cover <= 720);
}

TEST_CASE("plot data") {
  PairSetup s;
  const TraceOccupation t = extract(pair_trace(s), s);
  const PlotData p = plot_data(t.normalized, t.fit);
  REQUIRE(!p.freq_hz.empty());
  for (std::size_t i = 0; i < p.freq_hz.size(); ++i) CHECK(p.residual[i] == doctest::Approx(p.data[i] - p.fit[i]));
}

TEST_CASE("noise-free scan inverts exactly") {
  const Scenario sc = replica_1d();
  std::vector<PsdTrace> traces;
  for (ScanTrace& t : scan_series_mean(sc.scan, sc.detunings_hz)) traces.push_back(std::move(t.trace));
  ScanAnalysisOptions opts;
  opts.gamma_recoil[ModeLabel::alpha] = 3200.0;
  const ScanReport rep = analyze_scan(traces, sc.optics, opts);
  REQUIRE(rep.modes.size() == 1);
  const ModeScanReport& m = rep.modes[0];
  const LibrationMode& truth = sc.scan.modes[0].mode;
  CHECK(m.linewidth.g_abs == doctest::Approx(std::abs(truth.g)).epsilon(1e-6));
  CHECK(m.frequency.omega_bare == doctest::Approx(truth.omega).epsilon(1e-6));
  CHECK(m.occupation.gamma_total_heating == doctest::Approx(truth.heating_rate()).epsilon(1e-6));
  REQUIRE(m.inertia);
  CHECK(*m.inertia == doctest::Approx(sc.rotor.inertia_b).epsilon(1e-6));
  CHECK(m.c.c == doctest::Approx(sc.scan.modes[0].area_scale_c).epsilon(1e-6));
}

TEST_CASE("2D replica recovers both occupations at the reference detuning") {
  const Scenario sc = replica_2d();
  std::vector<PsdTrace> traces;
  for (ScanTrace& t : scan_series(sc.scan, sc.detunings_hz)) traces.push_back(std::move(t.trace));
  ScanAnalysisOptions opts;
  const ScanReport rep = analyze_scan(traces, sc.optics, opts);
  REQUIRE(rep.modes.size() == 2);
  for (const ModeScanReport& m : rep.modes) {
    const double quoted = m.label == ModeLabel::alpha ? 0.08 : 0.22;
    const double target = m.label == ModeLabel::alpha ? 1.02 : 0.73;
    const Channel expected = cavity_channel_for(m.label);
    REQUIRE(m.channels.size() == 1);
    CHECK(m.channels[0] == expected);
    for (const TraceAnalysis& t : rep.traces) {
      if (t.label != m.label || t.channel != expected || t.detuning_hz != 984e3) continue;
      REQUIRE(t.result);
      CHECK(std::abs(t.result->occupation.n - target) <= quoted);
    }
  }
}

TEST_CASE("too few analysable traces") {
  const Scenario sc = replica_1d();
  const double d[] = {1030e3, 1042e3, 1055e3};
  std::vector<PsdTrace> traces;
  for (ScanTrace& t : scan_series(sc.scan, d)) traces.push_back(std::move(t.trace));
  CHECK_THROWS_WITH_AS(analyze_scan(traces, sc.optics), "underdetermined scan", FitError);
}

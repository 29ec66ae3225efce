#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "librotor/error.hpp"
#include "librotor/fitting.hpp"
#include "librotor/physics.hpp"
#include "librotor/units.hpp"

using namespace librotor;

namespace {

const double kOmega = hz_to_rad(1030e3);
const double kKappa = hz_to_rad(32.4e3);
const double kG = hz_to_rad(8.0e3);
const double kGammaInt = hz_to_rad(5.0);

std::vector<double> detunings(int n = 12, double lo_hz = 950e3, double hi_hz = 1100e3) {
  std::vector<double> d;
  for (int i = 0; i < n; ++i) d.push_back(hz_to_rad(lo_hz + (hi_hz - lo_hz) * i / (n - 1)));
  return d;
}

std::vector<ScanPoint> linewidth_points(double rel_err, std::mt19937_64* rng = nullptr, int n = 12) {
  std::vector<ScanPoint> pts;
  std::normal_distribution<double> z(0.0, 1.0);
  for (double d : detunings(n)) {
    const double v = effective_linewidth(kG, kOmega, kGammaInt, kKappa, d, kOmega);
    pts.push_back({d, rng ? v * (1.0 + rel_err * z(*rng)) : v, rel_err * v});
  }
  return pts;
}

std::vector<ScanPoint> frequency_points(double err, std::mt19937_64* rng = nullptr) {
  std::vector<ScanPoint> pts;
  std::normal_distribution<double> z(0.0, 1.0);
  for (double d : detunings()) {
    const double v = effective_frequency(kG, kOmega, kKappa, d, kOmega);
    pts.push_back({d, rng ? v + err * z(*rng) : v, err});
  }
  return pts;
}

std::vector<ScanPoint> occupation_points(double gamma, double n_phi, double rel_err) {
  std::vector<ScanPoint> pts;
  for (double d : detunings()) {
    const double n = steady_state_occupation(kG, kOmega, kKappa, d, gamma, n_phi);
    pts.push_back({d, n, rel_err * n});
  }
  return pts;
}

}  // namespace

TEST_CASE("linewidth scan") {
  SUBCASE("exact data recovers |g| to 1e-6") {
    const ScanFitResult r = fit_scan_linewidth(linewidth_points(0.05), kOmega, kKappa);
    CHECK(r.converged);
    CHECK(r.g_abs == doctest::Approx(kG).epsilon(1e-6));
    CHECK(r.gamma_intrinsic == doctest::Approx(kGammaInt).epsilon(1e-3));
    CHECK(r.chi2 < 1e-12);
    CHECK(r.dof == 10);
  }
  SUBCASE("10% noise on 20 points recovers |g| within 3%") {
    std::mt19937_64 rng(21);
    int good = 0;
    for (int k = 0; k < 200; ++k) {
      const ScanFitResult r = fit_scan_linewidth(linewidth_points(0.10, &rng, 20), kOmega, kKappa);
      if (std::abs(r.g_abs / kG - 1.0) < 0.03) ++good;
    }
    CHECK(good >= 190);
  }
}

TEST_CASE("frequency scan") {
  SUBCASE("exact data recovers |g| to 1e-6") {
    const ScanFitResult r = fit_scan_frequency(frequency_points(hz_to_rad(5.0)), kKappa);
    CHECK(r.g_abs == doctest::Approx(kG).epsilon(1e-6));
    CHECK(r.omega_bare == doctest::Approx(kOmega).epsilon(1e-12));
  }
  SUBCASE("per-mille spring at realistic noise") {
    // The largest shift here is ~2 kHz of 1030 kHz; 50 Hz point errors.
    std::mt19937_64 rng(5);
    int good = 0;
    int consistent = 0;
    for (int k = 0; k < 100; ++k) {
      const ScanFitResult f = fit_scan_frequency(frequency_points(hz_to_rad(50.0), &rng), kKappa);
      if (std::abs(f.g_abs / kG - 1.0) < 0.10) ++good;
      const ScanFitResult l = fit_scan_linewidth(linewidth_points(0.05, &rng), kOmega, kKappa);
      const double joint = std::hypot(f.g_abs_err, l.g_abs_err);
      if (std::abs(f.g_abs - l.g_abs) <= 2.0 * joint) ++consistent;
    }
    CHECK(good >= 95);
    CHECK(consistent >= 90);
  }
  SUBCASE("spring kernel derivative matches finite differences") {
    const double d = hz_to_rad(1042e3);
    const double h = kOmega * 1e-6;
    const double fd = (spring_kernel(kOmega + h, kKappa, d, kOmega + h) - spring_kernel(kOmega - h, kKappa, d, kOmega - h)) /
                      (2.0 * h);
    CHECK(spring_kernel_derivative(kOmega, kKappa, d) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("occupation curve") {
  OccupationCurveParams params{kOmega, kG, 0.0, 3200.0};
  SUBCASE("exact data recovers the heating rate to 1e-6") {
    const ScanFitResult r = fit_occupation_curve(occupation_points(6800.0, 0.0, 0.02), params, kKappa);
    CHECK(r.gamma_total_heating == doctest::Approx(6800.0).epsilon(1e-6));
    CHECK(r.n_phase == doctest::Approx(0.0).epsilon(1e-9));
    REQUIRE(r.gamma_thermal);
    CHECK(*r.gamma_thermal == doctest::Approx(3600.0).epsilon(1e-6));
  }
  SUBCASE("phase-noise floor") {
    const ScanFitResult r = fit_occupation_curve(occupation_points(20000.0, 0.38, 0.02), params, kKappa);
    CHECK(r.n_phase == doctest::Approx(0.38).epsilon(1e-6));
  }
  SUBCASE("coupling error feeds the heating-rate error") {
    const ScanFitResult a = fit_occupation_curve(occupation_points(6800.0, 0.0, 0.02), params, kKappa);
    params.g_abs_err = 0.05 * kG;
    const ScanFitResult b = fit_occupation_curve(occupation_points(6800.0, 0.0, 0.02), params, kKappa);
    CHECK(b.gamma_total_heating_err > a.gamma_total_heating_err);
    CHECK(b.gamma_total_heating_err ==
          doctest::Approx(std::hypot(a.gamma_total_heating_err, 2.0 * 6800.0 * 0.05)).epsilon(1e-6));
  }
  SUBCASE("model minimum") {
    const ScanFitResult r = fit_occupation_curve(occupation_points(6800.0, 0.0, 0.02), params, kKappa);
    const double dmin = occupation_minimum(r, params, kKappa, hz_to_rad(900e3), hz_to_rad(1200e3));
    double best = 1e300;
    double best_d = 0.0;
    for (int i = 0; i <= 30000; ++i) {
      const double d = hz_to_rad(900e3 + 10.0 * i);
      const double n = steady_state_occupation(kG, kOmega, kKappa, d, 6800.0, 0.0);
      if (n < best) {
        best = n;
        best_d = d;
      }
    }
    CHECK(std::abs(rad_to_hz(dmin - best_d)) < 20.0);
    CHECK(occupation_model(r, params, kKappa, dmin) == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("outlier rejection and underdetermined scans") {
  std::vector<ScanPoint> pts = linewidth_points(0.05);
  pts[4].value *= 3.0;  // far beyond 5 sigma
  const ScanFitResult r = fit_scan_linewidth(pts, kOmega, kKappa);
  CHECK_FALSE(r.inlier[4]);
  CHECK(r.g_abs == doctest::Approx(kG).epsilon(1e-6));
  CHECK(r.dof == 9);

  OutlierOptions off;
  off.enabled = false;
  const ScanFitResult kept = fit_scan_linewidth(pts, kOmega, kKappa, off);
  CHECK(kept.inlier[4]);

  std::vector<ScanPoint> few(pts.begin(), pts.begin() + 3);
  CHECK_THROWS_WITH_AS(fit_scan_linewidth(few, kOmega, kKappa), "underdetermined scan", FitError);
  std::vector<ScanPoint> dup = linewidth_points(0.05);
  dup[1].detuning = dup[0].detuning;
  CHECK_THROWS_AS(fit_scan_linewidth(dup, kOmega, kKappa), InputError);
}

TEST_CASE("scan fits are deterministic") {
  std::mt19937_64 rng(1);
  const std::vector<ScanPoint> pts = linewidth_points(0.1, &rng);
  const ScanFitResult a = fit_scan_linewidth(pts, kOmega, kKappa);
  const ScanFitResult b = fit_scan_linewidth(pts, kOmega, kKappa);
  CHECK(a.g_abs == b.g_abs);
  CHECK(a.covariance == b.covariance);
}

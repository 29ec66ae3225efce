// Detuning-scan fits: optical damping, optical spring and occupation.

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "librotor/error.hpp"
#include "librotor/fitting.hpp"
#include "librotor/lm.hpp"
#include "librotor/physics.hpp"

namespace librotor {

namespace {

using fit::Matrix;
using fit::Vector;

double sq(double x) { return x * x; }

// Value and gradient of a scan model at one detuning.
using PointModel = std::function<bool(const Vector& p, double detuning, double& value, Vector& grad)>;

void check_points(std::span<const ScanPoint> points) {
  if (points.size() < 4) throw FitError("underdetermined scan");
  std::set<double> seen;
  for (const ScanPoint& pt : points) {
    if (!std::isfinite(pt.detuning) || !std::isfinite(pt.value))
      throw InputError("scan point values must be finite");
    if (!(pt.err > 0.0) || !std::isfinite(pt.err)) throw InputError("scan point errors must be > 0");
    if (!seen.insert(pt.detuning).second) throw InputError("scan detunings must be distinct");
  }
}

// Weighted linear least squares: target ~ a * c0(detuning) + b * c1(detuning).
Eigen::Vector2d linear_wls(std::span<const ScanPoint> points, const std::function<double(double)>& c0,
                           const std::function<double(double)>& c1,
                           const std::function<double(const ScanPoint&)>& target,
                           const std::function<double(const ScanPoint&)>& sigma) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (const ScanPoint& pt : points) {
    const double w = 1.0 / sq(sigma(pt));
    const Eigen::Vector2d row(c0(pt.detuning), c1(pt.detuning));
    a += w * row * row.transpose();
    b += w * row * target(pt);
  }
  return a.ldlt().solve(b);
}

struct RawScanFit {
  ScanFitResult result;
  Vector params;
};

RawScanFit run_scan_fit(std::span<const ScanPoint> points, std::vector<std::string> names,
                        const PointModel& model, Vector p0, const Vector& lower,
                        const OutlierOptions& outliers) {
  const int n = static_cast<int>(p0.size());
  std::vector<bool> inlier(points.size(), true);
  std::vector<double> residuals(points.size(), 0.0);
  fit::LmReport report;
  const int rounds = outliers.enabled ? outliers.max_rounds + 1 : 1;
  for (int round = 0; round < rounds; ++round) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (inlier[i]) idx.push_back(i);
    if (idx.size() < 4 || static_cast<int>(idx.size()) <= n) throw FitError("underdetermined scan");

    fit::LmProblem problem;
    problem.n_params = n;
    problem.lower = lower;
    problem.evaluate = [&](const Vector& p, Vector& r, Matrix& J) {
      r.resize(static_cast<Eigen::Index>(idx.size()));
      J.resize(static_cast<Eigen::Index>(idx.size()), n);
      Vector grad(n);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const ScanPoint& pt = points[idx[k]];
        double value = 0.0;
        if (!model(p, pt.detuning, value, grad)) return false;
        const auto row = static_cast<Eigen::Index>(k);
        r(row) = (pt.value - value) / pt.err;
        J.row(row) = grad.transpose() / pt.err;
      }
      return r.allFinite() && J.allFinite();
    };
    report = fit::levenberg_marquardt(problem, p0, {});
    p0 = report.params;

    Vector grad(n);
    for (std::size_t i = 0; i < points.size(); ++i) {
      double value = 0.0;
      residuals[i] = model(report.params, points[i].detuning, value, grad)
                         ? (points[i].value - value) / points[i].err
                         : std::numeric_limits<double>::infinity();
    }
    if (round + 1 == rounds) break;
    // One point per round: the worst offender beyond the threshold. A single
    // gross outlier drags the fit and can push every residual past 5 sigma.
    std::size_t worst = points.size();
    double worst_abs = outliers.sigma;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (inlier[i] && !(std::abs(residuals[i]) <= worst_abs)) {
        worst = i;
        worst_abs = std::isfinite(residuals[i]) ? std::abs(residuals[i]) : std::numeric_limits<double>::infinity();
      }
    }
    if (worst == points.size()) break;
    inlier[worst] = false;
  }

  RawScanFit out;
  ScanFitResult& r = out.result;
  int used = 0;
  for (bool b : inlier) used += b ? 1 : 0;
  r.parameter_names = std::move(names);
  r.covariance = fit::covariance_from_normal(report.normal_matrix);
  r.residuals = std::move(residuals);
  r.inlier = std::move(inlier);
  r.chi2 = 2.0 * report.cost;
  r.dof = used - n;
  r.converged = report.converged;
  out.params = report.params;
  return out;
}

double param_err(const ScanFitResult& r, int k) { return std::sqrt(std::max(r.covariance(k, k), 0.0)); }

struct OccupationRates {
  double per_g2 = 0.0;  // (A- - A+) / |g|^2
  double floor = 0.0;   // A+ / (A- - A+), the quantum back-action limit
};

OccupationRates occupation_rates(double omega, double kappa, double detuning) {
  const SidebandRates unit = sideband_rates(1.0, omega, kappa, detuning);
  const double diff = unit.a_minus - unit.a_plus;
  if (!(diff > 0.0)) throw InputError("occupation point without net cooling (detuning must be > 0)");
  return {diff, unit.a_plus / diff};
}

}  // namespace

double spring_kernel_derivative(double omega, double kappa, double detuning) {
  const double k2 = sq(0.5 * kappa);
  const double num = 4.0 * omega * detuning * (k2 - sq(omega) + sq(detuning));
  const double dnum = 4.0 * detuning * (k2 - 3.0 * sq(omega) + sq(detuning));
  const double p = k2 + sq(omega + detuning);
  const double q = k2 + sq(omega - detuning);
  const double dp = 2.0 * (omega + detuning);
  const double dq = 2.0 * (omega - detuning);
  const double den = p * q;
  return dnum / den - num * (dp * q + p * dq) / (den * den);
}

ScanFitResult fit_scan_linewidth(std::span<const ScanPoint> points, double omega, double kappa,
                                 const OutlierOptions& outliers) {
  check_points(points);
  if (!(omega > 0.0) || !(kappa > 0.0)) throw InputError("fit_scan_linewidth: omega and kappa must be > 0");
  // Optical damping per unit |g|^2.
  auto kernel = [omega, kappa](double d) { return effective_linewidth(1.0, omega, 0.0, kappa, d, omega); };

  const Eigen::Vector2d lin = linear_wls(
      points, [](double) { return 1.0; }, kernel, [](const ScanPoint& pt) { return pt.value; },
      [](const ScanPoint& pt) { return pt.err; });
  Vector p0(2);
  p0 << std::sqrt(std::max(std::abs(lin(1)), 1e-30)), std::max(lin(0), 0.0);

  const PointModel model = [&](const Vector& p, double d, double& value, Vector& grad) {
    const double k = kernel(d);
    value = p(1) + p(0) * p(0) * k;
    grad(0) = 2.0 * p(0) * k;
    grad(1) = 1.0;
    return true;
  };
  RawScanFit raw = run_scan_fit(points, {"g_abs", "gamma_intrinsic"}, model, p0, Vector::Zero(2), outliers);
  ScanFitResult& r = raw.result;
  r.g_abs = raw.params(0);
  r.g_abs_err = param_err(r, 0);
  r.gamma_intrinsic = raw.params(1);
  r.gamma_intrinsic_err = param_err(r, 1);
  r.omega_bare = omega;
  return r;
}

ScanFitResult fit_scan_frequency(std::span<const ScanPoint> points, double kappa,
                                 const OutlierOptions& outliers) {
  check_points(points);
  if (!(kappa > 0.0)) throw InputError("fit_scan_frequency: kappa must be > 0");

  // Start: Omega_eff^2 = Omega^2 - |g|^2 S(Omega0) is linear in (Omega^2, |g|^2).
  std::vector<double> values;
  for (const ScanPoint& pt : points) values.push_back(pt.value);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2),
                   values.end());
  double omega0 = values[values.size() / 2];
  if (!(omega0 > 0.0)) throw InputError("fit_scan_frequency: frequencies must be > 0");
  double g2 = 0.0;
  for (int pass = 0; pass < 3; ++pass) {
    const double w0 = omega0;
    const Eigen::Vector2d lin = linear_wls(
        points, [](double) { return 1.0; },
        [w0, kappa](double d) { return -spring_kernel(w0, kappa, d, w0); },
        [](const ScanPoint& pt) { return pt.value * pt.value; },
        [](const ScanPoint& pt) { return 2.0 * pt.value * pt.err; });
    if (lin(0) > 0.0) omega0 = std::sqrt(lin(0));
    g2 = lin(1);
  }
  Vector p0(2);
  p0 << std::sqrt(std::max(std::abs(g2), 1e-30)), omega0;

  const PointModel model = [kappa](const Vector& p, double d, double& value, Vector& grad) {
    const double g = p(0);
    const double w = p(1);
    if (!(w > 0.0)) return false;
    const double s = spring_kernel(w, kappa, d, w);
    const double radicand = w * w - g * g * s;
    if (!(radicand > 0.0)) return false;
    value = std::sqrt(radicand);
    grad(0) = -g * s / value;
    grad(1) = (2.0 * w - g * g * spring_kernel_derivative(w, kappa, d)) / (2.0 * value);
    return true;
  };
  Vector lower(2);
  lower << 0.0, 0.0;
  RawScanFit raw = run_scan_fit(points, {"g_abs", "omega_bare"}, model, p0, lower, outliers);
  ScanFitResult& r = raw.result;
  r.g_abs = raw.params(0);
  r.g_abs_err = param_err(r, 0);
  r.omega_bare = raw.params(1);
  r.omega_bare_err = param_err(r, 1);
  return r;
}

ScanFitResult fit_occupation_curve(std::span<const ScanPoint> points, const OccupationCurveParams& params,
                                   double kappa, const OutlierOptions& outliers) {
  check_points(points);
  if (!(params.omega > 0.0) || !(kappa > 0.0) || !(params.g_abs > 0.0))
    throw InputError("fit_occupation_curve: omega, kappa and |g| must be > 0");
  if (params.g_abs_err < 0.0 || params.gamma_recoil < 0.0)
    throw InputError("fit_occupation_curve: errors and recoil rate must be >= 0");
  const double g2 = sq(params.g_abs);
  for (const ScanPoint& pt : points) occupation_rates(params.omega, kappa, pt.detuning);

  auto rates = [&](double d) { return occupation_rates(params.omega, kappa, d); };
  const Eigen::Vector2d lin = linear_wls(
      points, [&](double d) { return 1.0 / (g2 * rates(d).per_g2); }, [](double) { return 1.0; },
      [&](const ScanPoint& pt) { return pt.value - rates(pt.detuning).floor; },
      [](const ScanPoint& pt) { return pt.err; });
  Vector p0(2);
  p0 << std::max(lin(0), 0.0), std::max(lin(1), 0.0);

  const PointModel model = [&](const Vector& p, double d, double& value, Vector& grad) {
    const OccupationRates r = rates(d);
    const double per_heating = 1.0 / (g2 * r.per_g2);
    value = p(0) * per_heating + r.floor + p(1);
    grad(0) = per_heating;
    grad(1) = 1.0;
    return true;
  };
  RawScanFit raw =
      run_scan_fit(points, {"gamma_total_heating", "n_phase"}, model, p0, Vector::Zero(2), outliers);
  ScanFitResult& r = raw.result;
  // Only heating / |g|^2 is constrained, so the coupling error enters the
  // heating rate in full.
  const double heating = raw.params(0);
  r.covariance(0, 0) += sq(2.0 * heating * params.g_abs_err / params.g_abs);
  r.gamma_total_heating = heating;
  r.gamma_total_heating_err = param_err(r, 0);
  r.gamma_thermal = heating - params.gamma_recoil;
  r.n_phase = raw.params(1);
  r.n_phase_err = param_err(r, 1);
  r.g_abs = params.g_abs;
  r.g_abs_err = params.g_abs_err;
  r.omega_bare = params.omega;
  return r;
}

double occupation_model(const ScanFitResult& fit, const OccupationCurveParams& params, double kappa,
                        double detuning) {
  return steady_state_occupation(params.g_abs, params.omega, kappa, detuning, fit.gamma_total_heating,
                                 fit.n_phase);
}

double occupation_minimum(const ScanFitResult& fit, const OccupationCurveParams& params, double kappa,
                          double lo, double hi) {
  if (!(hi > lo) || !(lo > 0.0)) throw InputError("occupation_minimum: need 0 < lo < hi");
  auto n_at = [&](double d) {
    try {
      return occupation_model(fit, params, kappa, d);
    } catch (const PhysicsError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  constexpr int kGrid = 400;
  const double step = (hi - lo) / kGrid;
  int best = 0;
  double best_n = n_at(lo);
  for (int i = 1; i <= kGrid; ++i) {
    const double v = n_at(lo + step * i);
    if (v < best_n) {
      best_n = v;
      best = i;
    }
  }
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = n_at(c);
  double fd = n_at(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::abs(b); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = n_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = n_at(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace librotor

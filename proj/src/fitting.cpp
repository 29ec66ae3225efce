#include "librotor/fitting.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "librotor/error.hpp"
#include "librotor/kernels.hpp"
#include "librotor/lm.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace {

using fit::Matrix;
using fit::Vector;

constexpr int kMinBins = 8;
constexpr int kMaxReweights = 50;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

// Model values and their (unweighted) derivatives for a parameter vector.
using ModelFn = std::function<bool(const Vector& p, Vector& model, Matrix& dmodel)>;

struct IrlsResult {
  Vector params;
  Matrix covariance;
  double reduced_chi2 = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Weighted least squares with variance model^2 / averages, re-solved until
// the weights stop moving the parameters. averages <= 0: unit weights, one
// solve, covariance scaled by the reduced chi-square.
IrlsResult irls(const Eigen::Ref<const Vector>& y, double averages, int n_params, const ModelFn& model_fn,
                Vector p) {
  const Eigen::Index m = y.size();
  const double y_max = y.maxCoeff();
  if (!(y_max > 0.0)) throw FitError("degenerate fit window");
  const double floor = 1e-9 * y_max;
  const bool weighted = averages > 0.0;

  Vector sqrt_w = Vector::Ones(m);
  Vector model(m);
  Matrix dmodel(m, n_params);
  auto refresh_weights = [&](const Vector& params) {
    if (!weighted) return;
    if (!model_fn(params, model, dmodel)) throw FitError("initial parameters outside model domain");
    Vector w(m);
    kernels::periodogram_weights({model.data(), static_cast<std::size_t>(m)}, averages, floor,
                                 {w.data(), static_cast<std::size_t>(m)});
    sqrt_w = w.cwiseSqrt();
  };

  fit::LmProblem problem;
  problem.n_params = n_params;
  problem.evaluate = [&](const Vector& params, Vector& r, Matrix& J) {
    Vector f(m);
    Matrix d(m, n_params);
    if (!model_fn(params, f, d)) return false;
    r = sqrt_w.cwiseProduct(y - f);
    J = sqrt_w.asDiagonal() * d;
    return r.allFinite() && J.allFinite();
  };

  IrlsResult out;
  fit::LmReport report;
  bool settled = !weighted;
  for (int round = 0; round < (weighted ? kMaxReweights : 1); ++round) {
    refresh_weights(p);
    report = fit::levenberg_marquardt(problem, p, {});
    out.iterations += report.iterations;
    if (!weighted) break;
    const Matrix cov = fit::covariance_from_normal(report.normal_matrix);
    settled = true;
    for (int k = 0; k < n_params; ++k) {
      const double sigma = std::sqrt(std::max(cov(k, k), 0.0));
      const double moved = std::abs(report.params(k) - p(k));
      if (moved > 1e-6 * sigma && moved > 1e-10 * std::abs(p(k))) settled = false;
    }
    p = report.params;
    if (settled) break;
  }

  out.params = report.params;
  out.converged = report.converged && settled;
  const int dof = std::max<int>(1, static_cast<int>(m) - n_params);
  out.reduced_chi2 = 2.0 * report.cost / dof;
  out.covariance = fit::covariance_from_normal(report.normal_matrix);
  if (!weighted) out.covariance *= out.reduced_chi2;
  model_fn(out.params, model, dmodel);
  out.residual_rms = std::sqrt((y - model).squaredNorm() / static_cast<double>(m));
  return out;
}

struct Selected {
  std::vector<double> f;
  std::vector<double> y;
};

Selected select_window(const PsdTrace& trace, FitWindow window) {
  if (!(window.hi_hz > window.lo_hz)) throw InputError("fit window must have hi > lo");
  Selected s;
  for (std::size_t i = 0; i < trace.freq_hz.size(); ++i) {
    if (trace.freq_hz[i] >= window.lo_hz && trace.freq_hz[i] <= window.hi_hz) {
      s.f.push_back(trace.freq_hz[i]);
      s.y.push_back(trace.values[i]);
    }
  }
  if (s.f.size() < static_cast<std::size_t>(kMinBins))
    throw FitError("fit window needs at least 8 bins");
  return s;
}

void check_values(std::span<const double> values) {
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("PSD values must be finite and non-negative");
}

}  // namespace

double LorentzianFit::evaluate(double f_hz) const {
  const double h = 0.5 * linewidth_fwhm;
  const double d = f_hz - center;
  return offset + (area / kPi) * h / (d * d + h * h);
}

LorentzianGuess guess_lorentzian(std::span<const double> freq_hz, std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || freq_hz.size() != n) throw InputError("guess_lorentzian: need matching arrays of >= 3 bins");
  const std::size_t edge = std::max<std::size_t>(2, n / 10);
  std::vector<double> edges(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(edge));
  edges.insert(edges.end(), values.end() - static_cast<std::ptrdiff_t>(edge), values.end());
  LorentzianGuess g;
  g.offset = median(std::move(edges));

  // First maximum wins, i.e. the lower frequency on ties.
  const std::size_t imax =
      static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  g.center = freq_hz[imax];
  const double height = values[imax] - g.offset;
  const double span = freq_hz[n - 1] - freq_hz[0];
  const double bin = span / static_cast<double>(n - 1);
  if (!(height > 0.0)) {
    g.linewidth_fwhm = span / 10.0;
    g.area = 0.0;
    return g;
  }
  const double half = g.offset + 0.5 * height;
  double left = freq_hz[0];
  for (std::size_t i = imax; i > 0; --i) {
    if (values[i - 1] < half) {
      const double t = (half - values[i - 1]) / (values[i] - values[i - 1]);
      left = freq_hz[i - 1] + t * (freq_hz[i] - freq_hz[i - 1]);
      break;
    }
  }
  double right = freq_hz[n - 1];
  for (std::size_t i = imax; i + 1 < n; ++i) {
    if (values[i + 1] < half) {
      const double t = (values[i] - half) / (values[i] - values[i + 1]);
      right = freq_hz[i] + t * (freq_hz[i + 1] - freq_hz[i]);
      break;
    }
  }
  g.linewidth_fwhm = std::max(right - left, bin);

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    area += 0.5 * ((values[i] - g.offset) + (values[i + 1] - g.offset)) * (freq_hz[i + 1] - freq_hz[i]);
  g.area = area > 0.0 ? area : 0.5 * kPi * height * g.linewidth_fwhm;
  return g;
}

LorentzianFit fit_lorentzian(std::span<const double> freq_hz, std::span<const double> values,
                             double averages, std::optional<LorentzianGuess> init) {
  if (freq_hz.size() != values.size()) throw InputError("fit_lorentzian: frequency and value counts differ");
  if (values.size() < static_cast<std::size_t>(kMinBins)) throw FitError("fit window needs at least 8 bins");
  check_values(values);
  const LorentzianGuess guess = init ? *init : guess_lorentzian(freq_hz, values);
  if (!(guess.linewidth_fwhm > 0.0)) throw InputError("fit_lorentzian: initial linewidth must be > 0");

  // Work relative to the window centre so the centre parameter is O(width).
  const double ref = 0.5 * (freq_hz.front() + freq_hz.back());
  const std::size_t m = values.size();
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = freq_hz[i] - ref;
  const Eigen::Map<const Vector> y(values.data(), static_cast<Eigen::Index>(m));

  const ModelFn model = [&](const Vector& p, Vector& f, Matrix& d) {
    if (!(p(1) > 0.0)) return false;
    f.resize(static_cast<Eigen::Index>(m));
    d.resize(static_cast<Eigen::Index>(m), 4);
    kernels::lorentzian_jacobian(x, p(0), 0.5 * p(1), p(2),
                                 {{f.data(), m}, {d.col(0).data(), m}, {d.col(1).data(), m}, {d.col(2).data(), m}});
    d.col(1) *= 0.5;
    d.col(3).setOnes();
    f.array() += p(3);
    return true;
  };

  Vector p0(4);
  p0 << guess.center - ref, guess.linewidth_fwhm, guess.area, guess.offset;
  const IrlsResult r = irls(y, averages, 4, model, p0);

  LorentzianFit out;
  out.center = r.params(0) + ref;
  out.linewidth_fwhm = r.params(1);
  out.area = r.params(2);
  out.offset = r.params(3);
  out.covariance = r.covariance;
  out.converged = r.converged;
  out.residual_rms = r.residual_rms;
  out.reduced_chi2 = r.reduced_chi2;
  out.iterations = r.iterations;
  return out;
}

LorentzianFit fit_lorentzian(const PsdTrace& trace, FitWindow window, std::optional<LorentzianGuess> init) {
  const Selected s = select_window(trace, window);
  return fit_lorentzian(s.f, s.y, static_cast<double>(trace.meta.averages), init);
}

namespace {
double stokes_sign(SidebandOrientation o) { return o == SidebandOrientation::lo_blue ? 1.0 : -1.0; }
}  // namespace

double SidebandPairFit::stokes_center_hz() const {
  return het_freq_hz + stokes_sign(orientation) * mode_freq_hz;
}

double SidebandPairFit::anti_stokes_center_hz() const {
  return het_freq_hz - stokes_sign(orientation) * mode_freq_hz;
}

double SidebandPairFit::evaluate(double f_hz) const {
  const double h = 0.5 * linewidth_fwhm;
  const double ds = f_hz - stokes_center_hz();
  const double da = f_hz - anti_stokes_center_hz();
  const double offset = std::abs(ds) <= std::abs(da) ? stokes_offset : anti_stokes_offset;
  return offset + (stokes_area / kPi) * h / (ds * ds + h * h) +
         (anti_stokes_area / kPi) * h / (da * da + h * h);
}

SidebandPairFit fit_sideband_pair(const PsdTrace& trace, double het_hz, SidebandOrientation orientation,
                                  FitWindow stokes_window, FitWindow anti_stokes_window,
                                  const SidebandPairGuess& init) {
  if (!(init.linewidth_fwhm > 0.0)) throw InputError("fit_sideband_pair: initial linewidth must be > 0");
  if (!(init.mode_freq_hz > 0.0)) throw InputError("fit_sideband_pair: mode frequency hint must be > 0");
  const Selected s = select_window(trace, stokes_window);
  const Selected a = select_window(trace, anti_stokes_window);
  check_values(s.y);
  check_values(a.y);

  const double sign = stokes_sign(orientation);
  const double m_ref = init.mode_freq_hz;
  const std::size_t ns = s.f.size();
  const std::size_t na = a.f.size();
  std::vector<double> xs(ns);
  std::vector<double> xa(na);
  for (std::size_t i = 0; i < ns; ++i) xs[i] = s.f[i] - (het_hz + sign * m_ref);
  for (std::size_t i = 0; i < na; ++i) xa[i] = a.f[i] - (het_hz - sign * m_ref);

  Vector y(static_cast<Eigen::Index>(ns + na));
  for (std::size_t i = 0; i < ns; ++i) y(static_cast<Eigen::Index>(i)) = s.y[i];
  for (std::size_t i = 0; i < na; ++i) y(static_cast<Eigen::Index>(ns + i)) = a.y[i];

  // p = (mode offset from m_ref, fwhm, A_S, A_aS, offset_S, offset_aS)
  std::vector<double> v(std::max(ns, na)), dc(v.size()), dh(v.size()), da(v.size());
  const ModelFn model = [&](const Vector& p, Vector& f, Matrix& d) {
    if (!(p(1) > 0.0)) return false;
    const Eigen::Index total = static_cast<Eigen::Index>(ns + na);
    f.resize(total);
    d.setZero(total, 6);
    const double hwhm = 0.5 * p(1);
    kernels::lorentzian_jacobian(xs, sign * p(0), hwhm, p(2), {{v.data(), ns}, {dc.data(), ns}, {dh.data(), ns}, {da.data(), ns}});
    for (std::size_t i = 0; i < ns; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      f(r) = v[i] + p(4);
      d(r, 0) = sign * dc[i];
      d(r, 1) = 0.5 * dh[i];
      d(r, 2) = da[i];
      d(r, 4) = 1.0;
    }
    kernels::lorentzian_jacobian(xa, -sign * p(0), hwhm, p(3), {{v.data(), na}, {dc.data(), na}, {dh.data(), na}, {da.data(), na}});
    for (std::size_t i = 0; i < na; ++i) {
      const auto r = static_cast<Eigen::Index>(ns + i);
      f(r) = v[i] + p(5);
      d(r, 0) = -sign * dc[i];
      d(r, 1) = 0.5 * dh[i];
      d(r, 3) = da[i];
      d(r, 5) = 1.0;
    }
    return true;
  };

  Vector p0(6);
  p0 << 0.0, init.linewidth_fwhm, init.stokes_area, init.anti_stokes_area, init.stokes_offset,
      init.anti_stokes_offset;
  const IrlsResult r = irls(y, static_cast<double>(trace.meta.averages), 6, model, p0);

  SidebandPairFit out;
  out.mode_freq_hz = m_ref + r.params(0);
  out.linewidth_fwhm = r.params(1);
  out.stokes_area = r.params(2);
  out.anti_stokes_area = r.params(3);
  out.stokes_offset = r.params(4);
  out.anti_stokes_offset = r.params(5);
  out.covariance = r.covariance;
  out.converged = r.converged;
  out.residual_rms = r.residual_rms;
  out.reduced_chi2 = r.reduced_chi2;
  out.iterations = r.iterations;
  out.het_freq_hz = het_hz;
  out.orientation = orientation;
  out.stokes_window = stokes_window;
  out.anti_stokes_window = anti_stokes_window;
  return out;
}

}  // namespace librotor

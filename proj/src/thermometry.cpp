#include "librotor/thermometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "librotor/error.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace {

double sq(double x) { return x * x; }

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

std::vector<double> moving_median(const std::vector<double>& x, int width) {
  if (width <= 1) return x;
  const std::ptrdiff_t half = width / 2;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size());
  std::vector<double> buf;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    buf.assign(x.begin() + lo, x.begin() + hi + 1);
    out[static_cast<std::size_t>(i)] = median_of(buf);
  }
  return out;
}

std::vector<double> moving_mean(const std::vector<double>& x, int width) {
  if (width <= 1) return x;
  const std::ptrdiff_t half = width / 2;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    out[static_cast<std::size_t>(i)] =
        (prefix[static_cast<std::size_t>(hi + 1)] - prefix[static_cast<std::size_t>(lo)]) /
        static_cast<double>(hi - lo + 1);
  }
  return out;
}

double stokes_sign(SidebandOrientation o) { return o == SidebandOrientation::lo_blue ? 1.0 : -1.0; }

struct Bins {
  std::vector<double> f;
  std::vector<double> y;
};

Bins bins_in(const PsdTrace& trace, double lo, double hi) {
  Bins b;
  for (std::size_t i = 0; i < trace.freq_hz.size(); ++i) {
    if (trace.freq_hz[i] >= lo && trace.freq_hz[i] <= hi) {
      b.f.push_back(trace.freq_hz[i]);
      b.y.push_back(trace.values[i]);
    }
  }
  return b;
}

double trapezoid_excess(const Bins& b, double offset) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < b.f.size(); ++i)
    area += 0.5 * ((b.y[i] - offset) + (b.y[i + 1] - offset)) * (b.f[i + 1] - b.f[i]);
  return area;
}

double edge_median(const Bins& b) {
  const std::size_t n = b.y.size();
  const std::size_t edge = std::max<std::size_t>(2, n / 10);
  std::vector<double> e(b.y.begin(), b.y.begin() + static_cast<std::ptrdiff_t>(std::min(edge, n)));
  e.insert(e.end(), b.y.end() - static_cast<std::ptrdiff_t>(std::min(edge, n)), b.y.end());
  return median_of(e);
}

}  // namespace

std::string_view to_string(OccupationMethod method) {
  return method == OccupationMethod::ratio ? "ratio" : "diffcal";
}

OccupationMethod occupation_method_from_string(std::string_view text) {
  if (text == "ratio") return OccupationMethod::ratio;
  if (text == "diffcal" || text == "difference_calibrated") return OccupationMethod::difference_calibrated;
  throw InputError("unknown method '" + std::string(text) + "' (expected ratio|diffcal)");
}

DetectorResponse calibrate_response(const PsdTrace& shot, const PsdTrace& dark,
                                    const CalibrationOptions& options) {
  validate(shot);
  validate(dark);
  if (shot.freq_hz != dark.freq_hz) throw InputError("calibration traces must share a frequency grid");
  std::vector<double> f;
  std::vector<double> diff;
  for (std::size_t i = 0; i < shot.values.size(); ++i) {
    if (shot.values[i] > dark.values[i]) {
      f.push_back(shot.freq_hz[i]);
      diff.push_back(shot.values[i] - dark.values[i]);
    }
  }
  const double invalid = 1.0 - static_cast<double>(f.size()) / static_cast<double>(shot.values.size());
  if (invalid > options.max_invalid_fraction || f.size() < 2)
    throw AnalysisError("calibration traces inconsistent");

  DetectorResponse resp;
  resp.gain = moving_mean(moving_median(diff, options.median_bins), options.mean_bins);
  resp.freq_grid.reserve(f.size());
  for (double hz : f) resp.freq_grid.push_back(hz_to_rad(hz));
  return resp;
}

PsdTrace normalize(const PsdTrace& trace, const DetectorResponse& resp) {
  PsdTrace out = trace;
  if (resp.freq_grid.empty()) return out;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] /= detector_gain(resp, hz_to_rad(out.freq_hz[i]));
  return out;
}

OccupationResult occupation_from_areas(const AreaEstimate& areas, OccupationMethod method,
                                       std::optional<CFactor> c) {
  const double s = areas.stokes;
  const double a = areas.anti_stokes;
  if (!(s > a)) throw AnalysisError("unphysical asymmetry");
  const double sigma_a = std::sqrt(std::max(areas.var_anti_stokes, 0.0));
  if (a < -2.0 * sigma_a) throw AnalysisError("unphysical asymmetry (negative anti-Stokes area)");

  OccupationResult r;
  r.method = method;
  r.stokes_area = s;
  r.anti_stokes_area = a;
  r.stokes_area_err = std::sqrt(std::max(areas.var_stokes, 0.0));
  r.anti_stokes_area_err = sigma_a;
  r.area_covariance = areas.covariance;

  if (method == OccupationMethod::ratio) {
    const double d = s - a;
    r.n_raw = a / d;
    const double dn_ds = -a / (d * d);
    const double dn_da = s / (d * d);
    const double var = sq(dn_ds) * areas.var_stokes + sq(dn_da) * areas.var_anti_stokes +
                       2.0 * dn_ds * dn_da * areas.covariance;
    r.n_err = std::sqrt(std::max(var, 0.0));
    r.c_factor = d;
    r.c_factor_err = std::sqrt(std::max(areas.var_stokes + areas.var_anti_stokes - 2.0 * areas.covariance, 0.0));
  } else {
    if (!c || !(c->value > 0.0)) throw InputError("difference-calibrated method needs C > 0");
    const double cv = c->value;
    r.n_raw = (s + a - cv) / (2.0 * cv);
    const double var_fit = (areas.var_stokes + areas.var_anti_stokes + 2.0 * areas.covariance) / (4.0 * cv * cv);
    const double var_c = sq((s + a) / (2.0 * cv * cv) * c->err);
    r.n_err = std::sqrt(std::max(var_fit, 0.0) + var_c);
    r.n_err_from_c = std::sqrt(var_c);
    r.c_factor = cv;
    r.c_factor_err = c->err;
  }
  r.n = r.n_raw;
  if (r.n_raw < 0.0) {
    r.n = 0.0;
    r.clamped = true;
  }
  r.ground_state_prob = 1.0 / (r.n + 1.0);
  r.ground_state_prob_err = r.n_err / sq(r.n + 1.0);
  return r;
}

TraceOccupation extract_occupation(const PsdTrace& trace, const DetectorResponse& resp,
                                   double mode_freq_hint_hz, const ExtractOptions& options, ModeLabel label) {
  validate(trace);
  if (!trace.meta.valid) throw AnalysisError("trace marked invalid: " + trace.meta.note);
  if (!(mode_freq_hint_hz > 0.0)) throw InputError("mode frequency hint must be > 0");
  if (!(options.window_fwhm > 0.0) || !(options.search_half_width_hz > 0.0))
    throw InputError("fit window options must be > 0");
  if (options.method == OccupationMethod::difference_calibrated && !options.c_override)
    throw InputError("difference-calibrated method needs C");

  TraceOccupation out;
  out.normalized = normalize(trace, resp);
  const PsdTrace& tr = out.normalized;
  const double het = tr.meta.het_freq_hz;
  const double sign = stokes_sign(tr.meta.orientation);
  const double stokes_hint = het + sign * mode_freq_hint_hz;
  const double anti_hint = het - sign * mode_freq_hint_hz;
  const double lo = tr.freq_hz.front();
  const double hi = tr.freq_hz.back();
  if (std::min(stokes_hint, anti_hint) < lo || std::max(stokes_hint, anti_hint) > hi)
    throw InputError("sideband outside trace span");

  // First pass: locate the Stokes peak and its width in the search window.
  const double sw = options.search_half_width_hz;
  const Bins search = bins_in(tr, stokes_hint - sw, stokes_hint + sw);
  if (search.f.size() < 8) throw InputError("too few bins around the Stokes sideband");
  LorentzianGuess guess = guess_lorentzian(search.f, search.y);
  try {
    const LorentzianFit pre =
        fit_lorentzian(search.f, search.y, static_cast<double>(tr.meta.averages), guess);
    if (pre.converged && pre.linewidth_fwhm > 0.0 && pre.area > 0.0 &&
        std::abs(pre.center - stokes_hint) < sw) {
      guess.center = pre.center;
      guess.linewidth_fwhm = pre.linewidth_fwhm;
      guess.area = pre.area;
      guess.offset = pre.offset;
    }
  } catch (const Error&) {
    // Keep the data-driven guess.
  }

  double half = options.window_fwhm * guess.linewidth_fwhm;
  if (options.max_window_half_width_hz > 0.0) half = std::min(half, options.max_window_half_width_hz);
  const double mode_hz = sign * (guess.center - het);
  const double anti_center = het - sign * mode_hz;
  const FitWindow sw_win{guess.center - half, guess.center + half};
  const FitWindow aw_win{anti_center - half, anti_center + half};
  const Bins anti = bins_in(tr, aw_win.lo_hz, aw_win.hi_hz);
  if (anti.f.size() < 8) throw InputError("too few bins around the anti-Stokes sideband");
  const double anti_offset = edge_median(anti);

  SidebandPairGuess init;
  init.mode_freq_hz = mode_hz;
  init.linewidth_fwhm = guess.linewidth_fwhm;
  init.stokes_area = guess.area;
  init.anti_stokes_area = trapezoid_excess(anti, anti_offset);
  init.stokes_offset = guess.offset;
  init.anti_stokes_offset = anti_offset;
  out.fit = fit_sideband_pair(tr, het, tr.meta.orientation, sw_win, aw_win, init);
  if (!out.fit.converged) throw AnalysisError("sideband fit did not converge");

  AreaEstimate areas;
  areas.stokes = out.fit.stokes_area;
  areas.anti_stokes = out.fit.anti_stokes_area;
  areas.var_stokes = out.fit.covariance(2, 2);
  areas.var_anti_stokes = out.fit.covariance(3, 3);
  areas.covariance = out.fit.covariance(2, 3);
  out.occupation = occupation_from_areas(areas, options.method, options.c_override);
  out.occupation.label = label;
  return out;
}

CCalibration calibrate_c(std::span<const AreaEstimate> areas) {
  if (areas.size() < 2) throw InputError("C calibration needs at least 2 spectra");
  CCalibration out;
  std::vector<double> d;
  std::vector<double> var;
  bool all_weighted = true;
  for (const AreaEstimate& a : areas) {
    d.push_back(a.stokes - a.anti_stokes);
    var.push_back(a.var_stokes + a.var_anti_stokes - 2.0 * a.covariance);
    if (!(var.back() > 0.0)) all_weighted = false;
  }
  const auto n = static_cast<double>(d.size());
  out.dof = static_cast<int>(d.size()) - 1;
  if (all_weighted) {
    double sw = 0.0;
    double swd = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      sw += 1.0 / var[i];
      swd += d[i] / var[i];
    }
    out.c = swd / sw;
    out.c_err = 1.0 / std::sqrt(sw);
    for (std::size_t i = 0; i < d.size(); ++i) out.chi2 += sq(d[i] - out.c) / var[i];
    out.p_value = boost::math::gamma_q(0.5 * out.dof, 0.5 * out.chi2);
  } else {
    // Without per-spectrum variances: plain mean and its standard error.
    double sum = 0.0;
    for (double x : d) sum += x;
    out.c = sum / n;
    double ss = 0.0;
    for (double x : d) ss += sq(x - out.c);
    out.c_err = std::sqrt(ss / (n - 1.0) / n);
  }
  out.inconsistent = out.p_value < 1e-3;
  if (!(out.c > 0.0)) throw AnalysisError("non-positive sideband area difference");
  for (double x : d) out.normalized.push_back(x / out.c);
  return out;
}

PlotData plot_data(const PsdTrace& normalized, const SidebandPairFit& fit) {
  PlotData out;
  auto inside = [](double f, const FitWindow& w) { return f >= w.lo_hz && f <= w.hi_hz; };
  for (std::size_t i = 0; i < normalized.freq_hz.size(); ++i) {
    const double f = normalized.freq_hz[i];
    if (!inside(f, fit.stokes_window) && !inside(f, fit.anti_stokes_window)) continue;
    const double model = fit.evaluate(f);
    out.freq_hz.push_back(f);
    out.data.push_back(normalized.values[i]);
    out.fit.push_back(model);
    out.residual.push_back(normalized.values[i] - model);
  }
  return out;
}

ScanReport analyze_scan(std::span<const PsdTrace> traces, const OpticalSetup& setup,
                        const ScanAnalysisOptions& options) {
  if (traces.size() < 4) throw FitError("underdetermined scan");
  validate(setup);
  ScanReport report;

  ExtractOptions first = options.extract;
  first.method = OccupationMethod::ratio;
  first.c_override.reset();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const PsdTrace& tr = traces[i];
    if (tr.meta.kind != TraceKind::signal) continue;
    for (const ModeHint& hint : tr.meta.modes) {
      TraceAnalysis ta;
      ta.index = i;
      ta.label = hint.label;
      ta.channel = tr.meta.channel;
      ta.detuning_hz = tr.meta.detuning_hz;
      try {
        ta.result = extract_occupation(tr, options.response, hint.hint_hz, first, hint.label);
      } catch (const Error& e) {
        ta.error = e.what();
      }
      report.traces.push_back(std::move(ta));
    }
  }

  std::vector<ModeLabel> labels;
  for (const TraceAnalysis& ta : report.traces)
    if (std::find(labels.begin(), labels.end(), ta.label) == labels.end()) labels.push_back(ta.label);
  if (labels.empty()) throw FitError("underdetermined scan");

  for (ModeLabel label : labels) {
    ModeScanReport mode;
    mode.label = label;
    // One channel per mode: the cavity channel that carries it when usable,
    // otherwise the channel with most successful fits.
    std::map<Channel, int> successes;
    for (const TraceAnalysis& ta : report.traces) {
      if (ta.label != label) continue;
      if (std::find(mode.channels.begin(), mode.channels.end(), ta.channel) == mode.channels.end())
        mode.channels.push_back(ta.channel);
      if (ta.result) ++successes[ta.channel];
    }
    Channel chosen = mode.channels.front();
    int best = -1;
    for (const auto& [ch, count] : successes) {
      if (count > best) {
        best = count;
        chosen = ch;
      }
    }
    if (successes[cavity_channel_for(label)] >= 4) chosen = cavity_channel_for(label);
    mode.channels = {chosen};

    std::vector<TraceAnalysis*> used;
    for (TraceAnalysis& ta : report.traces)
      if (ta.label == label && ta.channel == chosen && ta.result) used.push_back(&ta);
    if (used.size() < 4) throw FitError("underdetermined scan");
    mode.used_traces = static_cast<int>(used.size());

    std::vector<AreaEstimate> areas;
    for (const TraceAnalysis* ta : used) {
      const OccupationResult& o = ta->result->occupation;
      areas.push_back({o.stokes_area, o.anti_stokes_area, sq(o.stokes_area_err), sq(o.anti_stokes_area_err),
                       o.area_covariance});
    }
    mode.c = calibrate_c(areas);

    if (options.extract.method == OccupationMethod::difference_calibrated) {
      const CFactor c = options.extract.c_override ? *options.extract.c_override : CFactor{mode.c.c, mode.c.c_err};
      for (std::size_t k = 0; k < used.size(); ++k) {
        try {
          used[k]->result->occupation = occupation_from_areas(areas[k], OccupationMethod::difference_calibrated, c);
          used[k]->result->occupation.label = label;
        } catch (const Error& e) {
          used[k]->error = e.what();
          used[k]->result.reset();
        }
      }
      used.erase(std::remove_if(used.begin(), used.end(), [](const TraceAnalysis* t) { return !t->result; }),
                 used.end());
      if (used.size() < 4) throw FitError("underdetermined scan");
    }

    std::vector<ScanPoint> lw;
    std::vector<ScanPoint> freq;
    std::vector<ScanPoint> occ;
    for (const TraceAnalysis* ta : used) {
      const SidebandPairFit& f = ta->result->fit;
      const OccupationResult& o = ta->result->occupation;
      const double d = hz_to_rad(ta->detuning_hz);
      lw.push_back({d, hz_to_rad(f.linewidth_fwhm), hz_to_rad(f.linewidth_err())});
      freq.push_back({d, hz_to_rad(f.mode_freq_hz), hz_to_rad(f.mode_freq_err())});
      occ.push_back({d, o.n_raw, o.n_err});
    }
    mode.frequency = fit_scan_frequency(freq, setup.kappa, options.outliers);
    const double omega = mode.frequency.omega_bare;
    mode.linewidth = fit_scan_linewidth(lw, omega, setup.kappa, options.outliers);

    OccupationCurveParams params;
    params.omega = omega;
    params.g_abs = mode.linewidth.g_abs;
    params.g_abs_err = mode.linewidth.g_abs_err;
    if (auto it = options.gamma_recoil.find(label); it != options.gamma_recoil.end())
      params.gamma_recoil = it->second;
    mode.occupation = fit_occupation_curve(occ, params, setup.kappa, options.outliers);
    if (options.gamma_recoil.find(label) == options.gamma_recoil.end()) mode.occupation.gamma_thermal.reset();
    mode.occupation_params = params;

    double d_lo = std::numeric_limits<double>::infinity();
    double d_hi = -d_lo;
    for (const ScanPoint& p : occ) {
      d_lo = std::min(d_lo, p.detuning);
      d_hi = std::max(d_hi, p.detuning);
    }
    const double d_min = occupation_minimum(mode.occupation, params, setup.kappa, d_lo, d_hi);
    mode.model_min_detuning_hz = rad_to_hz(d_min);
    mode.model_min_n = occupation_model(mode.occupation, params, setup.kappa, d_min);

    const TraceAnalysis* best_trace = *std::min_element(used.begin(), used.end(), [](auto* x, auto* y) {
      return x->result->occupation.n < y->result->occupation.n;
    });
    mode.best_n = best_trace->result->occupation.n;
    mode.best_n_err = best_trace->result->occupation.n_err;
    mode.best_detuning_hz = best_trace->detuning_hz;

    mode.axis = inertia_axis(label, options.branch);
    if (std::abs(setup.e_cav0) > 0.0 && std::abs(setup.e_tw0) > 0.0 && params.g_abs > 0.0) {
      const double inertia = moment_of_inertia_from_coupling(params.g_abs, omega, setup);
      mode.inertia = inertia;
      LibrationMode lm;
      lm.label = label;
      lm.omega = omega;
      lm.g = params.g_abs;
      lm.zpf = zero_point_amplitude(inertia, omega);
      mode.derived = derived_scalars(lm, mode.best_n, inertia, options.convention);
    }
    report.modes.push_back(std::move(mode));
  }
  return report;
}

}  // namespace librotor

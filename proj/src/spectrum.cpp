#include "librotor/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "librotor/error.hpp"
#include "librotor/kernels.hpp"
#include "librotor/units.hpp"

namespace librotor {

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::backscatter_y: return "backscatter_y";
    case Channel::cavity_y: return "cavity_y";
    case Channel::cavity_z: return "cavity_z";
    case Channel::split_x: return "split_x";
    case Channel::split_y: return "split_y";
  }
  return "backscatter_y";
}

Channel channel_from_string(std::string_view text) {
  for (Channel c : {Channel::backscatter_y, Channel::cavity_y, Channel::cavity_z, Channel::split_x,
                    Channel::split_y}) {
    if (to_string(c) == text) return c;
  }
  throw InputError("unknown channel '" + std::string(text) + "'");
}

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::signal: return "signal";
    case TraceKind::shot: return "shot";
    case TraceKind::dark: return "dark";
  }
  return "signal";
}

TraceKind trace_kind_from_string(std::string_view text) {
  if (text == "signal") return TraceKind::signal;
  if (text == "shot") return TraceKind::shot;
  if (text == "dark") return TraceKind::dark;
  throw InputError("unknown trace kind '" + std::string(text) + "'");
}

std::string_view to_string(SidebandOrientation orientation) {
  return orientation == SidebandOrientation::lo_blue ? "lo_blue" : "lo_red";
}

SidebandOrientation orientation_from_string(std::string_view text) {
  if (text == "lo_blue") return SidebandOrientation::lo_blue;
  if (text == "lo_red") return SidebandOrientation::lo_red;
  throw InputError("unknown sideband_orientation '" + std::string(text) + "' (expected lo_blue|lo_red)");
}

Channel cavity_channel_for(ModeLabel label) {
  return label == ModeLabel::alpha ? Channel::cavity_y : Channel::cavity_z;
}

void validate(const PsdTrace& trace) {
  if (trace.freq_hz.size() != trace.values.size())
    throw InputError("trace: frequency and value arrays differ in length");
  if (trace.freq_hz.size() < 16) throw InputError("trace: need at least 16 bins");
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    if (!(trace.values[i] >= 0.0)) throw InputError("trace: negative PSD value at bin " + std::to_string(i));
    if (i > 0 && !(trace.freq_hz[i] > trace.freq_hz[i - 1]))
      throw InputError("trace: frequency grid not strictly increasing at bin " + std::to_string(i));
  }
}

void validate(const SidebandSpec& spec) {
  if (!(spec.n_true >= 0.0)) throw InputError("sideband: n_true must be >= 0");
  if (!(spec.area_scale_c > 0.0)) throw InputError("sideband: area_scale_c must be > 0");
  if (!(spec.linewidth > 0.0)) throw InputError("sideband: linewidth must be > 0");
  if (!(spec.center > 0.0)) throw InputError("sideband: center must be > 0");
}

SidebandSpec make_sideband(const LibrationMode& mode, double n_true, double area_scale_c,
                           double linewidth) {
  return SidebandSpec{mode, n_true, area_scale_c, linewidth, mode.omega};
}

std::vector<double> uniform_grid(double lo_hz, double hi_hz, std::size_t bins) {
  if (bins < 2 || !(hi_hz > lo_hz)) throw InputError("grid: need bins >= 2 and hi > lo");
  std::vector<double> grid(bins);
  const double step = (hi_hz - lo_hz) / static_cast<double>(bins - 1);
  for (std::size_t i = 0; i < bins; ++i) grid[i] = lo_hz + step * static_cast<double>(i);
  return grid;
}

std::vector<double> default_grid(double het_hz, double omega_max) {
  const double span = 1.5 * rad_to_hz(omega_max);
  return uniform_grid(het_hz - span, het_hz + span, 2048);
}

std::vector<double> sideband_grid(double het_hz, std::span<const double> mode_freqs_hz,
                                  double half_width_hz, double bin_hz) {
  if (!(half_width_hz > 0.0 && bin_hz > 0.0)) throw InputError("grid: half_width and bin must be > 0");
  std::vector<std::pair<double, double>> windows;
  for (double f : mode_freqs_hz) {
    windows.emplace_back(het_hz - f - half_width_hz, het_hz - f + half_width_hz);
    windows.emplace_back(het_hz + f - half_width_hz, het_hz + f + half_width_hz);
  }
  std::sort(windows.begin(), windows.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& w : windows) {
    if (!merged.empty() && w.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, w.second);
    else
      merged.push_back(w);
  }
  std::vector<double> grid;
  for (const auto& [lo, hi] : merged) {
    const auto bins = static_cast<std::size_t>(std::llround((hi - lo) / bin_hz)) + 1;
    for (std::size_t i = 0; i < bins; ++i) {
      const double f = lo + bin_hz * static_cast<double>(i);
      if (grid.empty() || f > grid.back()) grid.push_back(f);
    }
  }
  return grid;
}

std::vector<double> build_grid(const GridSpec& spec, double het_hz,
                               std::span<const double> mode_freqs_hz) {
  switch (spec.kind) {
    case GridSpec::Kind::uniform: return uniform_grid(spec.lo_hz, spec.hi_hz, spec.bins);
    case GridSpec::Kind::sidebands:
      return sideband_grid(het_hz, mode_freqs_hz, spec.half_width_hz, spec.bin_hz);
    case GridSpec::Kind::default_span: {
      double fmax = 0.0;
      for (double f : mode_freqs_hz) fmax = std::max(fmax, f);
      return default_grid(het_hz, hz_to_rad(fmax));
    }
  }
  return {};
}

namespace {

struct SidebandPlacement {
  double stokes_hz;
  double anti_stokes_hz;
};

SidebandPlacement place(double het_hz, double mode_hz, SidebandOrientation orientation) {
  if (orientation == SidebandOrientation::lo_blue) return {het_hz + mode_hz, het_hz - mode_hz};
  return {het_hz - mode_hz, het_hz + mode_hz};
}

void require_in_band(std::span<const double> grid_hz, double f) {
  if (grid_hz.empty() || f < grid_hz.front() || f > grid_hz.back())
    throw InputError("sideband outside analysis band");
}

std::vector<double> gain_on_grid(const DetectorResponse& resp, std::span<const double> grid_hz) {
  std::vector<double> gain(grid_hz.size(), 1.0);
  if (resp.freq_grid.empty()) return gain;
  for (std::size_t i = 0; i < grid_hz.size(); ++i) gain[i] = detector_gain(resp, hz_to_rad(grid_hz[i]));
  return gain;
}

}  // namespace

SidebandComponents sideband_components(const SidebandSpec& spec, std::span<const double> grid_hz,
                                       double het_hz, SidebandOrientation orientation) {
  validate(spec);
  const SidebandPlacement at = place(het_hz, rad_to_hz(spec.center), orientation);
  require_in_band(grid_hz, at.stokes_hz);
  require_in_band(grid_hz, at.anti_stokes_hz);
  const double hwhm_hz = 0.5 * rad_to_hz(spec.linewidth);
  SidebandComponents out;
  out.stokes.assign(grid_hz.size(), 0.0);
  out.anti_stokes.assign(grid_hz.size(), 0.0);
  out.stokes_center_hz = at.stokes_hz;
  out.anti_stokes_center_hz = at.anti_stokes_hz;
  const double c = spec.area_scale_c;
  kernels::lorentzian_accumulate(grid_hz, at.stokes_hz, hwhm_hz, c * (spec.n_true + 1.0), out.stokes);
  if (spec.n_true > 0.0)
    kernels::lorentzian_accumulate(grid_hz, at.anti_stokes_hz, hwhm_hz, c * spec.n_true, out.anti_stokes);
  return out;
}

std::vector<double> mean_spectrum(std::span<const SidebandSpec> specs, const NoiseProfile& noise,
                                  const DetectorResponse& resp, std::span<const double> grid_hz,
                                  const SynthesisOptions& opts) {
  const std::size_t n = grid_hz.size();
  // Optical part (relative to the detector): shot + background + sidebands.
  std::vector<double> optical(n, noise.shot_level);
  if (noise.cavity_noise_scale > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w_det = hz_to_rad(grid_hz[i]);
      const double fourier = std::abs(hz_to_rad(grid_hz[i] - opts.het_freq_hz));
      optical[i] += cavity_noise_background(noise, w_det, phase_noise_psd(noise, fourier));
    }
  }
  for (const SidebandSpec& spec : specs) {
    validate(spec);
    const SidebandPlacement at = place(opts.het_freq_hz, rad_to_hz(spec.center), opts.orientation);
    require_in_band(grid_hz, at.stokes_hz);
    require_in_band(grid_hz, at.anti_stokes_hz);
    const double hwhm_hz = 0.5 * rad_to_hz(spec.linewidth);
    const double c = spec.area_scale_c;
    kernels::lorentzian_accumulate(grid_hz, at.stokes_hz, hwhm_hz, c * (spec.n_true + 1.0), optical);
    if (spec.n_true > 0.0)
      kernels::lorentzian_accumulate(grid_hz, at.anti_stokes_hz, hwhm_hz, c * spec.n_true, optical);
  }
  const std::vector<double> gain = gain_on_grid(resp, grid_hz);
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) mean[i] = noise.dark_level + gain[i] * optical[i];
  return mean;
}

void apply_periodogram_noise(std::span<double> values, double averages, std::mt19937_64& rng) {
  if (!(averages >= 1.0)) throw InputError("averages must be >= 1");
  if (averages <= 1e6) {
    std::gamma_distribution<double> draw(averages, 1.0 / averages);
    for (double& v : values) v *= draw(rng);
  } else {
    std::normal_distribution<double> draw(0.0, 1.0 / std::sqrt(averages));
    for (double& v : values) v = std::max(0.0, v * (1.0 + draw(rng)));
  }
}

namespace {

PsdTrace finish_trace(std::span<const double> grid_hz, std::vector<double> mean,
                      std::uint64_t averages, const SynthesisOptions& opts, TraceKind kind) {
  PsdTrace trace;
  trace.freq_hz.assign(grid_hz.begin(), grid_hz.end());
  trace.values = std::move(mean);
  std::mt19937_64 rng(opts.seed);
  apply_periodogram_noise(trace.values, static_cast<double>(averages), rng);
  trace.meta.detuning_hz = opts.detuning_hz;
  trace.meta.het_freq_hz = opts.het_freq_hz;
  trace.meta.averages = averages;
  trace.meta.seed = opts.seed;
  trace.meta.channel = opts.channel;
  trace.meta.kind = kind;
  trace.meta.orientation = opts.orientation;
  return trace;
}

}  // namespace

PsdTrace synthesize_psd(std::span<const SidebandSpec> specs, const NoiseProfile& noise,
                        const DetectorResponse& resp, std::span<const double> grid_hz,
                        std::uint64_t averages, const SynthesisOptions& opts) {
  PsdTrace trace = finish_trace(grid_hz, mean_spectrum(specs, noise, resp, grid_hz, opts), averages,
                                opts, TraceKind::signal);
  for (const SidebandSpec& s : specs) trace.meta.modes.push_back({s.mode.label, rad_to_hz(s.mode.omega)});
  return trace;
}

PsdTrace synthesize_shot_trace(const NoiseProfile& noise, const DetectorResponse& resp,
                               std::span<const double> grid_hz, std::uint64_t averages,
                               const SynthesisOptions& opts) {
  NoiseProfile lo_only = noise;
  lo_only.cavity_noise_scale = 0.0;
  return finish_trace(grid_hz, mean_spectrum({}, lo_only, resp, grid_hz, opts), averages, opts,
                      TraceKind::shot);
}

PsdTrace synthesize_dark_trace(const NoiseProfile& noise, std::span<const double> grid_hz,
                               std::uint64_t averages, const SynthesisOptions& opts) {
  return finish_trace(grid_hz, std::vector<double>(grid_hz.size(), noise.dark_level), averages, opts,
                      TraceKind::dark);
}

unsigned long long trace_seed(unsigned long long seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<unsigned long long>(out[0]) << 32) | out[1];
}

namespace {

std::vector<ScanTrace> run_scan(const ScanConfig& base, std::span<const double> detunings_hz,
                                bool with_noise) {
  if (base.modes.empty()) throw InputError("scan: no modes configured");
  std::vector<double> mode_hz;
  std::vector<Channel> channels;
  for (const ScanMode& m : base.modes) {
    mode_hz.push_back(rad_to_hz(m.mode.omega));
    if (std::find(channels.begin(), channels.end(), m.channel) == channels.end())
      channels.push_back(m.channel);
  }
  const std::vector<double> grid = build_grid(base.grid, base.het_freq_hz, mode_hz);

  std::vector<ScanTrace> out;
  std::size_t index = 0;
  for (double detuning_hz : detunings_hz) {
    OpticalSetup optics = base.optics;
    optics.detuning = hz_to_rad(detuning_hz);
    NoiseProfile noise = base.noise;
    const double cavity_hz = base.orientation == SidebandOrientation::lo_blue
                                 ? base.het_freq_hz - detuning_hz
                                 : base.het_freq_hz + detuning_hz;
    noise.cavity_noise_center = hz_to_rad(cavity_hz);

    for (Channel channel : channels) {
      ScanTrace st;
      std::vector<SidebandSpec> specs;
      std::string failure;
      for (const ScanMode& m : base.modes) {
        if (m.channel != channel) continue;
        try {
          const double s_phi = phase_noise_psd(noise, m.mode.omega);
          const OccupationBudget budget = steady_state_occupation(m.mode, optics, s_phi);
          SidebandSpec spec;
          spec.mode = m.mode;
          spec.n_true = budget.n_total;
          spec.area_scale_c = m.area_scale_c;
          spec.linewidth = effective_linewidth(m.mode, optics, m.mode.omega);
          spec.center = effective_frequency(m.mode, optics, m.mode.omega);
          specs.push_back(spec);
          st.truth.push_back({m.mode.label, spec.n_true, spec.linewidth, spec.center, budget.n_phase});
        } catch (const PhysicsError& e) {
          failure = std::string(to_string(m.mode.label)) + ": " + e.what();
        }
      }
      SynthesisOptions opts;
      opts.het_freq_hz = base.het_freq_hz;
      opts.orientation = base.orientation;
      opts.channel = channel;
      opts.detuning_hz = detuning_hz;
      opts.seed = trace_seed(base.seed, index++);
      if (!failure.empty()) {
        specs.clear();
        st.truth.clear();
      }
      std::vector<double> mean = mean_spectrum(specs, noise, base.response, grid, opts);
      st.trace.freq_hz = grid;
      st.trace.values = std::move(mean);
      if (with_noise) {
        std::mt19937_64 rng(opts.seed);
        apply_periodogram_noise(st.trace.values, static_cast<double>(base.averages), rng);
      }
      TraceMeta& meta = st.trace.meta;
      meta.detuning_hz = detuning_hz;
      meta.het_freq_hz = base.het_freq_hz;
      meta.averages = base.averages;
      meta.seed = opts.seed;
      meta.channel = channel;
      meta.kind = TraceKind::signal;
      meta.orientation = base.orientation;
      for (const ScanMode& m : base.modes)
        if (m.channel == channel) meta.modes.push_back({m.mode.label, rad_to_hz(m.mode.omega)});
      if (!failure.empty()) {
        meta.valid = false;
        meta.note = failure;
      }
      out.push_back(std::move(st));
    }
  }
  return out;
}

}  // namespace

std::vector<ScanTrace> scan_series(const ScanConfig& base, std::span<const double> detunings_hz) {
  return run_scan(base, detunings_hz, true);
}

std::vector<ScanTrace> scan_series_mean(const ScanConfig& base, std::span<const double> detunings_hz) {
  return run_scan(base, detunings_hz, false);
}

}  // namespace librotor

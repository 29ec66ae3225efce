#pragma once

// Forward model for heterodyne power spectral densities: Stokes and
// anti-Stokes Lorentzians on shot/dark floors and the phase-noise pile-up,
// shaped by the detector response, with averaged-periodogram fluctuations.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "librotor/noise.hpp"
#include "librotor/physics.hpp"

namespace librotor {

enum class Channel { backscatter_y, cavity_y, cavity_z, split_x, split_y };
enum class TraceKind { signal, shot, dark };

/// lo_blue: the local oscillator sits above the tweezer, so anti-Stokes
/// light lands at het - Omega and Stokes at het + Omega. lo_red mirrors it.
enum class SidebandOrientation { lo_blue, lo_red };

std::string_view to_string(Channel channel);
Channel channel_from_string(std::string_view text);
std::string_view to_string(TraceKind kind);
TraceKind trace_kind_from_string(std::string_view text);
std::string_view to_string(SidebandOrientation orientation);
SidebandOrientation orientation_from_string(std::string_view text);

/// Channel that carries a mode in cavity transmission (alpha -> y, beta -> z).
Channel cavity_channel_for(ModeLabel label);

struct ModeHint {
  ModeLabel label = ModeLabel::alpha;
  double hint_hz = 0.0;
};

struct TraceMeta {
  double detuning_hz = 0.0;
  double het_freq_hz = 0.0;
  std::uint64_t averages = 0;  // 0: unknown
  unsigned long long seed = 0;
  Channel channel = Channel::backscatter_y;
  TraceKind kind = TraceKind::signal;
  SidebandOrientation orientation = SidebandOrientation::lo_blue;
  bool valid = true;
  std::string note;
  std::vector<ModeHint> modes;
};

struct PsdTrace {
  std::vector<double> freq_hz;
  std::vector<double> values;
  TraceMeta meta;
};

/// Throws InputError: lengths differ or < 16, grid not increasing, negative values.
void validate(const PsdTrace& trace);

struct SidebandSpec {
  LibrationMode mode;
  double n_true = 0.0;
  double area_scale_c = 1.0;  // PSD*Hz
  double linewidth = 0.0;     // rad/s (FWHM in angular units)
  double center = 0.0;        // rad/s, observed mechanical frequency
};

void validate(const SidebandSpec& spec);

/// Spec whose centre is the bare mode frequency.
SidebandSpec make_sideband(const LibrationMode& mode, double n_true, double area_scale_c,
                           double linewidth);

struct SynthesisOptions {
  double het_freq_hz = 4.99814e6;
  SidebandOrientation orientation = SidebandOrientation::lo_blue;
  Channel channel = Channel::backscatter_y;
  double detuning_hz = 0.0;  // recorded in the metadata only
  unsigned long long seed = 0;
};

std::vector<double> uniform_grid(double lo_hz, double hi_hz, std::size_t bins);
/// 2048 bins spanning het +- 1.5 omega_max.
std::vector<double> default_grid(double het_hz, double omega_max);
/// Union of uniform windows of +-half_width around het +- each mode frequency.
std::vector<double> sideband_grid(double het_hz, std::span<const double> mode_freqs_hz,
                                  double half_width_hz, double bin_hz);

struct SidebandComponents {
  std::vector<double> stokes;
  std::vector<double> anti_stokes;
  double stokes_center_hz = 0.0;
  double anti_stokes_center_hz = 0.0;
};

/// Noise-free Lorentzians of one mode on the grid, before detector gain.
SidebandComponents sideband_components(const SidebandSpec& spec, std::span<const double> grid_hz,
                                       double het_hz, SidebandOrientation orientation);

/// Deterministic mean: dark + gain * (shot + phase-noise background + sidebands).
std::vector<double> mean_spectrum(std::span<const SidebandSpec> specs, const NoiseProfile& noise,
                                  const DetectorResponse& resp, std::span<const double> grid_hz,
                                  const SynthesisOptions& opts);

/// Multiplies each bin by an independent draw with unit mean and relative
/// standard deviation 1/sqrt(averages): Gamma(shape = averages) up to 1e6
/// averages, Gaussian beyond.
void apply_periodogram_noise(std::span<double> values, double averages, std::mt19937_64& rng);

PsdTrace synthesize_psd(std::span<const SidebandSpec> specs, const NoiseProfile& noise,
                        const DetectorResponse& resp, std::span<const double> grid_hz,
                        std::uint64_t averages, const SynthesisOptions& opts);

/// Calibration spectra: local oscillator only (dark + gain * shot), and dark.
PsdTrace synthesize_shot_trace(const NoiseProfile& noise, const DetectorResponse& resp,
                               std::span<const double> grid_hz, std::uint64_t averages,
                               const SynthesisOptions& opts);
PsdTrace synthesize_dark_trace(const NoiseProfile& noise, std::span<const double> grid_hz,
                               std::uint64_t averages, const SynthesisOptions& opts);

// Detuning scans.

struct GridSpec {
  enum class Kind { default_span, uniform, sidebands } kind = Kind::default_span;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  std::size_t bins = 2048;
  double half_width_hz = 0.0;
  double bin_hz = 0.0;
};

std::vector<double> build_grid(const GridSpec& spec, double het_hz,
                               std::span<const double> mode_freqs_hz);

struct ScanMode {
  LibrationMode mode;
  double area_scale_c = 1.0;
  Channel channel = Channel::backscatter_y;
};

struct ScanConfig {
  OpticalSetup optics;
  std::vector<ScanMode> modes;
  NoiseProfile noise;
  DetectorResponse response;  // empty: flat unit gain over the grid
  GridSpec grid;
  std::uint64_t averages = 100;
  unsigned long long seed = 0;
  double het_freq_hz = 4.99814e6;
  SidebandOrientation orientation = SidebandOrientation::lo_blue;
};

/// Physics-side values used to synthesize one mode of one trace.
struct SidebandTruth {
  ModeLabel label = ModeLabel::alpha;
  double n = 0.0;
  double linewidth = 0.0;  // rad/s
  double center = 0.0;     // rad/s
  double n_phase = 0.0;
};

struct ScanTrace {
  PsdTrace trace;
  std::vector<SidebandTruth> truth;
};

/// Seed used for trace `index` of a series started from `seed`.
unsigned long long trace_seed(unsigned long long seed, std::size_t index);

/// One trace per detuning and channel. A detuning without net cooling (or
/// with a spring instability) yields a noise-only trace marked invalid.
std::vector<ScanTrace> scan_series(const ScanConfig& base, std::span<const double> detunings_hz);

/// scan_series without fluctuations.
std::vector<ScanTrace> scan_series_mean(const ScanConfig& base, std::span<const double> detunings_hz);

}  // namespace librotor

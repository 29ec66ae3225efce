#pragma once

// Run configuration: everything a simulate/analyze run needs, in one JSON
// file. The structs below hold boundary units (Hz) so that a load/save
// round trip is exact; make_* converts to the internal rad/s types.
// Heating rates are phonons/s everywhere.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "librotor/io.hpp"
#include "librotor/physics.hpp"
#include "librotor/scenarios.hpp"
#include "librotor/spectrum.hpp"
#include "librotor/thermometry.hpp"

namespace librotor {

struct OpticsConfig {
  std::complex<double> e_tw0;
  std::complex<double> e_cav0;
  double kappa_hz = 0.0;
  double detuning_hz = 0.0;
  double wavelength = 1550e-9;
  double pol_angle_phi = 0.0;
  double n_cav = 0.0;
  double finesse = 0.0;
  double fsr_hz = 0.0;
  double waist_x = 0.0;
  double waist_y = 0.0;
  double waist_cav = 0.0;
};

struct NotchConfig {
  double center_hz = 0.0;
  double depth_db = 0.0;
  double width_hz = 0.0;
};

struct NoiseConfig {
  double shot_level = 1.0;
  double dark_level = 0.0;
  double phase_noise_base = 1e-9;
  std::vector<NotchConfig> notches;
  double cavity_noise_width_hz = 0.0;
  double cavity_noise_scale = 0.0;
};

struct ModeConfig {
  ModeLabel label = ModeLabel::alpha;
  double gamma_thermal = 0.0;  // phonons/s
  double gamma_recoil = 0.0;   // phonons/s
  double gamma_intrinsic_hz = 0.0;
  double area_scale_c = 1.0;
  Channel channel = Channel::backscatter_y;
};

struct ResponseConfig {
  std::vector<double> freq_hz;  // empty: flat unit gain
  std::vector<double> gain;
};

struct SynthesisConfig {
  std::vector<double> detunings_hz;  // empty: the optics detuning only
  GridSpec grid;
  std::uint64_t averages = 100;
  std::uint64_t calibration_averages = 10000;
  unsigned long long seed = 0;
  SidebandOrientation orientation = SidebandOrientation::lo_blue;
  double het_freq_hz = 4.99814e6;
};

struct AnalysisConfig {
  OccupationMethod method = OccupationMethod::ratio;
  std::optional<double> c;  // fixed C for diffcal; calibrated from the traces otherwise
  double c_err = 0.0;
  double search_half_width_hz = 30e3;
  double window_fwhm = 10.0;
  double max_window_half_width_hz = 0.0;
  OutlierOptions outliers;
  CalibrationOptions calibration;
  TemperatureConvention temperature = TemperatureConvention::bose;
};

struct RunConfig {
  RotorModel rotor;
  OpticsConfig optics;
  std::vector<ModeConfig> modes;
  NoiseConfig noise;
  ResponseConfig response;
  SynthesisConfig synthesis;
  AnalysisConfig analysis;
};

/// Throws InputError naming the offending field path ("optics.kappa_hz: ...").
void validate(const RunConfig& config);

/// Rejects unknown keys and missing required ones, then validates.
RunConfig config_from_json(const io::json& j);
io::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

OpticalSetup make_optics(const RunConfig& config);
NoiseProfile make_noise(const RunConfig& config);
DetectorResponse make_response(const RunConfig& config);
ScanConfig make_scan_config(const RunConfig& config);
std::vector<double> scan_detunings_hz(const RunConfig& config);
ScanAnalysisOptions make_analysis_options(const RunConfig& config);

/// Boundary form of a built-in scenario, ready to save as a config file.
RunConfig run_config_from_scenario(const Scenario& scenario);

}  // namespace librotor

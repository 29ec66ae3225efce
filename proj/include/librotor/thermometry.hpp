#pragma once

// Sideband-asymmetry thermometry: detector calibration, per-trace sideband
// fits, the area scale C, occupations with propagated errors, and the
// detuning-scan analysis that feeds the scan fits.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "librotor/fitting.hpp"
#include "librotor/noise.hpp"
#include "librotor/physics.hpp"
#include "librotor/spectrum.hpp"

namespace librotor {

enum class OccupationMethod { ratio, difference_calibrated };

std::string_view to_string(OccupationMethod method);
/// Accepts "ratio", "diffcal" and "difference_calibrated".
OccupationMethod occupation_method_from_string(std::string_view text);

struct CalibrationOptions {
  int median_bins = 5;
  /// Moving mean applied after the median; 0 disables it.
  int mean_bins = 65;
  double max_invalid_fraction = 0.2;
};

/// Gain = shot - dark per bin, smoothed. Bins with shot <= dark are dropped
/// and bridged by interpolation. Throws AnalysisError("calibration traces
/// inconsistent") when too many bins are invalid.
DetectorResponse calibrate_response(const PsdTrace& shot, const PsdTrace& dark,
                                    const CalibrationOptions& options = {});

/// Divides every bin by the interpolated gain. An empty response is unit gain.
PsdTrace normalize(const PsdTrace& trace, const DetectorResponse& resp);

struct OccupationResult {
  ModeLabel label = ModeLabel::alpha;
  OccupationMethod method = OccupationMethod::ratio;
  double n = 0.0;
  double n_err = 0.0;
  double n_raw = 0.0;          // before clamping a slightly negative anti-Stokes area
  bool clamped = false;        // n_raw < 0 was reported as n = 0 (lower error 0, upper n_err)
  double n_err_from_c = 0.0;   // part of n_err due to the C calibration (diffcal only)
  double c_factor = 0.0;
  double c_factor_err = 0.0;
  double stokes_area = 0.0;
  double stokes_area_err = 0.0;
  double anti_stokes_area = 0.0;
  double anti_stokes_area_err = 0.0;
  double area_covariance = 0.0;  // cov(A_S, A_aS)
  double ground_state_prob = 1.0;
  double ground_state_prob_err = 0.0;
};

struct AreaEstimate {
  double stokes = 0.0;
  double anti_stokes = 0.0;
  double var_stokes = 0.0;
  double var_anti_stokes = 0.0;
  double covariance = 0.0;
};

struct CFactor {
  double value = 0.0;
  double err = 0.0;
};

/// Occupation from sideband areas. diffcal needs c. Throws
/// AnalysisError("unphysical asymmetry") when A_S <= A_aS or when A_aS is
/// negative by more than two standard errors.
OccupationResult occupation_from_areas(const AreaEstimate& areas, OccupationMethod method,
                                       std::optional<CFactor> c = std::nullopt);

struct ExtractOptions {
  OccupationMethod method = OccupationMethod::ratio;
  std::optional<CFactor> c_override;
  double search_half_width_hz = 30e3;  // around the hinted sideband, for the first guess
  double window_fwhm = 10.0;           // fit window half-width in linewidths
  double max_window_half_width_hz = 0.0;  // 0: no cap
};

struct TraceOccupation {
  OccupationResult occupation;
  SidebandPairFit fit;
  PsdTrace normalized;  // the trace the fit saw
};

/// Normalise, fit the sideband pair near the hinted mode frequency and
/// convert areas to an occupation.
TraceOccupation extract_occupation(const PsdTrace& trace, const DetectorResponse& resp,
                                   double mode_freq_hint_hz, const ExtractOptions& options = {},
                                   ModeLabel label = ModeLabel::alpha);

struct CCalibration {
  double c = 0.0;
  double c_err = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool inconsistent = false;       // p < 1e-3: reported, not fatal
  std::vector<double> normalized;  // (A_S - A_aS) / C per spectrum
};

/// Inverse-variance mean of A_S - A_aS over a series (>= 2 spectra).
CCalibration calibrate_c(std::span<const AreaEstimate> areas);

struct PlotData {
  std::vector<double> freq_hz;
  std::vector<double> data;
  std::vector<double> fit;
  std::vector<double> residual;
};

/// Bins of both fit windows with data, model and residual.
PlotData plot_data(const PsdTrace& normalized, const SidebandPairFit& fit);

// Scan analysis.

struct ScanAnalysisOptions {
  DetectorResponse response;  // empty: unit gain
  ExtractOptions extract;
  OutlierOptions outliers;
  std::map<ModeLabel, double> gamma_recoil;  // phonons/s, optional per mode
  EulerBranch branch = EulerBranch::gamma_half_pi;
  TemperatureConvention convention = TemperatureConvention::bose;
};

struct TraceAnalysis {
  std::size_t index = 0;
  ModeLabel label = ModeLabel::alpha;
  Channel channel = Channel::backscatter_y;
  double detuning_hz = 0.0;
  std::optional<TraceOccupation> result;
  std::string error;
};

struct ModeScanReport {
  ModeLabel label = ModeLabel::alpha;
  std::vector<Channel> channels;
  int used_traces = 0;
  CCalibration c;
  ScanFitResult frequency;
  ScanFitResult linewidth;
  ScanFitResult occupation;
  OccupationCurveParams occupation_params;
  double model_min_detuning_hz = 0.0;
  double model_min_n = 0.0;
  double best_n = 0.0;  // lowest measured occupation
  double best_n_err = 0.0;
  double best_detuning_hz = 0.0;
  InertiaAxis axis = InertiaAxis::b;
  std::optional<double> inertia;  // needs a non-zero cavity field
  std::optional<DerivedScalars> derived;  // at the lowest measured occupation
};

struct ScanReport {
  std::vector<TraceAnalysis> traces;
  std::vector<ModeScanReport> modes;
};

/// Needs >= 4 analysable traces per mode; throws FitError("underdetermined
/// scan") otherwise. Detunings come from the trace metadata; kappa and the
/// fields from the setup.
ScanReport analyze_scan(std::span<const PsdTrace> traces, const OpticalSetup& setup,
                        const ScanAnalysisOptions& options = {});

}  // namespace librotor

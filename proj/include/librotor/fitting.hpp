#pragma once

// Model fitting: area-normalised Lorentzian peaks, mirrored sideband
// pairs, and the detuning-scan models for linewidth, optical spring and
// occupation.
//
// Spectral fits use the averaged-periodogram variance model,
// var = model^2 / averages, through iteratively reweighted least squares
// (equivalent to the Gamma likelihood of averaged bins). With unknown
// averages (0) they use unit weights and scale the covariance by the
// reduced chi-square.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "librotor/spectrum.hpp"

namespace librotor {

struct FitWindow {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

struct LorentzianGuess {
  double center = 0.0;  // Hz
  double linewidth_fwhm = 0.0;
  double area = 0.0;
  double offset = 0.0;
};

struct LorentzianFit {
  double center = 0.0;          // Hz
  double linewidth_fwhm = 0.0;  // Hz
  double area = 0.0;            // PSD * Hz
  double offset = 0.0;          // PSD
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // (center, fwhm, area, offset)
  bool converged = false;
  double residual_rms = 0.0;
  double reduced_chi2 = 0.0;
  int iterations = 0;

  double center_err() const { return std::sqrt(covariance(0, 0)); }
  double linewidth_err() const { return std::sqrt(covariance(1, 1)); }
  double area_err() const { return std::sqrt(covariance(2, 2)); }
  double offset_err() const { return std::sqrt(covariance(3, 3)); }
  double evaluate(double f_hz) const;
};

/// Initial guess from the data: highest bin (lower frequency on ties),
/// half-maximum crossings, window-edge median offset, trapezoid area.
LorentzianGuess guess_lorentzian(std::span<const double> freq_hz, std::span<const double> values);

LorentzianFit fit_lorentzian(std::span<const double> freq_hz, std::span<const double> values,
                             double averages, std::optional<LorentzianGuess> init = std::nullopt);
LorentzianFit fit_lorentzian(const PsdTrace& trace, FitWindow window,
                             std::optional<LorentzianGuess> init = std::nullopt);

/// Stokes and anti-Stokes peaks of one mode: mirrored about the heterodyne
/// frequency with a common linewidth, independent areas and offsets.
struct SidebandPairFit {
  double mode_freq_hz = 0.0;
  double linewidth_fwhm = 0.0;
  double stokes_area = 0.0;
  double anti_stokes_area = 0.0;
  double stokes_offset = 0.0;
  double anti_stokes_offset = 0.0;
  // (mode_freq, fwhm, stokes_area, anti_stokes_area, stokes_offset, anti_stokes_offset)
  Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Zero();
  bool converged = false;
  double residual_rms = 0.0;
  double reduced_chi2 = 0.0;
  int iterations = 0;
  double het_freq_hz = 0.0;
  SidebandOrientation orientation = SidebandOrientation::lo_blue;
  FitWindow stokes_window;
  FitWindow anti_stokes_window;

  double mode_freq_err() const { return std::sqrt(covariance(0, 0)); }
  double linewidth_err() const { return std::sqrt(covariance(1, 1)); }
  double stokes_area_err() const { return std::sqrt(covariance(2, 2)); }
  double anti_stokes_area_err() const { return std::sqrt(covariance(3, 3)); }
  double stokes_center_hz() const;
  double anti_stokes_center_hz() const;
  /// Model value at f, using the offset of whichever window is nearer.
  double evaluate(double f_hz) const;
};

struct SidebandPairGuess {
  double mode_freq_hz = 0.0;
  double linewidth_fwhm = 0.0;
  double stokes_area = 0.0;
  double anti_stokes_area = 0.0;
  double stokes_offset = 0.0;
  double anti_stokes_offset = 0.0;
};

SidebandPairFit fit_sideband_pair(const PsdTrace& trace, double het_hz, SidebandOrientation orientation,
                                  FitWindow stokes_window, FitWindow anti_stokes_window,
                                  const SidebandPairGuess& init);

// Detuning-scan fits. Detunings and rates in rad/s.

struct ScanPoint {
  double detuning = 0.0;
  double value = 0.0;
  double err = 0.0;  // 1 sigma, > 0
};

/// Each round refits and drops the single worst point whose normalised
/// residual exceeds `sigma`; dropped points stay dropped.
struct OutlierOptions {
  bool enabled = true;
  double sigma = 5.0;
  int max_rounds = 2;
};

struct ScanFitResult {
  double g_abs = 0.0;
  double g_abs_err = 0.0;
  double omega_bare = 0.0;
  double omega_bare_err = 0.0;
  double gamma_intrinsic = 0.0;
  double gamma_intrinsic_err = 0.0;
  double gamma_total_heating = 0.0;  // phonons/s
  double gamma_total_heating_err = 0.0;
  std::optional<double> gamma_thermal;  // total minus recoil, when recoil is known
  double n_phase = 0.0;
  double n_phase_err = 0.0;
  std::vector<std::string> parameter_names;  // order of the covariance
  Eigen::MatrixXd covariance;
  std::vector<double> residuals;  // (data - model) / err at every input point
  std::vector<bool> inlier;
  double chi2 = 0.0;
  int dof = 0;
  bool converged = false;
};

ScanFitResult fit_scan_linewidth(std::span<const ScanPoint> points, double omega, double kappa,
                                 const OutlierOptions& outliers = {});

ScanFitResult fit_scan_frequency(std::span<const ScanPoint> points, double kappa,
                                 const OutlierOptions& outliers = {});

/// The sideband rates scale as |g|^2, so the occupation curve only
/// constrains heating / |g|^2: the coupling is pinned (typically from the
/// linewidth fit) and its error is added to the heating-rate error.
struct OccupationCurveParams {
  double omega = 0.0;
  double g_abs = 0.0;
  double g_abs_err = 0.0;
  double gamma_recoil = 0.0;  // phonons/s
};

ScanFitResult fit_occupation_curve(std::span<const ScanPoint> points, const OccupationCurveParams& params,
                                   double kappa, const OutlierOptions& outliers = {});

/// Occupation model of fit_occupation_curve evaluated at a detuning.
double occupation_model(const ScanFitResult& fit, const OccupationCurveParams& params, double kappa,
                        double detuning);

/// Detuning minimising the fitted occupation, by golden-section search on
/// [lo, hi] after a coarse grid pass.
double occupation_minimum(const ScanFitResult& fit, const OccupationCurveParams& params, double kappa,
                          double lo, double hi);

/// d/dOmega of spring_kernel(Omega, kappa, Delta, Omega).
double spring_kernel_derivative(double omega, double kappa, double detuning);

}  // namespace librotor

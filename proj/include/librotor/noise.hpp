#pragma once

// Parametric noise floors seen by heterodyne detection: white shot and
// dark levels, laser phase noise with feedback notches, the phase-noise
// pile-up around the cavity resonance, and the detector's relative gain.

#include <vector>

namespace librotor {

struct Notch {
  double center = 0.0;    // rad/s, Fourier frequency of the phase noise
  double depth_db = 0.0;  // suppression at the centre
  double width = 0.0;     // rad/s, full width at half depth
};

struct NoiseProfile {
  double shot_level = 1.0;
  double dark_level = 0.0;
  double phase_noise_base = 1e-9;  // rad^2/Hz, single sided
  std::vector<Notch> notches;
  double cavity_noise_center = 0.0;  // rad/s, in the detection band
  double cavity_noise_width = 0.0;   // rad/s, FWHM
  double cavity_noise_scale = 0.0;   // PSD units per (rad^2/Hz) at the bump centre
  unsigned long long seed = 0;
};

void validate(const NoiseProfile& profile);

struct DetectorResponse {
  std::vector<double> freq_grid;  // rad/s, strictly increasing
  std::vector<double> gain;       // > 0
};

void validate(const DetectorResponse& resp);

/// Flat unit response across [lo, hi] (rad/s).
DetectorResponse flat_response(double lo, double hi, double gain = 1.0);

/// Suppression in dB of all notches at omega (sum of inverted Lorentzians).
double notch_suppression_db(const NoiseProfile& profile, double omega);

double phase_noise_psd(const NoiseProfile& profile, double omega);

double cavity_noise_background(const NoiseProfile& profile, double omega, double s_phi);

/// Linear interpolation of the gain. Throws InputError("uncalibrated
/// frequency") outside the calibrated span.
double detector_gain(const DetectorResponse& resp, double omega);

}  // namespace librotor

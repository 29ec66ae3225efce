#include "librotor/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "librotor/error.hpp"

namespace librotor {

void validate(const NoiseProfile& profile) {
  if (!(profile.dark_level >= 0.0)) throw InputError("noise: dark_level must be >= 0");
  if (!(profile.shot_level > profile.dark_level))
    throw InputError("noise: shot_level must exceed dark_level");
  if (!(profile.phase_noise_base >= 0.0)) throw InputError("noise: phase_noise_base must be >= 0");
  for (std::size_t i = 0; i < profile.notches.size(); ++i) {
    const Notch& n = profile.notches[i];
    if (!(n.depth_db >= 0.0))
      throw InputError("noise: notches[" + std::to_string(i) + "].depth_db must be >= 0");
    if (!(n.width > 0.0))
      throw InputError("noise: notches[" + std::to_string(i) + "].width must be > 0");
  }
  if (profile.cavity_noise_scale != 0.0 && !(profile.cavity_noise_width > 0.0))
    throw InputError("noise: cavity_noise_width must be > 0");
  if (!(profile.cavity_noise_scale >= 0.0)) throw InputError("noise: cavity_noise_scale must be >= 0");
}

void validate(const DetectorResponse& resp) {
  if (resp.freq_grid.size() < 2 || resp.freq_grid.size() != resp.gain.size())
    throw InputError("detector response: need >= 2 grid points and matching gain array");
  for (std::size_t i = 0; i < resp.gain.size(); ++i) {
    if (!(resp.gain[i] > 0.0)) throw InputError("detector response: gain must be > 0 everywhere");
    if (i > 0 && !(resp.freq_grid[i] > resp.freq_grid[i - 1]))
      throw InputError("detector response: grid must be strictly increasing");
  }
}

DetectorResponse flat_response(double lo, double hi, double gain) {
  return DetectorResponse{{lo, hi}, {gain, gain}};
}

double notch_suppression_db(const NoiseProfile& profile, double omega) {
  double db = 0.0;
  for (const Notch& n : profile.notches) {
    const double hw = 0.5 * n.width;
    const double d = omega - n.center;
    db += n.depth_db * hw * hw / (d * d + hw * hw);
  }
  return db;
}

double phase_noise_psd(const NoiseProfile& profile, double omega) {
  if (profile.notches.empty()) return profile.phase_noise_base;
  return profile.phase_noise_base * std::pow(10.0, -0.1 * notch_suppression_db(profile, omega));
}

double cavity_noise_background(const NoiseProfile& profile, double omega, double s_phi) {
  if (profile.cavity_noise_scale == 0.0 || s_phi == 0.0) return 0.0;
  const double hw = 0.5 * profile.cavity_noise_width;
  const double d = omega - profile.cavity_noise_center;
  return profile.cavity_noise_scale * s_phi * hw * hw / (d * d + hw * hw);
}

double detector_gain(const DetectorResponse& resp, double omega) {
  const auto& x = resp.freq_grid;
  if (x.empty() || omega < x.front() || omega > x.back()) throw InputError("uncalibrated frequency");
  auto it = std::lower_bound(x.begin(), x.end(), omega);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  if (*it == omega) return resp.gain[i];
  const double t = (omega - x[i - 1]) / (x[i] - x[i - 1]);
  return resp.gain[i - 1] + t * (resp.gain[i] - resp.gain[i - 1]);
}

}  // namespace librotor

#include "librotor/scenarios.hpp"

#include <cmath>

#include "librotor/error.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace {

using constants::epsilon0;
using constants::hbar;

constexpr double kKappa = hz_to_rad(32.4e3);
constexpr double kHet = 4.99814e6;
constexpr double kAreaScale = 5e4;  // PSD*Hz relative to shot noise
constexpr double kChiC = 1.1;

struct RotorFit {
  RotorModel rotor;
  std::complex<double> e_cav;
};

// Susceptibility differences that put each mode at its frequency, and the
// cavity field that gives the alpha coupling.
RotorFit build_rotor(double inertia_a, double inertia_b, double volume, double e_tw, double omega_alpha,
                     double omega_beta, double g_alpha) {
  RotorFit out;
  RotorModel& r = out.rotor;
  r.inertia_a = inertia_a;
  r.inertia_b = inertia_b;
  r.inertia_c = inertia_a + inertia_b;
  r.volume = volume;
  r.gamma_euler_branch = EulerBranch::gamma_half_pi;
  const double field2 = epsilon0 * volume * e_tw * e_tw;
  const double dchi_alpha = 2.0 * inertia_b * omega_alpha * omega_alpha / field2;
  const double dchi_beta = 2.0 * inertia_a * omega_beta * omega_beta / field2;
  if (!(dchi_alpha >= dchi_beta)) throw InputError("scenario: beta libration needs the smaller anisotropy");
  r.chi_c = kChiC;
  r.chi_a = kChiC - dchi_alpha;
  r.chi_b = kChiC - dchi_beta;
  const double zpf = zero_point_amplitude(inertia_b, omega_alpha);
  out.e_cav = g_alpha * hbar / (zpf * epsilon0 * volume / 4.0 * dchi_alpha * e_tw);
  return out;
}

Scenario assemble(std::string name, const RotorModel& rotor, const OpticalSetup& optics,
                  const NoiseProfile& noise, const std::vector<ModeTarget>& targets,
                  std::vector<double> detunings_hz, double reference_hz) {
  Scenario s;
  s.name = std::move(name);
  s.rotor = rotor;
  s.optics = optics;
  s.targets = targets;
  s.detunings_hz = std::move(detunings_hz);
  s.reference_detuning_hz = reference_hz;
  ScanConfig& c = s.scan;
  c.optics = optics;
  c.noise = noise;
  c.grid.kind = GridSpec::Kind::sidebands;
  c.grid.half_width_hz = 100e3;
  c.grid.bin_hz = 10.0;
  c.averages = 100;
  c.seed = 20240601;
  c.het_freq_hz = kHet;
  c.orientation = SidebandOrientation::lo_blue;
  for (const ModeTarget& t : targets) {
    ScanMode m;
    m.mode = make_mode(t.label, rotor, optics, t.gamma_thermal, t.gamma_recoil, hz_to_rad(5.0));
    m.area_scale_c = kAreaScale;
    m.channel = t.channel;
    c.modes.push_back(m);
  }
  return s;
}

}  // namespace

double coupling_for_occupation(double n_target, double omega, double kappa, double detuning,
                               double heating_rate, double n_phase) {
  const SidebandRates unit = sideband_rates(1.0, omega, kappa, detuning);
  const double net = unit.a_minus - unit.a_plus;
  if (!(net > 0.0)) throw PhysicsError("no net cooling at this detuning");
  // n - n_phi = (Gamma + g^2 a+) / (g^2 (a- - a+))  =>  g^2 = Gamma / ((n - n_phi) net - a+)
  const double denom = (n_target - n_phase) * net - unit.a_plus;
  if (!(denom > 0.0)) throw PhysicsError("target occupation below the back-action limit");
  return std::sqrt(heating_rate / denom);
}

Scenario replica_1d() {
  const double omega_alpha = hz_to_rad(1030e3);
  const double reference_hz = 1042e3;
  ModeTarget alpha;
  alpha.label = ModeLabel::alpha;
  alpha.omega = omega_alpha;
  alpha.gamma_recoil = 3.2e3;
  alpha.gamma_thermal = 3.6e3;
  alpha.n_target = 0.21;
  alpha.channel = Channel::cavity_y;

  OpticalSetup optics;
  optics.kappa = kKappa;
  optics.detuning = hz_to_rad(reference_hz);
  optics.wavelength = 1550e-9;
  optics.waist_x = 1.17e-6;
  optics.waist_y = 0.98e-6;
  optics.n_cav = 0.0;
  const double e_tw = field_amplitude_from_power(2.7, optics.waist_x, optics.waist_y);
  optics.e_tw0 = e_tw;

  const double g = coupling_for_occupation(0.21, omega_alpha, kKappa, optics.detuning,
                                           alpha.gamma_thermal + alpha.gamma_recoil, 0.0);
  // Cluster of three 119 nm spheres.
  const double r = 59.5e-9;
  const double volume = 3.0 * 4.0 / 3.0 * kPi * r * r * r;
  const double inertia_b = 3.3e-32;
  const RotorFit fit = build_rotor(0.5 * inertia_b, inertia_b, volume, e_tw, omega_alpha, 0.9 * omega_alpha, g);
  optics.e_cav0 = fit.e_cav;

  NoiseProfile noise;
  noise.shot_level = 1.0;
  noise.dark_level = 0.05;
  noise.phase_noise_base = 1e-9;

  std::vector<double> detunings{950e3, 965e3, 980e3, 995e3, 1010e3, 1025e3,
                                1030e3, 1042e3, 1055e3, 1070e3, 1085e3, 1100e3};
  return assemble("replica_1d", fit.rotor, optics, noise, {alpha}, std::move(detunings), reference_hz);
}

Scenario replica_2d() {
  const double omega_alpha = hz_to_rad(1035e3);
  const double omega_beta = hz_to_rad(978e3);
  const double reference_hz = 984e3;

  OpticalSetup optics;
  optics.kappa = kKappa;
  optics.detuning = hz_to_rad(reference_hz);
  optics.wavelength = 1550e-9;
  optics.waist_x = 1.17e-6;
  optics.waist_y = 0.98e-6;
  optics.n_cav = 1e8;
  const double e_tw = field_amplitude_from_power(2.7, optics.waist_x, optics.waist_y);
  optics.e_tw0 = e_tw;

  // Feedback notch at the alpha frequency; base level set for n_phi(beta) = 0.38.
  NoiseProfile noise;
  noise.shot_level = 1.0;
  noise.dark_level = 0.05;
  noise.notches.push_back({omega_alpha, 30.0, hz_to_rad(10e3)});
  noise.phase_noise_base = 1.0;
  const double suppression_beta = phase_noise_psd(noise, omega_beta);
  noise.phase_noise_base = 0.38 * kKappa / (optics.n_cav * suppression_beta);

  ModeTarget alpha;
  alpha.label = ModeLabel::alpha;
  alpha.omega = omega_alpha;
  alpha.gamma_recoil = 4e3;
  alpha.gamma_thermal = 14e3;
  alpha.n_target = 1.02;
  alpha.n_phase = phase_noise_occupation(phase_noise_psd(noise, omega_alpha), optics.n_cav, kKappa);
  alpha.channel = Channel::cavity_y;

  ModeTarget beta;
  beta.label = ModeLabel::beta;
  beta.omega = omega_beta;
  beta.gamma_recoil = 4e3;
  beta.gamma_thermal = 16e3;
  beta.n_target = 0.73;
  beta.n_phase = phase_noise_occupation(phase_noise_psd(noise, omega_beta), optics.n_cav, kKappa);
  beta.channel = Channel::cavity_z;

  const double g_alpha = coupling_for_occupation(alpha.n_target, omega_alpha, kKappa, optics.detuning,
                                                 alpha.gamma_thermal + alpha.gamma_recoil, alpha.n_phase);
  const double g_beta = coupling_for_occupation(beta.n_target, omega_beta, kKappa, optics.detuning,
                                                beta.gamma_thermal + beta.gamma_recoil, beta.n_phase);

  // Both couplings come from one cavity field, g ~ sqrt(I) Omega^(3/2), which
  // fixes the beta-axis inertia relative to the dumbbell's I_b.
  const double d = 156e-9;
  const double inertia_b = dumbbell_inertia(d, constants::silica_density);
  const double ratio = (g_alpha / g_beta) / std::pow(omega_alpha / omega_beta, 1.5);
  const double inertia_a = inertia_b / (ratio * ratio);
  const double volume = 2.0 * 4.0 / 3.0 * kPi * std::pow(0.5 * d, 3);
  const RotorFit fit = build_rotor(inertia_a, inertia_b, volume, e_tw, omega_alpha, omega_beta, g_alpha);
  optics.e_cav0 = fit.e_cav;

  std::vector<double> detunings{940e3, 955e3, 968e3, 975e3, 984e3, 995e3,
                                1005e3, 1015e3, 1025e3, 1035e3, 1043e3, 1055e3};
  return assemble("replica_2d", fit.rotor, optics, noise, {alpha, beta}, std::move(detunings), reference_hz);
}

}  // namespace librotor

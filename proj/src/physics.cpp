#include "librotor/physics.hpp"

#include <cmath>
#include <string>

#include "librotor/error.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace {

using constants::epsilon0;
using constants::hbar;

double sq(double x) { return x * x; }

// Lorentzian denominators (kappa/2)^2 + (w +- d)^2.
double cavity_denominator(double kappa, double x) { return sq(0.5 * kappa) + sq(x); }

}  // namespace

std::string_view to_string(ModeLabel label) {
  return label == ModeLabel::alpha ? "alpha" : "beta";
}

ModeLabel mode_label_from_string(std::string_view text) {
  if (text == "alpha") return ModeLabel::alpha;
  if (text == "beta") return ModeLabel::beta;
  throw InputError("unknown mode label '" + std::string(text) + "' (expected alpha|beta)");
}

std::string_view to_string(EulerBranch branch) {
  return branch == EulerBranch::gamma_half_pi ? "gamma_half_pi" : "gamma_zero";
}

EulerBranch euler_branch_from_string(std::string_view text) {
  if (text == "gamma_half_pi") return EulerBranch::gamma_half_pi;
  if (text == "gamma_zero") return EulerBranch::gamma_zero;
  throw InputError("unknown gamma_euler_branch '" + std::string(text) + "'");
}

void validate(const RotorModel& rotor) {
  if (!(rotor.inertia_a > 0.0 && rotor.inertia_b > 0.0 && rotor.inertia_c > 0.0))
    throw InputError("rotor: all moments of inertia must be > 0");
  if (!(rotor.chi_a <= rotor.chi_b && rotor.chi_b <= rotor.chi_c))
    throw InputError("rotor: susceptibilities must satisfy chi_a <= chi_b <= chi_c");
  if (!(rotor.volume > 0.0)) throw InputError("rotor: volume must be > 0");
}

void validate(const OpticalSetup& optics) {
  if (!(optics.kappa > 0.0)) throw InputError("optics: kappa must be > 0");
  if (!(optics.wavelength > 0.0)) throw InputError("optics: wavelength must be > 0");
  if (!(optics.n_cav >= 0.0)) throw InputError("optics: n_cav must be >= 0");
  if (!(std::abs(optics.pol_angle_phi) <= 0.5 * kPi))
    throw InputError("optics: pol_angle_phi must lie in [-pi/2, pi/2]");
}

void validate(const LibrationMode& mode) {
  if (!(mode.omega > 0.0)) throw InputError("mode: omega must be > 0");
  if (!(mode.zpf > 0.0)) throw InputError("mode: zpf must be > 0");
  if (!(mode.gamma_thermal >= 0.0 && mode.gamma_recoil >= 0.0 && mode.gamma_intrinsic >= 0.0))
    throw InputError("mode: heating rates and linewidth must be >= 0");
}

RotorModel effective_rotor(const RotorModel& rotor) {
  if (rotor.gamma_euler_branch == EulerBranch::gamma_half_pi) return rotor;
  RotorModel swapped = rotor;
  std::swap(swapped.inertia_a, swapped.inertia_b);
  std::swap(swapped.chi_a, swapped.chi_b);
  return swapped;
}

LibrationFrequencies libration_frequencies(const RotorModel& rotor, const OpticalSetup& optics) {
  const RotorModel r = effective_rotor(rotor);
  const double e_tw = std::abs(optics.e_tw0);
  LibrationFrequencies out;
  const double dchi_alpha = r.chi_c - r.chi_a;
  const double dchi_beta = r.chi_c - r.chi_b;
  out.alpha_trapped = dchi_alpha > 0.0;
  out.beta_trapped = dchi_beta > 0.0;
  if (out.alpha_trapped) out.alpha = std::sqrt(epsilon0 * r.volume * dchi_alpha / (2.0 * r.inertia_b)) * e_tw;
  if (out.beta_trapped) out.beta = std::sqrt(epsilon0 * r.volume * dchi_beta / (2.0 * r.inertia_a)) * e_tw;
  return out;
}

double zero_point_amplitude(double inertia, double omega) {
  return std::sqrt(hbar / (2.0 * inertia * omega));
}

CouplingRates coupling_rates(const RotorModel& rotor, const OpticalSetup& optics,
                             const LibrationFrequencies& freqs) {
  if (!(freqs.alpha > 0.0 && freqs.beta > 0.0))
    throw PhysicsError("coupling_rates: libration frequencies must be > 0");
  const RotorModel r = effective_rotor(rotor);
  const std::complex<double> field_product = optics.e_cav0 * std::conj(optics.e_tw0);
  const double prefactor = epsilon0 * r.volume / 4.0;
  const std::complex<double> k_alpha = prefactor * (r.chi_c - r.chi_a) * field_product;
  const std::complex<double> k_beta = prefactor * (r.chi_c - r.chi_b) * field_product;
  CouplingRates out;
  out.zpf_alpha = zero_point_amplitude(r.inertia_b, freqs.alpha);
  out.zpf_beta = zero_point_amplitude(r.inertia_a, freqs.beta);
  out.alpha = out.zpf_alpha * k_alpha / hbar;
  out.beta = out.zpf_beta * k_beta / hbar;
  return out;
}

std::complex<double> pump_rate(const RotorModel& rotor, const OpticalSetup& optics) {
  const RotorModel r = effective_rotor(rotor);
  return -epsilon0 * r.chi_a * r.volume / (4.0 * hbar) * optics.e_cav0 * std::conj(optics.e_tw0) *
         std::sin(optics.pol_angle_phi);
}

InertiaAxis inertia_axis(ModeLabel label, EulerBranch branch) {
  const bool alpha = label == ModeLabel::alpha;
  if (branch == EulerBranch::gamma_half_pi) return alpha ? InertiaAxis::b : InertiaAxis::a;
  return alpha ? InertiaAxis::a : InertiaAxis::b;
}

LibrationMode make_mode(ModeLabel label, const RotorModel& rotor, const OpticalSetup& optics,
                        double gamma_thermal, double gamma_recoil, double gamma_intrinsic) {
  const LibrationFrequencies freqs = libration_frequencies(rotor, optics);
  if (!freqs.alpha_trapped || !freqs.beta_trapped)
    throw PhysicsError("make_mode: untrapped libration (degenerate susceptibility)");
  const CouplingRates g = coupling_rates(rotor, optics, freqs);
  LibrationMode mode;
  mode.label = label;
  const bool alpha = label == ModeLabel::alpha;
  mode.omega = alpha ? freqs.alpha : freqs.beta;
  mode.g = alpha ? g.alpha : g.beta;
  mode.zpf = alpha ? g.zpf_alpha : g.zpf_beta;
  mode.gamma_thermal = gamma_thermal;
  mode.gamma_recoil = gamma_recoil;
  mode.gamma_intrinsic = gamma_intrinsic;
  return mode;
}

SidebandRates sideband_rates(double g_abs, double omega, double kappa, double detuning) {
  const double g2k = g_abs * g_abs * kappa;
  return {g2k / cavity_denominator(kappa, detuning - omega),
          g2k / cavity_denominator(kappa, detuning + omega)};
}

SidebandRates sideband_rates(const LibrationMode& mode, const OpticalSetup& optics) {
  return sideband_rates(std::abs(mode.g), mode.omega, optics.kappa, optics.detuning);
}

double phase_noise_occupation(double s_phi, double n_cav, double kappa) {
  return s_phi * n_cav / kappa;
}

double steady_state_occupation(double g_abs, double omega, double kappa, double detuning,
                               double heating_rate, double n_phase) {
  const SidebandRates rates = sideband_rates(g_abs, omega, kappa, detuning);
  const double net = rates.a_minus - rates.a_plus;
  if (!(net > 0.0)) throw PhysicsError("no net cooling at this detuning");
  return (heating_rate + rates.a_plus) / net + n_phase;
}

OccupationBudget steady_state_occupation(const LibrationMode& mode, const OpticalSetup& optics,
                                         double s_phi_at_omega) {
  OccupationBudget out;
  const SidebandRates rates = sideband_rates(mode, optics);
  out.a_minus = rates.a_minus;
  out.a_plus = rates.a_plus;
  out.n_phase = phase_noise_occupation(s_phi_at_omega, optics.n_cav, optics.kappa);
  out.n_total = steady_state_occupation(std::abs(mode.g), mode.omega, optics.kappa,
                                        optics.detuning, mode.heating_rate(), out.n_phase);
  out.n_min_bound = n_min_bound(optics.kappa, mode.omega);
  out.n_min_resolved = sq(optics.kappa) / (16.0 * sq(mode.omega));
  return out;
}

double n_min_bound(double kappa, double omega) { return sq(kappa) / (4.0 * sq(omega)); }

double effective_linewidth(double g_abs, double omega, double gamma_intrinsic, double kappa,
                           double detuning, double omega_eval) {
  const double num = 4.0 * g_abs * g_abs * omega * detuning * kappa;
  const double den = cavity_denominator(kappa, omega_eval + detuning) *
                     cavity_denominator(kappa, omega_eval - detuning);
  return gamma_intrinsic + num / den;
}

double effective_linewidth(const LibrationMode& mode, const OpticalSetup& optics, double omega_eval) {
  return effective_linewidth(std::abs(mode.g), mode.omega, mode.gamma_intrinsic, optics.kappa,
                             optics.detuning, omega_eval);
}

double spring_kernel(double omega, double kappa, double detuning, double omega_eval) {
  const double num = 4.0 * omega * detuning * (sq(0.5 * kappa) - sq(omega_eval) + sq(detuning));
  const double den = cavity_denominator(kappa, omega_eval + detuning) *
                     cavity_denominator(kappa, omega_eval - detuning);
  return num / den;
}

double effective_frequency(double g_abs, double omega, double kappa, double detuning,
                           double omega_eval) {
  const double radicand = sq(omega) - g_abs * g_abs * spring_kernel(omega, kappa, detuning, omega_eval);
  if (!(radicand > 0.0)) throw PhysicsError("spring instability");
  return std::sqrt(radicand);
}

double effective_frequency(const LibrationMode& mode, const OpticalSetup& optics, double omega_eval) {
  return effective_frequency(std::abs(mode.g), mode.omega, optics.kappa, optics.detuning, omega_eval);
}

double moment_of_inertia_from_coupling(std::complex<double> g, double omega,
                                       const OpticalSetup& optics) {
  if (!(omega > 0.0)) throw PhysicsError("moment_of_inertia_from_coupling: omega must be > 0");
  const double e_cav2 = std::norm(optics.e_cav0);
  if (!(e_cav2 > 0.0)) throw PhysicsError("inertia unidentifiable (zero cavity field)");
  return 8.0 * hbar * std::norm(g) * std::norm(optics.e_tw0) / (omega * omega * omega * e_cav2);
}

double temperature_from_occupation(double n, double omega, TemperatureConvention convention) {
  if (n < 0.0) throw PhysicsError("temperature: occupation must be >= 0");
  if (n == 0.0) return 0.0;
  const double quantum = hbar * omega / constants::k_boltzmann;
  if (convention == TemperatureConvention::equipartition) return n * quantum;
  return quantum / std::log1p(1.0 / n);
}

double revival_time(double inertia) { return kTwoPi * inertia / hbar; }

double mean_angular_momentum(double temperature, double inertia) {
  return std::sqrt(constants::k_boltzmann * temperature * inertia) / hbar;
}

DerivedScalars derived_scalars(const LibrationMode& mode, double n, double inertia,
                               TemperatureConvention convention) {
  if (n < 0.0) throw PhysicsError("derived_scalars: occupation must be >= 0");
  DerivedScalars out;
  out.sigma = mode.zpf * std::sqrt(2.0 * n + 1.0);
  out.temperature = temperature_from_occupation(n, mode.omega, convention);
  out.t_rev = revival_time(inertia);
  out.j_mean = mean_angular_momentum(out.temperature, inertia);
  return out;
}

double field_amplitude_from_power(double power, double waist_x, double waist_y) {
  const double intensity = 2.0 * power / (kPi * waist_x * waist_y);
  return std::sqrt(2.0 * intensity / (constants::speed_of_light * epsilon0));
}

double sphere_mass(double diameter, double density) {
  const double r = 0.5 * diameter;
  return density * 4.0 / 3.0 * kPi * r * r * r;
}

double dumbbell_inertia(double sphere_diameter, double density) {
  // Each sphere: (2/5) m r^2 about its own centre plus m r^2 from the offset.
  const double m = sphere_mass(sphere_diameter, density);
  const double r = 0.5 * sphere_diameter;
  return 2.0 * (0.4 * m * r * r + m * r * r);
}

}  // namespace librotor

#pragma once

// Closed-form libration physics of a coherently scattering nanorotor:
// trap frequencies, cavity couplings, sideband scattering rates, steady
// state occupations, optical spring/damping and derived scalars.
//
// All frequencies and rates are angular (rad/s) unless a name says _hz.

#include <complex>
#include <string_view>

#include "librotor/units.hpp"

namespace librotor {

enum class EulerBranch { gamma_zero, gamma_half_pi };
enum class ModeLabel { alpha, beta };
enum class InertiaAxis { a, b };
enum class TemperatureConvention { bose, equipartition };

std::string_view to_string(ModeLabel label);
ModeLabel mode_label_from_string(std::string_view text);
std::string_view to_string(EulerBranch branch);
EulerBranch euler_branch_from_string(std::string_view text);

struct RotorModel {
  double inertia_a = 0.0;  // kg m^2
  double inertia_b = 0.0;
  double inertia_c = 0.0;
  double chi_a = 0.0;
  double chi_b = 0.0;
  double chi_c = 0.0;
  double volume = 0.0;  // m^3
  EulerBranch gamma_euler_branch = EulerBranch::gamma_half_pi;
};

/// Throws InputError naming the violated invariant.
void validate(const RotorModel& rotor);

struct OpticalSetup {
  std::complex<double> e_tw0;   // tweezer field at focus, V/m
  std::complex<double> e_cav0;  // cavity mode field at the particle, V/m
  double kappa = 0.0;           // cavity energy decay rate
  double detuning = 0.0;        // omega_cavity - omega_laser
  double wavelength = 1550e-9;  // m
  double pol_angle_phi = 0.0;   // rad
  double n_cav = 0.0;           // intracavity photon number
  // Metadata only; nothing below enters a formula.
  double finesse = 0.0;
  double fsr_hz = 0.0;
  double waist_x = 0.0;
  double waist_y = 0.0;
  double waist_cav = 0.0;
};

void validate(const OpticalSetup& optics);

struct LibrationMode {
  ModeLabel label = ModeLabel::alpha;
  double omega = 0.0;                 // Omega_mu
  std::complex<double> g;             // coupling rate g_mu
  double zpf = 0.0;                   // rad
  double gamma_thermal = 0.0;         // phonons/s
  double gamma_recoil = 0.0;          // phonons/s
  double gamma_intrinsic = 0.0;       // thermal linewidth gamma_mu

  double heating_rate() const { return gamma_thermal + gamma_recoil; }
};

void validate(const LibrationMode& mode);

struct LibrationFrequencies {
  double alpha = 0.0;
  double beta = 0.0;
  bool alpha_trapped = false;  // false: degenerate susceptibility, untrapped libration
  bool beta_trapped = false;
};

struct CouplingRates {
  std::complex<double> alpha;
  std::complex<double> beta;
  double zpf_alpha = 0.0;
  double zpf_beta = 0.0;
};

struct SidebandRates {
  double a_minus = 0.0;  // anti-Stokes (cooling)
  double a_plus = 0.0;   // Stokes (heating)
};

struct OccupationBudget {
  double n_total = 0.0;
  double n_phase = 0.0;
  double a_plus = 0.0;
  double a_minus = 0.0;
  double n_min_bound = 0.0;     // kappa^2 / (4 Omega^2)
  double n_min_resolved = 0.0;  // steady state at Delta = Omega without heating: kappa^2 / (16 Omega^2)
};

struct DerivedScalars {
  double sigma = 0.0;        // rad
  double temperature = 0.0;  // K
  double t_rev = 0.0;        // s
  double j_mean = 0.0;
};

/// The gamma ~ 0 branch is the gamma ~ pi/2 model with the a and b
/// principal axes exchanged.
RotorModel effective_rotor(const RotorModel& rotor);

LibrationFrequencies libration_frequencies(const RotorModel& rotor, const OpticalSetup& optics);

double zero_point_amplitude(double inertia, double omega);

CouplingRates coupling_rates(const RotorModel& rotor, const OpticalSetup& optics,
                             const LibrationFrequencies& freqs);

std::complex<double> pump_rate(const RotorModel& rotor, const OpticalSetup& optics);

/// Inertia about the axis that sets the given mode, after the branch swap.
InertiaAxis inertia_axis(ModeLabel label, EulerBranch branch);

/// Builds a mode from the rotor and drive. Heating rates are passed through.
LibrationMode make_mode(ModeLabel label, const RotorModel& rotor, const OpticalSetup& optics,
                        double gamma_thermal = 0.0, double gamma_recoil = 0.0,
                        double gamma_intrinsic = 0.0);

SidebandRates sideband_rates(double g_abs, double omega, double kappa, double detuning);
SidebandRates sideband_rates(const LibrationMode& mode, const OpticalSetup& optics);

double phase_noise_occupation(double s_phi, double n_cav, double kappa);

/// Rate-equation steady state. Throws PhysicsError when A- <= A+.
double steady_state_occupation(double g_abs, double omega, double kappa, double detuning,
                               double heating_rate, double n_phase);
OccupationBudget steady_state_occupation(const LibrationMode& mode, const OpticalSetup& optics,
                                         double s_phi_at_omega);

double n_min_bound(double kappa, double omega);

double effective_linewidth(double g_abs, double omega, double gamma_intrinsic, double kappa,
                           double detuning, double omega_eval);
double effective_linewidth(const LibrationMode& mode, const OpticalSetup& optics, double omega_eval);

/// Spring-shifted frequency. Throws PhysicsError on a negative radicand.
double effective_frequency(double g_abs, double omega, double kappa, double detuning,
                           double omega_eval);
double effective_frequency(const LibrationMode& mode, const OpticalSetup& optics, double omega_eval);

/// The optical-spring term subtracted from Omega^2, divided by |g|^2.
double spring_kernel(double omega, double kappa, double detuning, double omega_eval);

/// Inverse of coupling_rates: I = 8 hbar |g|^2 |E_tw|^2 / (Omega^3 |E_c|^2).
/// The formula is the same for both axes; use inertia_axis() to name it.
double moment_of_inertia_from_coupling(std::complex<double> g, double omega,
                                       const OpticalSetup& optics);

double temperature_from_occupation(double n, double omega,
                                   TemperatureConvention convention = TemperatureConvention::bose);
double revival_time(double inertia);
double mean_angular_momentum(double temperature, double inertia);

DerivedScalars derived_scalars(const LibrationMode& mode, double n, double inertia,
                               TemperatureConvention convention = TemperatureConvention::bose);

// Helpers for building rotors and fields from lab quantities.

/// Peak field of an elliptical Gaussian focus, |E| = sqrt(4P / (pi wx wy c eps0)).
/// Approximate: ignores non-paraxial corrections at high NA.
double field_amplitude_from_power(double power, double waist_x, double waist_y);

double sphere_mass(double diameter, double density = constants::silica_density);
/// Two touching solid spheres rotating about an axis through the contact
/// point, perpendicular to the figure axis.
double dumbbell_inertia(double sphere_diameter, double density);

}  // namespace librotor

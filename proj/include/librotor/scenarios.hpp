#pragma once

// Laboratory-scale parameter sets: a single cooled libration of a silica
// cluster, and a dumbbell with both librations cooled at once. Rotor and
// fields are chosen so that the physics reproduces the stated mode
// frequencies, heating rates and occupations.

#include <map>
#include <string>
#include <vector>

#include "librotor/physics.hpp"
#include "librotor/spectrum.hpp"

namespace librotor {

struct ModeTarget {
  ModeLabel label = ModeLabel::alpha;
  double omega = 0.0;          // rad/s
  double gamma_thermal = 0.0;  // phonons/s
  double gamma_recoil = 0.0;   // phonons/s
  double n_phase = 0.0;        // at the reference detuning
  double n_target = 0.0;       // at the reference detuning
  Channel channel = Channel::cavity_y;
};

struct Scenario {
  std::string name;
  RotorModel rotor;
  OpticalSetup optics;  // detuning set to the reference detuning
  ScanConfig scan;
  std::vector<double> detunings_hz;
  double reference_detuning_hz = 0.0;
  std::vector<ModeTarget> targets;
};

/// |g| that gives occupation n_target at one detuning (closed form).
/// Throws PhysicsError when the target lies below what any coupling reaches.
double coupling_for_occupation(double n_target, double omega, double kappa, double detuning,
                               double heating_rate, double n_phase);

/// kappa/2pi = 32.4 kHz, Omega_alpha/2pi = 1030 kHz, Gamma = 6.8 kHz (3.2 kHz
/// recoil), n = 0.21 at Delta/2pi = 1042 kHz, I_b = 3.3e-32 kg m^2.
Scenario replica_1d();

/// Dumbbell of two 156 nm spheres: Omega_beta/2pi = 978 kHz, Omega_alpha/2pi =
/// 1035 kHz, (n_alpha, n_beta) = (1.02, 0.73) at Delta/2pi = 984 kHz, phase
/// noise n_phi(Omega_beta) = 0.38 with a feedback notch at Omega_alpha.
Scenario replica_2d();

}  // namespace librotor

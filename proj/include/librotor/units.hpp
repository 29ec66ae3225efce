#pragma once

#include <numbers>

namespace librotor {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double epsilon0 = 8.8541878128e-12;    // F/m
inline constexpr double k_boltzmann = 1.380649e-23;     // J/K
inline constexpr double speed_of_light = 299792458.0;   // m/s
inline constexpr double dalton = 1.66053906660e-27;     // kg
inline constexpr double silica_density = 2200.0;        // kg/m^3, fused silica
}  // namespace constants

// Everything inside the library works in angular units. Files and the CLI
// speak Hz; these are the only conversions used at that boundary.
constexpr double hz_to_rad(double hz) { return hz * kTwoPi; }
constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace librotor

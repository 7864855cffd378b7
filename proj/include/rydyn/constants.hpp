#pragma once

#include <numbers>

namespace rydyn {

/// CODATA 2018 values in SI units.
struct PhysicalConstants {
  static constexpr double fine_structure = 7.2973525693e-3;
  static constexpr double rydberg_energy = 2.1798723611035e-18;  // J, hc R_inf
  static constexpr double speed_of_light = 299792458.0;
  static constexpr double hbar = 1.054571817e-34;
  static constexpr double boltzmann = 1.380649e-23;
  static constexpr double elementary_charge = 1.602176634e-19;
  static constexpr double electron_mass = 9.1093837015e-31;
  static constexpr double bohr_radius = 5.29177210903e-11;
  static constexpr double atomic_mass_unit = 1.66053906660e-27;
  static constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;

  static constexpr double hartree = 2.0 * rydberg_energy;
  /// e^2 / (4 pi eps0), the Gaussian-units charge squared expressed in SI.
  static constexpr double e2_gaussian = fine_structure * hbar * speed_of_light;
  /// Atomic unit of time, hbar / E_h.
  static constexpr double atomic_time = hbar / hartree;
};

using constants = PhysicalConstants;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace rydyn

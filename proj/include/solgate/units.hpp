#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

// Dimensionless unit convention used throughout:
//   time unit   2/Omega_rf            (rf drive frequency is exactly 2, rf period pi)
//   length unit l, l^3 = k_e e_ref^2 / (m_ref (Omega_rf/2)^2)
//   energy unit m_ref (Omega_rf/2)^2 l^2
// With these choices the Coulomb pair energy is charge_i*charge_j/r and the
// Mathieu equation for a reference-species ion reads x'' + (a + 2q cos 2t) x = 0.

namespace solgate {

namespace constants {
inline constexpr double coulomb = 8.9875517873681764e9;   // N m^2 / C^2
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

struct UnitSystem {
  double omega_rf = 0.0;    // physical rf angular frequency [rad/s]
  double ref_mass = 0.0;    // [kg]
  double ref_charge = 0.0;  // [C]

  double time = 0.0;    // [s] per dimensionless time unit
  double length = 0.0;  // [m]
  double energy = 0.0;  // [J]
  double hbar = 0.0;    // dimensionless hbar
  double boltzmann_per_kelvin = 0.0;  // dimensionless k_B * (1 K)

  static UnitSystem make(double omega_rf, double ref_mass_kg, double ref_charge_C) {
    if (omega_rf <= 0.0 || ref_mass_kg <= 0.0 || ref_charge_C <= 0.0)
      throw std::invalid_argument("UnitSystem::make: nonpositive input");
    UnitSystem u;
    u.omega_rf = omega_rf;
    u.ref_mass = ref_mass_kg;
    u.ref_charge = ref_charge_C;
    const double half = 0.5 * omega_rf;
    u.time = 2.0 / omega_rf;
    u.length = std::cbrt(constants::coulomb * ref_charge_C * ref_charge_C /
                         (ref_mass_kg * half * half));
    u.energy = ref_mass_kg * half * half * u.length * u.length;
    u.hbar = constants::hbar / (ref_mass_kg * half * u.length * u.length);
    u.boltzmann_per_kelvin = constants::boltzmann / u.energy;
    return u;
  }

  // Angular frequency conversions: dimensionless frequency nu corresponds to
  // a physical angular frequency nu * Omega_rf / 2.
  double frequency_to_physical(double nu) const { return nu * 0.5 * omega_rf; }
  double frequency_from_physical(double w) const { return w / (0.5 * omega_rf); }

  double length_to_physical(double x) const { return x * length; }
  double length_from_physical(double x) const { return x / length; }
  double time_to_physical(double t) const { return t * time; }
  double time_from_physical(double t) const { return t / time; }
  double energy_to_physical(double e) const { return e * energy; }
  double energy_from_physical(double e) const { return e / energy; }
  double temperature_to_energy(double kelvin) const {
    return kelvin * boltzmann_per_kelvin;
  }
  // Physical wavenumber [1/m] to dimensionless (phase per length unit).
  double wavenumber_from_physical(double k) const { return k * length; }
};

}  // namespace solgate

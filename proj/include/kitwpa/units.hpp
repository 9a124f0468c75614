#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace kitwpa {

using cplx = std::complex<double>;

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double c0 = 299792458.0;               // m/s
inline constexpr double h = 6.62607015e-34;             // J s
inline constexpr double hbar = h / (2.0 * pi);          // J s
inline constexpr double k_b = 1.380649e-23;             // J/K
inline constexpr double e_charge = 1.602176634e-19;     // C, also J per eV
inline constexpr double mu0 = 1.25663706212e-6;         // H/m
inline constexpr double z_ref = 50.0;                   // ohm, power reference
}  // namespace constants

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }

inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }

inline double ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Peak current amplitude of a tone carrying `watt` into the 50 ohm reference.
inline double power_to_amplitude(double watt) {
    return std::sqrt(2.0 * watt / constants::z_ref);
}

inline double amplitude_to_power(double amplitude) {
    return amplitude * amplitude * constants::z_ref / 2.0;
}

inline double hz_to_rad(double f) { return 2.0 * constants::pi * f; }

inline double rad_to_hz(double omega) { return omega / (2.0 * constants::pi); }

}  // namespace kitwpa

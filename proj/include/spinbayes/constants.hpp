#pragma once

// Physical constants (SI) and the unit conversions used throughout.
// Currents are carried in mA at the device/curve level and in A inside
// the LLG core; fields are A/m; energies J.

namespace spinbayes {

inline constexpr double k_boltzmann = 1.380649e-23;      // J/K
inline constexpr double mu_0 = 1.25663706212e-6;         // T m/A
inline constexpr double mu_bohr = 9.2740100783e-24;      // J/T
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double q_electron = 1.602176634e-19;    // C
inline constexpr double pi = 3.141592653589793238462643; // avoids M_PI portability

// Gyromagnetic ratio in field units of A/m: gamma = 2 mu_B mu_0 / hbar.
inline constexpr double gyromagnetic_ratio = 2.0 * mu_bohr * mu_0 / hbar; // m/(A s)

// 1 Oe = 1000/(4 pi) A/m.
inline constexpr double oersted_to_a_per_m = 1000.0 / (4.0 * pi);

inline constexpr double milliamp = 1e-3; // A per mA

} // namespace spinbayes

#ifndef DRC_CONSTANTS_HPP
#define DRC_CONSTANTS_HPP

namespace drc::constants {

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double planck_h = 6.62607015e-34;     // J s
inline constexpr double mu_bohr = 9.2740100783e-24;    // J/T

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double gauss_to_tesla = 1e-4;

// Cesium D2 cycling transition (6S1/2 F=4 -> 6P3/2 F'=5)
namespace cesium {
inline constexpr double mass = 2.20694650e-25;             // kg
inline constexpr double d2_wavelength = 852.3e-9;          // m
inline constexpr double d2_linewidth = two_pi * 5.22e6;    // rad/s
inline constexpr double d2_isat = 1.105;                   // mW/cm^2
inline constexpr double g_f4 = 0.25;                       // Lande factor, F=4 ground manifold
inline constexpr int f_ground = 4;
}  // namespace cesium

}  // namespace drc::constants

#endif

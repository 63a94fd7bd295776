#ifndef DRC_TRAP_HPP
#define DRC_TRAP_HPP

#include <array>

#include "drc/constants.hpp"

namespace drc {

enum class Axis { x = 0, y = 1, z = 2 };

constexpr int axis_index(Axis a) { return static_cast<int>(a); }
constexpr std::array<Axis, 3> all_axes{Axis::x, Axis::y, Axis::z};
const char* axis_name(Axis a);

// Harmonic trap with a weak quartic softening per axis.  Level energies follow
// E_n = hbar*omega*(n+1/2)*(1 - alpha*n/2), so the ladder spacing shrinks
// linearly with n (second difference of E_n is exactly -alpha*hbar*omega).
struct TrapConfig {
    std::array<double, 3> omega{};           // rad/s, {x, y, z}
    std::array<double, 3> anharmonicity{};   // dimensionless alpha per axis
    std::array<int, 3> trap_depth_quanta{};  // absorbing-boundary level index per axis
    double mass = constants::cesium::mass;                 // kg
    double probe_wavelength = constants::cesium::d2_wavelength;  // m
    // Projection of the probe wavevector onto each principal axis (|cos| <= 1).
    std::array<double, 3> eta_projection{1.0, 1.0, 1.0};

    void validate() const;  // throws ConfigError / LambDickeViolation
    static TrapConfig nanofiber_defaults();
};

// Static offset field plus the fictitious transverse gradient that couples
// spin and motion along y.
struct FieldConfig {
    double b_off_gauss = 0.0;         // offset field magnitude
    double b_gradient_gauss_per_m = 0.0;  // fictitious gradient b at the trap center
    double lande_g = constants::cesium::g_f4;
    int f_total = constants::cesium::f_ground;

    void validate() const;
    static FieldConfig nanofiber_defaults();
};

// Pump beam driving the cycling transition with sigma- polarization.
struct LaserConfig {
    double detuning_linewidths = 0.0;  // Delta / Gamma, negative = red detuned
    double intensity_sat = 0.0;        // I / Isat
    double linewidth = constants::cesium::d2_linewidth;  // rad/s
    double ac_stark_shift_per_mf = 0.0;  // rad/s per unit m_F, added to H if nonzero

    void validate() const;
    // Photon scattering rate of the strongest (stretched) transition,
    // R_p = (Gamma/2) * s / (1 + s + (2*Delta/Gamma)^2), in 1/s.
    double scattering_rate() const;
};

// Ground-state size with the x = x0 (a + a^dag) convention: x0 = sqrt(hbar/(2 m omega)).
double oscillator_length(const TrapConfig& trap, Axis axis);

// eta_i = projection_i * (2 pi / lambda) * x0_i; throws LambDickeViolation at >= 0.5.
double lamb_dicke(const TrapConfig& trap, Axis axis);

// Linear Zeeman splitting g_F mu_B B / hbar between adjacent m_F levels (rad/s).
double zeeman_splitting(const FieldConfig& field);

// Spin-motion coupling Omega = g_F mu_B b y0 / (2 hbar) from the gradient term (rad/s).
double spin_motion_coupling(const TrapConfig& trap, const FieldConfig& field);

// Offset field (gauss) at which the Zeeman splitting matches omega_axis.
double resonant_field(const TrapConfig& trap, const FieldConfig& field, Axis axis);

// E_n in joules; throws IndexAboveTrapDepth when n exceeds the boundary level.
double anharmonic_level_energy(const TrapConfig& trap, Axis axis, int n);

// (E_{n_to} - E_{n_from}) / h in Hz.
double transition_frequency(const TrapConfig& trap, Axis axis, int n_from, int n_to);

}  // namespace drc

#endif

#include "drc/trap.hpp"

#include <cmath>
#include <string>

#include "drc/errors.hpp"

namespace drc {

using namespace constants;

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        case Axis::z: return "z";
    }
    return "?";
}

TrapConfig TrapConfig::nanofiber_defaults() {
    TrapConfig t;
    t.omega = {two_pi * 136e3, two_pi * 83e3, two_pi * 215e3};
    t.anharmonicity = {0.02, 0.02, 0.02};
    t.trap_depth_quanta = {25, 25, 25};
    return t;
}

void TrapConfig::validate() const {
    for (Axis a : all_axes) {
        const int i = axis_index(a);
        if (!(omega[i] > 0.0))
            throw ConfigError(std::string("omega_") + axis_name(a) + " must be positive");
        if (!(anharmonicity[i] >= 0.0) || anharmonicity[i] >= 0.5)
            throw ConfigError(std::string("anharmonicity_") + axis_name(a) +
                              " must lie in [0, 0.5)");
        if (trap_depth_quanta[i] < 1)
            throw ConfigError(std::string("trap_depth_") + axis_name(a) +
                              " must be at least 1 quantum");
        if (!(eta_projection[i] >= 0.0) || eta_projection[i] > 1.0)
            throw ConfigError(std::string("eta_projection_") + axis_name(a) +
                              " must lie in [0, 1]");
    }
    if (!(mass > 0.0)) throw ConfigError("mass must be positive");
    if (!(probe_wavelength > 0.0)) throw ConfigError("probe_wavelength must be positive");
    for (Axis a : all_axes) lamb_dicke(*this, a);  // throws LambDickeViolation if >= 0.5
}

FieldConfig FieldConfig::nanofiber_defaults() {
    FieldConfig f;
    f.b_off_gauss = 0.25;
    f.b_gradient_gauss_per_m = 1.6e6;  // 1.6 G/um fictitious gradient
    return f;
}

void FieldConfig::validate() const {
    if (!(b_off_gauss >= 0.0)) throw ConfigError("b_off must be non-negative");
    if (!(b_gradient_gauss_per_m >= 0.0)) throw ConfigError("b_gradient must be non-negative");
    if (!(lande_g > 0.0)) throw ConfigError("lande_g must be positive");
    if (f_total < 1) throw ConfigError("f_total must be at least 1");
}

void LaserConfig::validate() const {
    if (!(intensity_sat >= 0.0)) throw ConfigError("intensity must be non-negative");
    if (!(linewidth > 0.0)) throw ConfigError("linewidth must be positive");
}

double LaserConfig::scattering_rate() const {
    const double s = intensity_sat;
    const double d = 2.0 * detuning_linewidths;  // 2*Delta/Gamma
    return 0.5 * linewidth * s / (1.0 + s + d * d);
}

double oscillator_length(const TrapConfig& trap, Axis axis) {
    return std::sqrt(hbar / (2.0 * trap.mass * trap.omega[axis_index(axis)]));
}

double lamb_dicke(const TrapConfig& trap, Axis axis) {
    const double k = two_pi / trap.probe_wavelength;
    const double eta =
        trap.eta_projection[axis_index(axis)] * k * oscillator_length(trap, axis);
    if (eta >= 0.5)
        throw LambDickeViolation(std::string("eta_") + axis_name(axis) + " = " +
                                 std::to_string(eta) + " >= 0.5");
    return eta;
}

double zeeman_splitting(const FieldConfig& field) {
    return field.lande_g * mu_bohr * field.b_off_gauss * gauss_to_tesla / hbar;
}

double spin_motion_coupling(const TrapConfig& trap, const FieldConfig& field) {
    const double grad_tesla = field.b_gradient_gauss_per_m * gauss_to_tesla;
    return field.lande_g * mu_bohr * grad_tesla * oscillator_length(trap, Axis::y) /
           (2.0 * hbar);
}

double resonant_field(const TrapConfig& trap, const FieldConfig& field, Axis axis) {
    return trap.omega[axis_index(axis)] * hbar /
           (field.lande_g * mu_bohr * gauss_to_tesla);
}

double anharmonic_level_energy(const TrapConfig& trap, Axis axis, int n) {
    const int i = axis_index(axis);
    if (n < 0) throw ConfigError("level index must be non-negative");
    if (n > trap.trap_depth_quanta[i])
        throw IndexAboveTrapDepth("n = " + std::to_string(n) + " above boundary level " +
                                  std::to_string(trap.trap_depth_quanta[i]) + " on " +
                                  axis_name(axis));
    const double alpha = trap.anharmonicity[i];
    return hbar * trap.omega[i] * (n + 0.5) * (1.0 - 0.5 * alpha * n);
}

double transition_frequency(const TrapConfig& trap, Axis axis, int n_from, int n_to) {
    return (anharmonic_level_energy(trap, axis, n_to) -
            anharmonic_level_energy(trap, axis, n_from)) /
           planck_h;
}

}  // namespace drc

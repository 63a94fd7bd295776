#include "doctest.h"

#include <cmath>

#include "drc/constants.hpp"
#include "drc/errors.hpp"
#include "drc/trap.hpp"

using namespace drc;
using doctest::Approx;

namespace {

TrapConfig reference_trap() {
    TrapConfig t = TrapConfig::nanofiber_defaults();
    t.validate();
    return t;
}

}  // namespace

TEST_SUITE("trap") {

TEST_CASE("oscillator lengths match precomputed references") {
    const TrapConfig t = reference_trap();
    // Frozen from a 40-digit evaluation of sqrt(hbar / (2 m omega)).
    CHECK(oscillator_length(t, Axis::x) == Approx(1.6721213480452194e-8).epsilon(1e-13));
    CHECK(oscillator_length(t, Axis::y) == Approx(2.1404160533293363e-8).epsilon(1e-13));
    CHECK(oscillator_length(t, Axis::z) == Approx(1.3298970289777804e-8).epsilon(1e-13));
}

TEST_CASE("oscillator length scales as omega^{-1/2}") {
    TrapConfig t = reference_trap();
    const double base = oscillator_length(t, Axis::y);
    t.omega[1] *= 4.0;
    CHECK(oscillator_length(t, Axis::y) == Approx(base / 2.0).epsilon(1e-12));
}

TEST_CASE("Lamb-Dicke parameters match precomputed references") {
    const TrapConfig t = reference_trap();
    CHECK(lamb_dicke(t, Axis::x) == Approx(0.12326936860095091).epsilon(1e-13));
    CHECK(lamb_dicke(t, Axis::y) == Approx(0.15779221750006106).epsilon(1e-13));
    CHECK(lamb_dicke(t, Axis::z) == Approx(0.098040472515956526).epsilon(1e-13));
}

TEST_CASE("Lamb-Dicke parameter honors the wavevector projection") {
    TrapConfig t = reference_trap();
    const double full = lamb_dicke(t, Axis::z);
    t.eta_projection[2] = 0.25;
    CHECK(lamb_dicke(t, Axis::z) == Approx(0.25 * full).epsilon(1e-14));
}

TEST_CASE("soft traps violate the Lamb-Dicke bound") {
    TrapConfig t = reference_trap();
    t.omega[1] = constants::two_pi * 100.0;  // eta_y ~ 4.5
    CHECK_THROWS_AS(lamb_dicke(t, Axis::y), LambDickeViolation);
    CHECK_THROWS_AS(t.validate(), LambDickeViolation);
}

TEST_CASE("Zeeman splitting and coupling match precomputed references") {
    const TrapConfig t = reference_trap();
    const FieldConfig f = FieldConfig::nanofiber_defaults();
    CHECK(zeeman_splitting(f) == Approx(549631.25369938651).epsilon(1e-13));  // 0.25 G
    CHECK(spin_motion_coupling(t, f) == Approx(37646.065882550274).epsilon(1e-13));
    CHECK(spin_motion_coupling(t, f) / constants::two_pi == Approx(5991.6).epsilon(1e-4));
}

TEST_CASE("Zeeman splitting is linear in the offset field") {
    FieldConfig f = FieldConfig::nanofiber_defaults();
    const double base = zeeman_splitting(f);
    f.b_off_gauss *= 3.0;
    CHECK(zeeman_splitting(f) == Approx(3.0 * base).epsilon(1e-15));
}

TEST_CASE("coupling is linear in the gradient") {
    const TrapConfig t = reference_trap();
    FieldConfig f = FieldConfig::nanofiber_defaults();
    const double base = spin_motion_coupling(t, f);
    f.b_gradient_gauss_per_m *= 2.0;
    CHECK(spin_motion_coupling(t, f) == Approx(2.0 * base).epsilon(1e-15));
}

TEST_CASE("resonant fields match precomputed references") {
    const TrapConfig t = reference_trap();
    const FieldConfig f = FieldConfig::nanofiber_defaults();
    CHECK(resonant_field(t, f, Axis::x) == Approx(0.38867567847760545).epsilon(1e-13));
    CHECK(resonant_field(t, f, Axis::y) == Approx(0.23720648024736215).epsilon(1e-13));
    CHECK(resonant_field(t, f, Axis::z) == Approx(0.61445052112268508).epsilon(1e-13));
}

TEST_CASE("resonant field inverts the Zeeman splitting") {
    const TrapConfig t = reference_trap();
    FieldConfig f = FieldConfig::nanofiber_defaults();
    for (Axis a : all_axes) {
        f.b_off_gauss = resonant_field(t, f, a);
        CHECK(zeeman_splitting(f) == Approx(t.omega[axis_index(a)]).epsilon(1e-12));
    }
}

TEST_CASE("harmonic limit has a uniform ladder") {
    TrapConfig t = reference_trap();
    t.anharmonicity = {0.0, 0.0, 0.0};
    const double quantum = constants::hbar * t.omega[1];
    for (int n = 0; n < 10; ++n) {
        CHECK(anharmonic_level_energy(t, Axis::y, n) ==
              Approx(quantum * (n + 0.5)).epsilon(1e-15));
    }
}

TEST_CASE("anharmonic ladder spacings match precomputed references") {
    const TrapConfig t = reference_trap();  // alpha = 0.02
    CHECK(transition_frequency(t, Axis::y, 0, 1) == Approx(81754.999949907143).epsilon(1e-12));
    CHECK(transition_frequency(t, Axis::y, 1, 2) == Approx(80094.999950924256).epsilon(1e-12));
    CHECK(transition_frequency(t, Axis::y, 2, 3) == Approx(78434.99995194137).epsilon(1e-12));
    // Red transitions are the exact mirrors of the blue ones.
    CHECK(transition_frequency(t, Axis::y, 1, 0) ==
          Approx(-transition_frequency(t, Axis::y, 0, 1)).epsilon(1e-15));
    // First red/blue pair straddles zero with total extent 2 (omega/2pi)(1 - 3 alpha/4).
    CHECK(transition_frequency(t, Axis::y, 0, 1) - transition_frequency(t, Axis::y, 1, 0) ==
          Approx(163510.0).epsilon(1e-9));
}

TEST_CASE("ladder spacing shrinks by exactly alpha*hbar*omega per step") {
    const TrapConfig t = reference_trap();
    for (Axis a : all_axes) {
        const int i = axis_index(a);
        const double expected = -t.anharmonicity[i] * constants::hbar * t.omega[i];
        for (int n = 0; n + 2 <= t.trap_depth_quanta[i]; ++n) {
            const double spacing_n = anharmonic_level_energy(t, a, n + 1) -
                                     anharmonic_level_energy(t, a, n);
            const double spacing_n1 = anharmonic_level_energy(t, a, n + 2) -
                                      anharmonic_level_energy(t, a, n + 1);
            CHECK(spacing_n1 - spacing_n == Approx(expected).epsilon(1e-10));
            CHECK(spacing_n1 < spacing_n);  // monotone softening
        }
    }
}

TEST_CASE("level index above the boundary is rejected") {
    const TrapConfig t = reference_trap();
    CHECK_NOTHROW(anharmonic_level_energy(t, Axis::y, t.trap_depth_quanta[1]));
    CHECK_THROWS_AS(anharmonic_level_energy(t, Axis::y, t.trap_depth_quanta[1] + 1),
                    IndexAboveTrapDepth);
}

TEST_CASE("pump scattering rate matches the precomputed reference") {
    LaserConfig l;
    l.detuning_linewidths = -12.0;
    l.intensity_sat = 4.1;
    l.validate();
    CHECK(l.scattering_rate() == Approx(115705.32777857297).epsilon(1e-13));
}

TEST_CASE("pump scattering rate saturates and is symmetric in detuning") {
    LaserConfig l;
    l.detuning_linewidths = -12.0;
    l.intensity_sat = 1e9;
    CHECK(l.scattering_rate() == Approx(0.5 * l.linewidth).epsilon(1e-6));
    LaserConfig blue = l;
    blue.detuning_linewidths = 12.0;
    blue.intensity_sat = l.intensity_sat = 4.1;
    CHECK(l.scattering_rate() == Approx(blue.scattering_rate()).epsilon(1e-15));
    // monotone in intensity
    LaserConfig weak = l;
    weak.intensity_sat = 2.0;
    CHECK(weak.scattering_rate() < l.scattering_rate());
}

TEST_CASE("invalid configurations are rejected by name") {
    TrapConfig t = reference_trap();
    t.omega[0] = 0.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = reference_trap();
    t.anharmonicity[2] = -0.01;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = reference_trap();
    t.trap_depth_quanta[1] = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);

    FieldConfig f = FieldConfig::nanofiber_defaults();
    f.b_off_gauss = -0.1;
    CHECK_THROWS_AS(f.validate(), ConfigError);

    LaserConfig l;
    l.intensity_sat = -1.0;
    CHECK_THROWS_AS(l.validate(), ConfigError);
}

}  // TEST_SUITE

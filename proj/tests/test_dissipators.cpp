#include "doctest.h"

#include <cmath>
#include <map>

#include "drc/dissipators.hpp"
#include "drc/errors.hpp"

using namespace drc;
using doctest::Approx;

TEST_SUITE("dissipators") {

TEST_CASE("absorption weights follow the exact angular-momentum table") {
    // (F - m + 1)(F - m + 2) / 90 for F = 4, stretched cycle normalized to 1.
    const double expected[9] = {90.0 / 90, 72.0 / 90, 56.0 / 90, 42.0 / 90, 30.0 / 90,
                                20.0 / 90, 12.0 / 90, 6.0 / 90,  2.0 / 90};
    for (int m = -4; m <= 4; ++m)
        CHECK(absorption_weight(4, m) == Approx(expected[m + 4]).epsilon(1e-15));
    CHECK(absorption_weight(4, -5) == 0.0);
    CHECK(absorption_weight(4, 5) == 0.0);
}

TEST_CASE("emission branches from each excited level sum to one") {
    for (int me = -5; me <= 5; ++me) {
        double sum = 0.0;
        for (int q : {-1, 0, 1}) sum += emission_weight(4, me, q);
        CHECK(sum == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("emission weights match hand-reduced fractions") {
    // Stretched excited state decays only on the sigma- branch.
    CHECK(emission_weight(4, -5, -1) == 1.0);
    CHECK(emission_weight(4, -5, 0) == 0.0);
    CHECK(emission_weight(4, -5, 1) == 0.0);
    // One step up: 4/5 sigma-, 1/5 pi.
    CHECK(emission_weight(4, -4, -1) == Approx(0.8).epsilon(1e-15));
    CHECK(emission_weight(4, -4, 0) == Approx(0.2).epsilon(1e-15));
    CHECK(emission_weight(4, -4, 1) == 0.0);
    // Center of the manifold: 2/9, 5/9, 2/9.
    CHECK(emission_weight(4, 0, -1) == Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(emission_weight(4, 0, 0) == Approx(5.0 / 9.0).epsilon(1e-15));
    CHECK(emission_weight(4, 0, 1) == Approx(2.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("pump cycles conserve probability per initial level") {
    const auto channels = pump_channels(4);
    std::map<int, double> per_level;
    for (const auto& c : channels) {
        CHECK(c.m_to == c.m_from - 1 - c.q);
        CHECK(c.m_to >= -4);
        CHECK(c.m_to <= 4);
        CHECK(c.weight > 0.0);
        per_level[c.m_from] += c.weight;
    }
    for (int m = -4; m <= 4; ++m)
        CHECK(per_level[m] == Approx(absorption_weight(4, m)).epsilon(1e-14));
}

TEST_CASE("every cycle steps the spin down or sideways, never up") {
    for (const auto& c : pump_channels(4)) {
        CHECK(c.m_to - c.m_from <= 0);
        CHECK(c.m_to - c.m_from >= -2);
    }
}

TEST_CASE("pumping drifts toward the stretched state from every interior level") {
    DissipatorSet d;
    d.pump_rate = 1.0;
    d.channels = pump_channels(4);
    CHECK(d.mean_spin_step(-4) == 0.0);  // cycling: returns where it started
    for (int m = -3; m <= 4; ++m) CHECK(d.mean_spin_step(m) < 0.0);
    // Drift strengthens toward the middle of the manifold where pi emission is strong.
    CHECK(d.mean_spin_step(-3) < -0.15);
}

TEST_CASE("the stretched state cycles closed") {
    const auto channels = pump_channels(4);
    int from_stretched = 0;
    for (const auto& c : channels) {
        if (c.m_from != -4) continue;
        ++from_stretched;
        CHECK(c.m_to == -4);
        CHECK(c.q == -1);
        CHECK(c.weight == Approx(1.0).epsilon(1e-15));
    }
    CHECK(from_stretched == 1);
}

TEST_CASE("laser-derived budget wires rates and recoil together") {
    const TrapConfig trap = TrapConfig::nanofiber_defaults();
    const FieldConfig field = FieldConfig::nanofiber_defaults();
    LaserConfig laser;
    laser.detuning_linewidths = -12.0;
    laser.intensity_sat = 4.1;

    const auto d = DissipatorSet::from_laser(trap, field, laser, {0.4, 0.4, 0.4},
                                             {0.0, 300.0, 0.0});
    CHECK(d.pump_rate == Approx(laser.scattering_rate()).epsilon(1e-15));
    CHECK(d.scatter_rate_from(-4) == Approx(d.pump_rate).epsilon(1e-14));
    CHECK(d.scatter_rate_from(0) == Approx(d.pump_rate * 30.0 / 90.0).epsilon(1e-14));
    for (Axis a : all_axes) {
        const double eta = lamb_dicke(trap, a);
        CHECK(d.recoil_per_event[axis_index(a)] == Approx(0.4 * eta * eta).epsilon(1e-14));
    }
    CHECK(d.background_heating[1] == 300.0);
    CHECK_THROWS_AS(DissipatorSet::from_laser(trap, field, laser, {0.4, 0.4, 0.4},
                                              {0.0, -1.0, 0.0}),
                    ConfigError);
}

}  // TEST_SUITE

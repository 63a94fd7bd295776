#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "drc/constants.hpp"
#include "drc/errors.hpp"
#include "drc/spectroscopy.hpp"
#include "drc/trap.hpp"

namespace {

using namespace drc;

TrapConfig spectroscopy_trap(std::array<double, 3> freq_hz, int depth, double alpha = 0.0) {
    TrapConfig trap;
    for (int a = 0; a < 3; ++a) {
        trap.omega[a] = constants::two_pi * freq_hz[a];
        trap.anharmonicity[a] = alpha;
        trap.trap_depth_quanta[a] = depth;
    }
    return trap;
}

// Trapezoidal integral of one thermally weighted line family (red or blue) of
// one axis, sampled on a symmetric grid.  Because red and blue families share
// line widths, every quadrature and band-edge error enters both integrals
// through the same factor and cancels in their ratio.
double family_integral(const std::vector<SidebandComponent>& comps, Axis axis, bool red,
                       const std::vector<double>& grid) {
    std::vector<SidebandComponent> family;
    for (const SidebandComponent& c : comps) {
        if (c.axis != axis || c.n_initial < 0) continue;
        const bool is_red = c.n_final < c.n_initial;
        if (is_red == red) family.push_back(c);
    }
    const std::vector<double> psd = evaluate_spectrum(family, grid, 1.0, 0.0);
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        sum += 0.5 * (psd[i] + psd[i - 1]) * (grid[i] - grid[i - 1]);
    }
    return sum;
}

std::vector<double> symmetric_grid(double f_max, int samples) {
    std::vector<double> grid(samples);
    const double spacing = 2.0 * f_max / static_cast<double>(samples - 1);
    for (int i = 0; i < samples; ++i) grid[i] = -f_max + spacing * static_cast<double>(i);
    return grid;
}

TEST_SUITE("spectroscopy") {

TEST_CASE("scattering rates follow the lowest-order ladder bookkeeping") {
    // Ground level cannot lose a quantum.
    const ScatteringRates ground = scattering_rates(0, 0.12, 5.0e4);
    CHECK(ground.red == 0.0);
    CHECK(ground.blue == doctest::Approx(0.12 * 0.12 * 5.0e4).epsilon(1e-12));

    // Frozen point: eta = 0.158, n = 1, total rate 1e5/s.
    const ScatteringRates one = scattering_rates(1, 0.158, 1.0e5);
    CHECK(one.red == doctest::Approx(2496.4).epsilon(1e-12));
    CHECK(one.blue == doctest::Approx(4992.8).epsilon(1e-12));
    CHECK(one.elastic == doctest::Approx(92510.8).epsilon(1e-12));

    // Red/blue ratio is n/(n+1) independent of eta and the total rate.
    for (int n = 1; n <= 6; ++n) {
        const ScatteringRates r = scattering_rates(n, 0.31, 7.7e3);
        CHECK(r.red / r.blue ==
              doctest::Approx(static_cast<double>(n) / (n + 1.0)).epsilon(1e-14));
    }

    // The elastic rate floors at zero once eta^2*(2n+1) exceeds one.
    const ScatteringRates floored = scattering_rates(3, 0.4, 1.0e4);
    CHECK(floored.elastic == 0.0);
    CHECK(floored.red > 0.0);

    CHECK_THROWS_AS(scattering_rates(-1, 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(scattering_rates(2, 0.5, 1.0), LambDickeViolation);
    CHECK_THROWS_AS(scattering_rates(2, 0.1, -1.0), ConfigError);
}

TEST_CASE("total scattered power is conserved across the decomposition") {
    // Summed component rates must reproduce 3 * Gamma_sc (one Gamma_sc per
    // axis) no matter how the thermal weights distribute it over lines.
    const double gamma_sc = 3.3e4;
    const TrapConfig harmonic = spectroscopy_trap({200e3, 200e3, 200e3}, 60);
    const TrapConfig softened = spectroscopy_trap({200e3, 200e3, 200e3}, 60, 0.02);

    for (const TrapConfig* trap : {&harmonic, &softened}) {
        for (const std::array<double, 3>& occ :
             {std::array<double, 3>{1.4, 0.58, 0.22}, std::array<double, 3>{0.3, 0.5, 0.2},
              std::array<double, 3>{0.0, 0.0, 0.0}}) {
            const std::vector<SidebandComponent> comps =
                spectrum_components(*trap, occ, gamma_sc, 1.0e3);
            double total = 0.0;
            for (const SidebandComponent& c : comps) total += c.rate;
            CHECK(total == doctest::Approx(3.0 * gamma_sc).epsilon(1e-9));
        }
    }
}

TEST_CASE("red and blue sideband weights keep the geometric thermal ratio") {
    const TrapConfig trap = spectroscopy_trap({154e3, 94e3, 233e3}, 80);
    const std::array<double, 3> occ{1.4, 0.58, 0.22};
    const std::vector<SidebandComponent> comps = spectrum_components(trap, occ, 2.0e4, 1.0e3);

    for (int a = 0; a < 3; ++a) {
        double s_red = 0.0;
        double s_blue = 0.0;
        for (const SidebandComponent& c : comps) {
            if (c.axis != static_cast<Axis>(a) || c.n_initial < 0) continue;
            if (c.n_final < c.n_initial) s_red += c.rate;
            if (c.n_final > c.n_initial) s_blue += c.rate;
        }
        CHECK(s_red / s_blue == doctest::Approx(occ[a] / (occ[a] + 1.0)).epsilon(1e-9));
    }

    // Frozen asymmetry for <n> = 0.22.
    double s_red_z = 0.0;
    double s_blue_z = 0.0;
    for (const SidebandComponent& c : comps) {
        if (c.axis != Axis::z || c.n_initial < 0) continue;
        (c.n_final < c.n_initial ? s_red_z : s_blue_z) += c.rate;
    }
    CHECK(s_red_z / s_blue_z == doctest::Approx(0.18032786885245902).epsilon(1e-9));
}

TEST_CASE("numerical band integrals reproduce the thermal asymmetry") {
    // Single occupied axis; equal red/blue line widths make every quadrature
    // error common to both integrals, so the ratio is exact.
    const TrapConfig trap = spectroscopy_trap({154e3, 94e3, 233e3}, 80);
    const std::array<double, 3> occ{0.0, 0.37, 0.0};
    const std::vector<SidebandComponent> comps = spectrum_components(trap, occ, 1.0, 2.0e3);
    const std::vector<double> grid = symmetric_grid(250e3, 50001);

    const double s_red = family_integral(comps, Axis::y, true, grid);
    const double s_blue = family_integral(comps, Axis::y, false, grid);
    CHECK(s_red / s_blue == doctest::Approx(0.37 / 1.37).epsilon(1e-7));

    // Thermometry on those integrals closes the loop to the input occupation.
    const SidebandThermometry t = sideband_thermometry(s_red, s_blue);
    CHECK(t.mean_n == doctest::Approx(0.37).epsilon(1e-6));

    // Absolute normalization: each family integral approaches its summed rate
    // (unit-area lines; ~1% of the mass lives beyond the grid edges).
    const double eta2 = std::pow(lamb_dicke(trap, Axis::y), 2);
    CHECK(s_red == doctest::Approx(eta2 * 0.37).epsilon(0.02));
    CHECK(s_blue == doctest::Approx(eta2 * 1.37).epsilon(0.02));
}

TEST_CASE("band integrals of the full synthetic spectrum measure temperature") {
    // End to end with the carrier present: offset-subtracted band powers give
    // the occupation to a few percent (the elastic line's Lorentzian tail
    // leaks ~2% into the red band; the component-level integrals above are
    // the exact route).
    const TrapConfig trap = spectroscopy_trap({154e3, 94e3, 233e3}, 80);
    const std::array<double, 3> occ{0.0, 0.37, 0.0};
    const double offset = 2.0;
    SpectrumGrid grid{-250e3, 250e3, 12501};
    const Spectrum spec = synthesize_spectrum(trap, occ, 1.0, 200.0, 1.0, offset, grid);

    const double band = 25e3;
    const double f_y = trap.omega[1] / constants::two_pi;
    const double s_red =
        integrate_band(spec, -f_y - band, -f_y + band) - offset * 2.0 * band;
    const double s_blue =
        integrate_band(spec, f_y - band, f_y + band) - offset * 2.0 * band;
    const SidebandThermometry t = sideband_thermometry(s_red, s_blue);
    CHECK(t.mean_n == doctest::Approx(0.37).epsilon(0.06));
}

TEST_CASE("a ground-state ensemble emits no red sideband") {
    const TrapConfig trap = spectroscopy_trap({300e3, 300e3, 300e3}, 20);
    const std::array<double, 3> cold{0.0, 0.0, 0.0};
    SpectrumGrid grid{-450e3, 450e3, 45001};
    const Spectrum spec = synthesize_spectrum(trap, cold, 1.0, 100.0, 1.0, 1.0, grid);

    // No component with n_final < n_initial exists at all...
    const std::vector<SidebandComponent> comps = spectrum_components(trap, cold, 1.0, 100.0);
    for (const SidebandComponent& c : comps) CHECK(c.n_final >= c.n_initial);

    // ...and the PSD at the red sideband position is the flat offset up to
    // the far Lorentzian tails of carrier and blue lines (< 1e-9 here).
    const int idx = 7500;  // grid point exactly at -300 kHz
    CHECK(spec.frequency_hz[idx] == doctest::Approx(-300e3).epsilon(1e-12));
    CHECK(std::abs(spec.psd[idx] - 1.0) < 1e-9);

    // Blue sideband and carrier stand well above the floor.
    const int blue = 37500;
    CHECK(spec.frequency_hz[blue] == doctest::Approx(300e3).epsilon(1e-12));
    CHECK(spec.psd[blue] - 1.0 > 1e3 * (spec.psd[idx] - 1.0));
}

TEST_CASE("trap softening pulls the red sideband inward and spreads it") {
    const double f_y = 94e3;
    const TrapConfig trap = spectroscopy_trap({154e3, f_y, 233e3}, 40, 0.02);

    // First red line sits at -f_y*(1 - 3*alpha/4) exactly.
    const std::vector<SidebandComponent> cool =
        spectrum_components(trap, {0.0, 0.4, 0.0}, 1.0, 1.0e3);
    bool found_first_red = false;
    for (const SidebandComponent& c : cool) {
        if (c.axis == Axis::y && c.n_initial == 1 && c.n_final == 0) {
            // hbar and h are tabulated independently, so the ladder carries
            // their ~6e-10 relative mismatch.
            CHECK(c.center_frequency_hz ==
                  doctest::Approx(-f_y * (1.0 - 0.75 * 0.02)).epsilon(1e-8));
            found_first_red = true;
        }
    }
    CHECK(found_first_red);

    const auto red_moments = [&](double occ_y) {
        const std::vector<SidebandComponent> comps =
            spectrum_components(trap, {0.0, occ_y, 0.0}, 1.0, 1.0e3);
        double w_sum = 0.0;
        double f_sum = 0.0;
        for (const SidebandComponent& c : comps) {
            if (c.axis != Axis::y || c.n_initial < 0 || c.n_final >= c.n_initial) continue;
            w_sum += c.rate;
            f_sum += c.rate * c.center_frequency_hz;
        }
        const double centroid = f_sum / w_sum;
        double var = 0.0;
        for (const SidebandComponent& c : comps) {
            if (c.axis != Axis::y || c.n_initial < 0 || c.n_final >= c.n_initial) continue;
            var += c.rate * std::pow(c.center_frequency_hz - centroid, 2);
        }
        return std::array<double, 2>{centroid, var / w_sum};
    };

    const std::array<double, 2> cold = red_moments(0.4);
    const std::array<double, 2> hot = red_moments(1.6);
    // Centroids lie inside the harmonic frequency and move further in as the
    // ensemble heats; the spread of line centers grows with it.
    CHECK(std::abs(cold[0]) < f_y);
    CHECK(std::abs(hot[0]) < std::abs(cold[0]));
    CHECK(hot[1] > cold[1]);
}

TEST_CASE("sideband thermometry inverts the asymmetry with its uncertainty") {
    CHECK(sideband_thermometry(1.0, 2.0).mean_n == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sideband_thermometry(0.0, 1.0).mean_n == 0.0);
    CHECK(sideband_thermometry(0.22, 1.22).mean_n == doctest::Approx(0.22).epsilon(1e-12));

    // sigma = hypot(S+ * dS-, S- * dS+) / (S+ - S-)^2.
    const SidebandThermometry t = sideband_thermometry(1.0, 2.0, 0.1, 0.2);
    CHECK(t.mean_n_err == doctest::Approx(std::hypot(0.2, 0.2)).epsilon(1e-12));

    // Unreadable sidebands are rejected rather than silently negative.
    CHECK_THROWS_AS(sideband_thermometry(2.0, 1.0), NonPhysicalSidebands);
    CHECK_THROWS_AS(sideband_thermometry(1.0, 1.0), NonPhysicalSidebands);
    CHECK_THROWS_AS(sideband_thermometry(-0.1, 1.0), NonPhysicalSidebands);

    // Ground-state fractions for the frozen occupations.
    CHECK(ground_state_occupation(0.10) == doctest::Approx(0.9090909090909091).epsilon(1e-12));
    CHECK(ground_state_occupation(0.78) == doctest::Approx(0.5617977528089888).epsilon(1e-12));
    CHECK(ground_state_occupation(0.22) == doctest::Approx(0.8196721311475410).epsilon(1e-12));
    CHECK(ground_state_occupation(2.5) == doctest::Approx(0.2857142857142857).epsilon(1e-12));
}

TEST_CASE("spectrum synthesis rejects grids it cannot resolve") {
    const TrapConfig trap = spectroscopy_trap({154e3, 94e3, 233e3}, 30);
    const std::array<double, 3> occ{0.2, 0.2, 0.2};

    // Grid that stops short of the fastest axis' sideband.
    CHECK_THROWS_AS(synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.0,
                                        SpectrumGrid{-200e3, 200e3, 4001}),
                    ConfigError);
    // Spacing coarser than a fifth of the narrowest line.
    CHECK_THROWS_AS(synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.0,
                                        SpectrumGrid{-250e3, 250e3, 1001}),
                    GridTooCoarse);
    // Exactly five samples per line width passes.
    CHECK_NOTHROW(synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.0,
                                      SpectrumGrid{-250e3, 250e3, 2501}));
    CHECK_THROWS_AS(synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.0,
                                        SpectrumGrid{-250e3, 250e3, 1}),
                    ConfigError);
    CHECK_THROWS_AS(synthesize_spectrum(trap, {-0.1, 0.2, 0.2}, 1.0e4, 1.0e3, 1.0, 0.0,
                                        SpectrumGrid{-250e3, 250e3, 2501}),
                    ConfigError);

    // Band integration needs at least two grid points inside the band.
    const Spectrum spec =
        synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.0, SpectrumGrid{-250e3, 250e3, 2501});
    CHECK_THROWS_AS(integrate_band(spec, 300e3, 400e3), ConfigError);
    CHECK_THROWS_AS(integrate_band(spec, 100e3, 50e3), ConfigError);
    CHECK(integrate_band(spec, -250e3, 250e3) > 0.0);
}

TEST_CASE("spectra and component tables serialize with their column headers") {
    const TrapConfig trap = spectroscopy_trap({154e3, 94e3, 233e3}, 30);
    const std::array<double, 3> occ{0.0, 0.1, 0.0};
    const Spectrum spec = synthesize_spectrum(trap, occ, 1.0e4, 1.0e3, 1.0, 0.5,
                                              SpectrumGrid{-250e3, 250e3, 2501});

    std::ostringstream spectrum_csv;
    write_spectrum_csv(spectrum_csv, spec);
    std::istringstream spectrum_lines(spectrum_csv.str());
    std::string header;
    std::getline(spectrum_lines, header);
    CHECK(header == "freq_hz,psd");
    int rows = 0;
    for (std::string line; std::getline(spectrum_lines, line);) ++rows;
    CHECK(rows == 2501);

    const std::vector<SidebandComponent> comps = spectrum_components(trap, occ, 1.0e4, 1.0e3);
    std::ostringstream comp_csv;
    write_components_csv(comp_csv, comps);
    std::istringstream comp_lines(comp_csv.str());
    std::getline(comp_lines, header);
    CHECK(header == "axis,n_from,n_to,f_hz,rate,width");
    rows = 0;
    bool saw_carrier = false;
    for (std::string line; std::getline(comp_lines, line);) {
        ++rows;
        if (line.rfind("y,-1,-1,", 0) == 0) saw_carrier = true;
    }
    CHECK(rows == static_cast<int>(comps.size()));
    CHECK(saw_carrier);
}

}  // TEST_SUITE

}  // namespace

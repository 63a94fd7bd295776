#include "drc/spectroscopy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <ostream>

#include "drc/constants.hpp"
#include "drc/errors.hpp"

namespace drc {

namespace {

// Geometric thermal weights P(n) = mean^n / (mean+1)^(n+1), truncated once the
// cumulative weight exceeds 1 - 1e-12 and never above max_level.  The deep
// cutoff keeps the geometric sum identities (power conservation, sideband
// asymmetry) intact to well below the 1e-9 the tests pin.
std::vector<double> thermal_weights(double mean_n, int max_level) {
    if (mean_n <= 0.0) return {1.0};
    const double q = mean_n / (mean_n + 1.0);
    const double p0 = 1.0 / (mean_n + 1.0);
    std::vector<double> weights;
    double w = p0;
    double cumulative = 0.0;
    for (int n = 0; n <= max_level; ++n) {
        weights.push_back(w);
        cumulative += w;
        if (cumulative > 1.0 - 1e-12) break;
        w *= q;
    }
    return weights;
}

}  // namespace

ScatteringRates scattering_rates(int n, double eta, double gamma_sc) {
    if (n < 0) throw ConfigError("motional level index must be non-negative");
    if (gamma_sc < 0.0) throw ConfigError("scattering rate must be non-negative");
    if (!(eta >= 0.0)) throw ConfigError("Lamb-Dicke parameter must be non-negative");
    if (eta >= 0.5) {
        throw LambDickeViolation("eta = " + std::to_string(eta) +
                                 " is too large for the lowest-order sideband expansion");
    }
    const double eta2 = eta * eta;
    ScatteringRates rates;
    rates.red = eta2 * static_cast<double>(n) * gamma_sc;
    rates.blue = eta2 * static_cast<double>(n + 1) * gamma_sc;
    double elastic = (1.0 - eta2 * static_cast<double>(2 * n + 1)) * gamma_sc;
    if (elastic < 0.0) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true)) {
            std::cerr << "warning: elastic scattering rate floored at zero for level " << n
                      << " (lowest-order sideband expansion exhausted)\n";
        }
        elastic = 0.0;
    }
    rates.elastic = elastic;
    return rates;
}

std::vector<SidebandComponent> spectrum_components(const TrapConfig& trap,
                                                   const std::array<double, 3>& mean_n,
                                                   double gamma_sc, double min_width_hz) {
    trap.validate();
    if (gamma_sc < 0.0) throw ConfigError("scattering rate must be non-negative");
    if (!(min_width_hz > 0.0)) throw ConfigError("minimum line width must be positive");
    for (double m : mean_n) {
        if (m < 0.0) throw ConfigError("mean occupation must be non-negative");
    }

    std::vector<SidebandComponent> components;
    for (int a = 0; a < 3; ++a) {
        const Axis axis = static_cast<Axis>(a);
        const double eta = lamb_dicke(trap, axis);
        // Blue lines need the level above the initial one, so the thermal sum
        // stops one level short of the absorbing boundary.
        const int max_level = std::max(0, trap.trap_depth_quanta[a] - 1);
        const std::vector<double> weights = thermal_weights(mean_n[a], max_level);

        double elastic_weight = 0.0;
        for (int n = 0; n < static_cast<int>(weights.size()); ++n) {
            const double pop = weights[n];
            const ScatteringRates rates = scattering_rates(n, eta, gamma_sc);
            const double width_hz =
                std::max(min_width_hz, (rates.red + rates.blue) / constants::two_pi);
            if (n >= 1 && pop * rates.red > 0.0) {
                components.push_back({axis, n, n - 1,
                                      transition_frequency(trap, axis, n, n - 1),
                                      pop * rates.red, width_hz});
            }
            if (pop * rates.blue > 0.0) {
                components.push_back({axis, n, n + 1,
                                      transition_frequency(trap, axis, n, n + 1),
                                      pop * rates.blue, width_hz});
            }
            elastic_weight += pop * rates.elastic;
        }
        components.push_back({axis, -1, -1, 0.0, elastic_weight, min_width_hz});
    }
    return components;
}

double lorentzian(double f_hz, double center_hz, double fwhm_hz) {
    const double half = 0.5 * fwhm_hz;
    const double d = f_hz - center_hz;
    return fwhm_hz / (constants::two_pi * (d * d + half * half));
}

std::vector<double> evaluate_spectrum(const std::vector<SidebandComponent>& components,
                                      const std::vector<double>& frequency_hz,
                                      double amplitude, double offset) {
    std::vector<double> psd(frequency_hz.size(), offset);
    for (const SidebandComponent& c : components) {
        if (c.rate <= 0.0) continue;
        const double half = 0.5 * c.width_hz;
        const double scale = amplitude * c.rate * c.width_hz / constants::two_pi;
        const double half2 = half * half;
        for (std::size_t i = 0; i < frequency_hz.size(); ++i) {
            const double d = frequency_hz[i] - c.center_frequency_hz;
            psd[i] += scale / (d * d + half2);
        }
    }
    return psd;
}

Spectrum synthesize_spectrum(const TrapConfig& trap, const std::array<double, 3>& mean_n,
                             double gamma_sc, double min_width_hz, double amplitude,
                             double offset, const SpectrumGrid& grid) {
    if (grid.samples < 2) throw ConfigError("spectrum grid needs at least two samples");
    if (!(grid.f_max_hz > grid.f_min_hz)) {
        throw ConfigError("spectrum grid must have f_max > f_min");
    }
    trap.validate();
    const double f_peak =
        *std::max_element(trap.omega.begin(), trap.omega.end()) / constants::two_pi;
    if (grid.f_min_hz > -f_peak || grid.f_max_hz < f_peak) {
        throw ConfigError("spectrum grid must cover both motional sidebands (+-" +
                          std::to_string(f_peak) + " Hz)");
    }
    const double spacing =
        (grid.f_max_hz - grid.f_min_hz) / static_cast<double>(grid.samples - 1);
    if (!(min_width_hz > 0.0)) throw ConfigError("minimum line width must be positive");
    if (spacing > min_width_hz / 5.0) {
        throw GridTooCoarse("grid spacing " + std::to_string(spacing) +
                            " Hz gives fewer than 5 samples per " +
                            std::to_string(min_width_hz) + " Hz line width");
    }

    Spectrum spectrum;
    spectrum.frequency_hz.resize(grid.samples);
    for (int i = 0; i < grid.samples; ++i) {
        spectrum.frequency_hz[i] = grid.f_min_hz + spacing * static_cast<double>(i);
    }
    const std::vector<SidebandComponent> components =
        spectrum_components(trap, mean_n, gamma_sc, min_width_hz);
    spectrum.psd = evaluate_spectrum(components, spectrum.frequency_hz, amplitude, offset);
    spectrum.resolution_bandwidth_hz = spacing;
    spectrum.averaging_count = 1;
    return spectrum;
}

double integrate_band(const Spectrum& spectrum, double f_lo_hz, double f_hi_hz) {
    if (spectrum.frequency_hz.size() != spectrum.psd.size()) {
        throw DimensionMismatch("spectrum frequency and psd arrays differ in length");
    }
    if (!(f_hi_hz > f_lo_hz)) throw ConfigError("integration band must have f_hi > f_lo");
    std::size_t lo = 0;
    while (lo < spectrum.frequency_hz.size() && spectrum.frequency_hz[lo] < f_lo_hz) ++lo;
    std::size_t hi = lo;
    while (hi < spectrum.frequency_hz.size() && spectrum.frequency_hz[hi] <= f_hi_hz) ++hi;
    if (hi - lo < 2) throw ConfigError("integration band covers fewer than two grid points");
    double sum = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        sum += 0.5 * (spectrum.psd[i] + spectrum.psd[i - 1]) *
               (spectrum.frequency_hz[i] - spectrum.frequency_hz[i - 1]);
    }
    return sum;
}

SidebandThermometry sideband_thermometry(double s_minus, double s_plus, double s_minus_err,
                                         double s_plus_err) {
    if (!(s_minus >= 0.0) || !(s_plus > s_minus)) {
        throw NonPhysicalSidebands(
            "sideband powers must satisfy 0 <= s_minus < s_plus (got s_minus = " +
            std::to_string(s_minus) + ", s_plus = " + std::to_string(s_plus) + ")");
    }
    const double gap = s_plus - s_minus;
    SidebandThermometry result;
    result.mean_n = s_minus / gap;
    // d<n>/dS- = S+ / gap^2, d<n>/dS+ = -S- / gap^2.
    result.mean_n_err =
        std::hypot(s_plus * s_minus_err, s_minus * s_plus_err) / (gap * gap);
    return result;
}

double ground_state_occupation(double mean_n) { return 1.0 / (1.0 + mean_n); }

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
    if (spectrum.frequency_hz.size() != spectrum.psd.size()) {
        throw DimensionMismatch("spectrum frequency and psd arrays differ in length");
    }
    os << "freq_hz,psd\n";
    os.precision(12);
    for (std::size_t i = 0; i < spectrum.frequency_hz.size(); ++i) {
        os << spectrum.frequency_hz[i] << ',' << spectrum.psd[i] << '\n';
    }
}

void write_components_csv(std::ostream& os, const std::vector<SidebandComponent>& components) {
    os << "axis,n_from,n_to,f_hz,rate,width\n";
    os.precision(12);
    for (const SidebandComponent& c : components) {
        os << axis_name(c.axis) << ',' << c.n_initial << ',' << c.n_final << ','
           << c.center_frequency_hz << ',' << c.rate << ',' << c.width_hz << '\n';
    }
}

}  // namespace drc

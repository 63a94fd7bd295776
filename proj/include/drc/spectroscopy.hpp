#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "drc/trap.hpp"

namespace drc {

// ---------------------------------------------------------------------------
// Motional-sideband synthesis for the heterodyne fluorescence spectrum.
//
// Probe photons scattered by a trapped atom pick up sidebands at the motional
// transition frequencies of each trap axis.  To lowest order in the Lamb-Dicke
// parameter eta the scattering rates out of level n are
//
//   red   (n -> n-1):  eta^2 *  n      * Gamma_sc
//   blue  (n -> n+1):  eta^2 * (n+1)   * Gamma_sc
//   elastic (n -> n):  (1 - eta^2*(2n+1)) * Gamma_sc   (floored at zero)
//
// A thermal ensemble with mean occupation <n> weights level n by the geometric
// distribution P(n) = <n>^n / (<n>+1)^(n+1).  The synthetic spectrum places a
// unit-area Lorentzian at every allowed transition frequency, weighted by the
// thermally averaged rate, so band integrals reproduce the underlying
// scattering rates and the asymmetry S-/S+ = <n>/(<n>+1) carries the
// temperature.
// ---------------------------------------------------------------------------

// Rates of the three lowest-order scattering processes out of level n, 1/s.
struct ScatteringRates {
    double red = 0.0;      // n -> n-1 (zero for n = 0)
    double elastic = 0.0;  // n -> n, floored at zero when the expansion runs out
    double blue = 0.0;     // n -> n+1
};

// Lowest-order Lamb-Dicke scattering rates out of motional level n.
// Throws ConfigError (n < 0 or gamma_sc < 0) and LambDickeViolation (eta >= 0.5).
ScatteringRates scattering_rates(int n, double eta, double gamma_sc);

// One Lorentzian line of the synthetic spectrum.  Carrier entries aggregate
// the elastic rate of every thermally occupied level of one axis and are
// marked with n_initial = n_final = -1.
struct SidebandComponent {
    Axis axis = Axis::x;
    int n_initial = 0;
    int n_final = 0;
    double center_frequency_hz = 0.0;  // relative to the optical carrier
    double rate = 0.0;                 // thermally weighted scattering rate, 1/s
    double width_hz = 0.0;             // FWHM, >= the instrumental floor
};

// Uniform frequency grid, Hz relative to the optical carrier.
struct SpectrumGrid {
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
    int samples = 0;
};

// Sampled power spectral density (arbitrary units) on a uniform grid.
struct Spectrum {
    std::vector<double> frequency_hz;  // ascending, uniform
    std::vector<double> psd;
    double resolution_bandwidth_hz = 0.0;
    int averaging_count = 1;
};

// Thermally weighted Lorentzian decomposition of the fluorescence spectrum:
// red/blue sideband lines for every occupied level of every axis plus one
// aggregated elastic (carrier) line per axis at zero relative frequency.
//
// Line centers come from the anharmonic ladder of `trap`; line widths are
// max(min_width_hz, total depopulation rate of the initial level / 2pi); the
// carrier keeps the instrumental floor min_width_hz.  The thermal sum is
// truncated once the cumulative weight exceeds 1 - 1e-12 (and always below
// the trap depth), so identities such as sum(rates) = 3*Gamma_sc hold to
// better than 1e-9.
// Throws ConfigError (negative occupation, gamma_sc < 0, min_width_hz <= 0)
// and LambDickeViolation via the trap geometry.
std::vector<SidebandComponent> spectrum_components(const TrapConfig& trap,
                                                   const std::array<double, 3>& mean_n,
                                                   double gamma_sc,
                                                   double min_width_hz);

// Unit-area Lorentzian with full width at half maximum `fwhm_hz`.
double lorentzian(double f_hz, double center_hz, double fwhm_hz);

// offset + amplitude * sum over components of rate * lorentzian(f).
std::vector<double> evaluate_spectrum(const std::vector<SidebandComponent>& components,
                                      const std::vector<double>& frequency_hz,
                                      double amplitude, double offset);

// Full synthesis: decompose into components and sample them on `grid`.
// The grid must cover +-max_i(omega_i/2pi) (ConfigError) and resolve the
// narrowest line with at least 5 samples per min_width_hz (GridTooCoarse).
Spectrum synthesize_spectrum(const TrapConfig& trap, const std::array<double, 3>& mean_n,
                             double gamma_sc, double min_width_hz, double amplitude,
                             double offset, const SpectrumGrid& grid);

// Trapezoidal integral of the sampled PSD over [f_lo_hz, f_hi_hz].
// Throws ConfigError when fewer than two grid points fall inside the band.
double integrate_band(const Spectrum& spectrum, double f_lo_hz, double f_hi_hz);

// Mean occupation and its propagated uncertainty.
struct SidebandThermometry {
    double mean_n = 0.0;
    double mean_n_err = 0.0;
};

// <n> = S- / (S+ - S-) from integrated red/blue sideband powers, with
// first-order error propagation from the band-power uncertainties.
// Throws NonPhysicalSidebands unless 0 <= s_minus < s_plus.
SidebandThermometry sideband_thermometry(double s_minus, double s_plus,
                                         double s_minus_err = 0.0,
                                         double s_plus_err = 0.0);

// Thermal ground-state fraction P(0) = 1 / (1 + <n>); expects mean_n >= 0.
double ground_state_occupation(double mean_n);

// "freq_hz,psd" rows, one per grid point.
void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);

// "axis,n_from,n_to,f_hz,rate,width" rows, one per component.
void write_components_csv(std::ostream& os, const std::vector<SidebandComponent>& components);

}  // namespace drc

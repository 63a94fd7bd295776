#ifndef DRC_CONFIG_HPP
#define DRC_CONFIG_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "drc/constants.hpp"
#include "drc/dissipators.hpp"
#include "drc/trap.hpp"

namespace drc {

// Complete description of a simulator run, read from a sectioned key = value
// text file ('#' or ';' start a comment).  Unknown sections or keys are
// rejected with the offending name, every value is validated through the
// owning module's checks at load time, and dump_run_config() emits a
// canonical file that reloads to an identical configuration.
struct RunConfig {
    // [run]
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int workers = 0;                  // 0 = hardware default
    std::string method = "rate";      // cooling solver: rate | lindblad
    double duration_s = 0.5;          // cooling / scan horizon
    int time_samples = 64;
    double initial_mean_n = 2.0;      // thermal start per axis
    double transverse_coupling = 0.3; // x/z exchange relative to y
    double scan_b_min_gauss = 0.05;
    double scan_b_max_gauss = 0.71;
    int scan_points = 40;

    // [trap]
    std::array<double, 3> trap_freq_hz{154e3, 83e3, 233e3};
    std::array<double, 3> anharmonicity{0.0, 0.0, 0.0};
    std::array<int, 3> trap_depth{20, 20, 20};
    std::array<double, 3> eta_projection{1.0, 1.0, 1.0};
    double mass_kg = constants::cesium::mass;
    double probe_wavelength_m = constants::cesium::d2_wavelength;

    // [field]
    double b_off_gauss = 0.237;
    double b_gradient_gauss_per_m = 2.0e5;
    double lande_g = constants::cesium::g_f4;
    int f_total = constants::cesium::f_ground;

    // [laser]
    double detuning_linewidths = 0.0;
    double intensity_sat = 0.0;
    double linewidth_rad_s = constants::cesium::d2_linewidth;
    double ac_stark_shift_per_mf = 0.0;
    // Stretched-transition scattering rate as R_p / 2pi; when > 0 it replaces
    // the detuning/intensity pair (implemented as the resonant intensity that
    // produces the requested rate).
    double pump_rate_hz = 30e3;

    // [dissipators]
    std::array<double, 3> recoil_geometry{0.4, 0.4, 0.4};
    std::array<double, 3> background_quanta_per_s{0.0, 0.0, 0.0};
    double boundary_loss_rate = 1e5;  // 1/s at the absorbing level

    // [signal]
    double mean_rate_hz = 5e6;
    double carrier_offset_hz = 10e6;
    double stream_duration_s = 0.2;
    int realizations = 100;
    double window_s = 1e-3;
    double overlap = 0.5;
    double bin_s = 2.5e-8;
    double total_modulation = 0.5;

    // [fit]
    std::array<double, 3> fit_mean_n{1.4, 0.58, 0.22};
    double min_width_hz = 1e4;
    double amplitude = 1.0;
    double offset = 0.0;
    double gamma_sc_hz = 0.0;  // 0 = tied to min_width (the fit-model rule)
    double span_hz = 280e3;
    int samples = 561;
    bool log_occupation = false;
    bool weight_by_variance = false;
    int multistart = 1;
    std::array<double, 3> band_hz{21e3, 21e3, 25e3};  // thermometry half-widths

    // Assembled module records (validated by the modules themselves).
    TrapConfig trap() const;
    FieldConfig field() const;
    LaserConfig laser() const;  // pump_rate_hz override already folded in
    DissipatorSet dissipators() const;
    double gamma_sc() const;    // rad/s, applying the min_width tie when 0

    // Cross-module sanity of every derived record plus the CLI-level fields.
    void validate() const;
};

// Strict parse on top of the defaults; throws ConfigError with the offending
// section/key/line on any unknown name or malformed value.
RunConfig load_run_config(std::istream& is);
RunConfig load_run_config_file(const std::string& path);

// Apply one key = value override using the same registry as the file parser.
// `key` is section-qualified ("run.seed", "trap.omega_y_hz", ...).
void apply_override(RunConfig& cfg, const std::string& qualified_key,
                    const std::string& value);

// Canonical dump: every section and key in a fixed order, values formatted to
// round-trip exactly.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace drc

#endif

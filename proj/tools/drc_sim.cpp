// drc-sim: command-line front end of the cooling/spectroscopy toolkit.
//
// Subcommands
//   resonances   offset-field survival scan -> scan.csv, scan_summary.json
//   cool         cooling trajectory at the configured field -> trajectory.csv,
//                cool_summary.json
//   spectrum     fluorescence spectrum; --mode synth writes the noiseless
//                model, --mode pipeline runs the full click-stream/Welch
//                chain -> psd.csv
//   fit          least-squares fit of a psd.csv -> fit.json
//   thermometry  sideband-asymmetry occupation readout of a psd.csv ->
//                thermometry.json
//
// One master seed drives every stochastic stage through the documented
// splitting rule, so identical config + seed reproduce outputs byte for byte
// regardless of worker count.  Errors exit nonzero with a single
// "error: ..." line on standard error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drc/config.hpp"
#include "drc/errors.hpp"
#include "drc/fitting.hpp"
#include "drc/hilbert.hpp"
#include "drc/lindblad.hpp"
#include "drc/rate_model.hpp"
#include "drc/scan.hpp"
#include "drc/signal.hpp"
#include "drc/spectroscopy.hpp"
#include "drc/trap.hpp"
#include "drc/worker_pool.hpp"

namespace {

using nlohmann::json;

std::filesystem::path out_path(const drc::RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / name;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw drc::ConfigError("cannot write '" + p.string() + "'");
    return f;
}

void write_json(const drc::RunConfig& cfg, const std::string& name, const json& j) {
    auto f = open_out(out_path(cfg, name));
    f << j.dump(2) << "\n";
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

drc::ScanOptions scan_options(const drc::RunConfig& cfg) {
    drc::ScanOptions opt;
    opt.method = cfg.method == "lindblad" ? drc::ScanOptions::Method::lindblad
                                          : drc::ScanOptions::Method::rate;
    opt.initial_mean_n = cfg.initial_mean_n;
    opt.time_samples = cfg.time_samples;
    opt.stark_per_mf = cfg.ac_stark_shift_per_mf;
    opt.transverse_coupling_factor = cfg.transverse_coupling;
    opt.workers = cfg.workers;
    return opt;
}

// ---------------------------------------------------------------------------
// resonances
// ---------------------------------------------------------------------------

void cmd_resonances(const drc::RunConfig& cfg) {
    if (cfg.scan_points < 2) {
        throw drc::ConfigError("resonance scan needs run.scan_points >= 2");
    }
    const drc::TrapConfig trap = cfg.trap();
    const drc::FieldConfig field = cfg.field();
    const drc::DissipatorSet diss = cfg.dissipators();
    const std::vector<double> b_values =
        drc::field_range(cfg.scan_b_min_gauss, cfg.scan_b_max_gauss, cfg.scan_points);

    const std::vector<drc::ScanPoint> curve = drc::scan_offset_field(
        trap, field, b_values, diss, cfg.duration_s, scan_options(cfg));

    {
        auto f = open_out(out_path(cfg, "scan.csv"));
        drc::write_scan_csv(f, curve);
    }

    // Local survival maxima, refined by the vertex of the parabola through the
    // three points around each peak.
    json resonances = json::array();
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        const double sm = curve[i - 1].survival;
        const double s0 = curve[i].survival;
        const double sp = curve[i + 1].survival;
        if (!(s0 > sm && s0 >= sp)) continue;
        const double h = curve[i + 1].b_off_gauss - curve[i].b_off_gauss;
        const double denom = sm - 2.0 * s0 + sp;
        double b_peak = curve[i].b_off_gauss;
        if (denom < 0.0) b_peak += 0.5 * h * (sm - sp) / denom;
        resonances.push_back({{"b_off_gauss", b_peak}, {"survival", s0}});
    }

    const int best = drc::argmax_survival(curve);
    json summary;
    summary["resonances"] = resonances;
    summary["first_resonance_gauss"] =
        resonances.empty() ? json(nullptr) : resonances[0]["b_off_gauss"];
    summary["best_survival_gauss"] = curve[best].b_off_gauss;
    summary["best_survival"] = curve[best].survival;
    summary["points"] = static_cast<int>(curve.size());
    summary["duration_s"] = cfg.duration_s;
    summary["method"] = cfg.method;
    write_json(cfg, "scan_summary.json", summary);

    if (resonances.empty()) {
        std::cout << "no interior survival maximum; best survival "
                  << fmt(curve[best].survival) << " at B = "
                  << fmt(curve[best].b_off_gauss) << " G\n";
    } else {
        std::cout << "first resonance at B = "
                  << fmt(double(resonances[0]["b_off_gauss"])) << " G (survival "
                  << fmt(double(resonances[0]["survival"])) << ")\n";
    }
}

// ---------------------------------------------------------------------------
// cool
// ---------------------------------------------------------------------------

Eigen::VectorXd thermal_populations(int levels, double mean_n) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(levels);
    if (mean_n <= 0.0) {
        p(0) = 1.0;
        return p;
    }
    const double q = mean_n / (1.0 + mean_n);
    for (int n = 0; n < levels; ++n) p(n) = std::pow(q, n);
    p /= p.sum();
    return p;
}

struct AxisTrajectory {
    std::vector<double> times;
    std::vector<double> mean_n;
    std::vector<double> survival;
};

AxisTrajectory cool_axis_rate(const drc::RunConfig& cfg, const drc::TrapConfig& trap,
                              const drc::DissipatorSet& diss, int a, double coupling) {
    drc::RateModelParams prm;
    prm.omega = trap.omega[a];
    prm.delta_off = drc::zeeman_splitting(cfg.field());
    prm.coupling = coupling;
    prm.pump_rate = diss.pump_rate;
    prm.recoil_per_event = diss.recoil_per_event[a];
    prm.background_rate = diss.background_heating[a];
    prm.stark_per_mf = cfg.ac_stark_shift_per_mf;
    prm.levels = std::max(2, trap.trap_depth_quanta[a]);
    prm.absorbing = true;

    const drc::RateChain chain = drc::build_drc_chain(prm);
    const Eigen::VectorXd p0 = thermal_populations(prm.levels, cfg.initial_mean_n);
    const drc::RateTrajectory traj =
        drc::rate_evolve(chain, p0, cfg.duration_s, std::max(2, cfg.time_samples));
    return {traj.times, traj.mean_n, traj.survival};
}

AxisTrajectory cool_axis_lindblad(const drc::RunConfig& cfg, const drc::TrapConfig& trap,
                                  const drc::DissipatorSet& diss, int a,
                                  double coupling) {
    const drc::FieldConfig field = cfg.field();
    const drc::HilbertSpace space{field.f_total, trap.trap_depth_quanta[a]};
    const drc::Operator h =
        drc::build_axis_hamiltonian(space, trap.omega[a], drc::zeeman_splitting(field),
                                    coupling, cfg.ac_stark_shift_per_mf);
    const drc::LindbladGenerator gen(h, diss, static_cast<drc::Axis>(a));
    const drc::DensityState rho0 =
        drc::thermal_state(space, -field.f_total, cfg.initial_mean_n, 1e-3);

    drc::EvolveOptions ev;
    ev.t_final = cfg.duration_s;
    ev.sample_interval = cfg.duration_s / std::max(1, cfg.time_samples - 1);
    ev.method = drc::EvolveOptions::Method::krylov;
    ev.track_populations = false;
    const drc::CoolingTrajectory traj = drc::lindblad_evolve(gen, rho0, ev);
    return {traj.times, traj.mean_n, traj.survival};
}

void cmd_cool(const drc::RunConfig& cfg) {
    const drc::TrapConfig trap = cfg.trap();
    const drc::FieldConfig field = cfg.field();
    const drc::DissipatorSet diss = cfg.dissipators();
    const double coupling_y = drc::spin_motion_coupling(trap, field);

    std::array<AxisTrajectory, 3> axes;
    std::array<std::string, 3> failures;
    drc::parallel_for(
        3,
        [&](int a) {
            try {
                const double coupling =
                    a == 1 ? coupling_y : cfg.transverse_coupling * coupling_y;
                axes[a] = cfg.method == "lindblad"
                              ? cool_axis_lindblad(cfg, trap, diss, a, coupling)
                              : cool_axis_rate(cfg, trap, diss, a, coupling);
            } catch (const std::exception& e) {
                failures[a] = e.what();
            }
        },
        cfg.workers);
    for (const auto& msg : failures) {
        if (!msg.empty()) throw drc::ConfigError(msg);
    }

    // All three axes run the same solver on the same sampling grid.
    const std::vector<double>& times = axes[1].times;
    std::array<std::vector<double>, 3> mean_n;
    std::vector<double> survival(times.size(), 1.0);
    for (int a = 0; a < 3; ++a) {
        if (axes[a].times.size() != times.size()) {
            throw drc::DimensionMismatch("per-axis trajectories sampled differently");
        }
        mean_n[a] = axes[a].mean_n;
        for (std::size_t i = 0; i < times.size(); ++i) {
            survival[i] *= std::clamp(axes[a].survival[i], 0.0, 1.0);
        }
    }

    {
        auto f = open_out(out_path(cfg, "trajectory.csv"));
        drc::write_trajectory_csv(f, times, mean_n, survival);
    }

    json summary;
    summary["method"] = cfg.method;
    summary["duration_s"] = cfg.duration_s;
    summary["final_survival"] = survival.back();
    summary["final_mean_n"] = {mean_n[0].back(), mean_n[1].back(), mean_n[2].back()};
    try {
        const drc::LifetimeFit life = drc::survival_lifetime(times, survival);
        summary["lifetime_s"] = life.tau_s;
        summary["lifetime_err_s"] = life.tau_err_s;
    } catch (const drc::FitDiverged&) {
        summary["lifetime_s"] = nullptr;
        summary["lifetime_err_s"] = nullptr;
    }
    write_json(cfg, "cool_summary.json", summary);

    std::cout << "final mean n = {" << fmt(mean_n[0].back()) << ", "
              << fmt(mean_n[1].back()) << ", " << fmt(mean_n[2].back())
              << "}, survival " << fmt(survival.back()) << "\n";
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

void cmd_spectrum(const drc::RunConfig& cfg, const std::string& mode) {
    const drc::TrapConfig trap = cfg.trap();
    if (mode == "synth") {
        const drc::SpectrumGrid grid{-cfg.span_hz, cfg.span_hz, cfg.samples};
        const drc::Spectrum spec =
            drc::synthesize_spectrum(trap, cfg.fit_mean_n, cfg.gamma_sc(),
                                     cfg.min_width_hz, cfg.amplitude, cfg.offset, grid);
        auto f = open_out(out_path(cfg, "psd.csv"));
        drc::write_spectrum_csv(f, spec);
        std::cout << "synthetic spectrum: " << spec.frequency_hz.size()
                  << " points, resolution " << fmt(spec.resolution_bandwidth_hz)
                  << " Hz\n";
    } else if (mode == "pipeline") {
        drc::SpectrumModel model;
        model.components = drc::spectrum_components(trap, cfg.fit_mean_n, cfg.gamma_sc(),
                                                    cfg.min_width_hz);
        model.total_modulation = cfg.total_modulation;
        const drc::PsdEstimate est = drc::averaged_heterodyne_psd(
            model, cfg.mean_rate_hz, cfg.carrier_offset_hz, cfg.stream_duration_s,
            cfg.window_s, cfg.overlap, cfg.bin_s, cfg.realizations, cfg.seed,
            cfg.workers);
        auto f = open_out(out_path(cfg, "psd.csv"));
        drc::write_spectrum_csv(f, est.spectrum);
        std::cout << "averaged heterodyne spectrum: " << cfg.realizations
                  << " realizations x " << est.segments << " segments, resolution "
                  << fmt(est.spectrum.resolution_bandwidth_hz) << " Hz\n";
    } else {
        throw drc::ConfigError("unknown spectrum mode '" + mode +
                               "' (use synth or pipeline)");
    }
}

// ---------------------------------------------------------------------------
// fit / thermometry input
// ---------------------------------------------------------------------------

drc::Spectrum load_psd_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw drc::ConfigError("cannot open spectrum file '" + path + "'");
    std::string line;
    if (!std::getline(f, line) || line.rfind("freq_hz,psd", 0) != 0) {
        throw drc::ConfigError("'" + path + "' is not a freq_hz,psd spectrum file");
    }
    drc::Spectrum spec;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw drc::ConfigError(path + " line " + std::to_string(lineno) +
                                   ": expected 'freq,psd'");
        }
        try {
            spec.frequency_hz.push_back(std::stod(line.substr(0, comma)));
            spec.psd.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw drc::ConfigError(path + " line " + std::to_string(lineno) +
                                   ": malformed number");
        }
    }
    if (spec.frequency_hz.size() < 2) {
        throw drc::ConfigError("'" + path + "' holds fewer than two spectrum points");
    }
    spec.resolution_bandwidth_hz = spec.frequency_hz[1] - spec.frequency_hz[0];
    return spec;
}

// Pipeline PSDs live on the absolute Welch grid (all frequencies >= 0); the
// beat band around the local-oscillator offset is cut out and re-centered
// before any relative-frequency analysis.  Synthetic spectra are already
// relative (negative red side present) and pass through.
drc::Spectrum to_relative_band(const drc::RunConfig& cfg, const drc::Spectrum& spec) {
    const double f_min = *std::min_element(spec.frequency_hz.begin(),
                                           spec.frequency_hz.end());
    if (f_min < 0.0) return spec;
    return drc::extract_beat_band(spec, cfg.carrier_offset_hz, cfg.span_hz, cfg.bin_s);
}

std::string resolve_input(const drc::RunConfig& cfg, const std::string& input) {
    if (!input.empty()) return input;
    return (std::filesystem::path(cfg.out_dir) / "psd.csv").string();
}

void cmd_fit(const drc::RunConfig& cfg, const std::string& input, bool auto_init) {
    const drc::TrapConfig trap = cfg.trap();
    const drc::Spectrum band = to_relative_band(cfg, load_psd_csv(resolve_input(cfg, input)));

    drc::FitModelParams initial;
    if (auto_init) {
        initial = drc::auto_initial_params(band, trap);
    } else {
        initial.mean_n = cfg.fit_mean_n;
        initial.omega = trap.omega;
        initial.min_width_hz = cfg.min_width_hz;
        initial.amplitude = cfg.amplitude;
        initial.offset = cfg.offset;
    }
    const drc::FitBounds bounds = drc::FitBounds::around(initial);
    drc::FitOptions opt;
    opt.log_occupation = cfg.log_occupation;
    opt.weight_by_variance = cfg.weight_by_variance;

    const drc::FitResult result =
        cfg.multistart > 1
            ? drc::fit_spectrum_multistart(band, trap, initial, bounds, opt,
                                           cfg.multistart, cfg.seed, cfg.workers)
            : drc::fit_spectrum(band, trap, initial, bounds, opt);

    json j = drc::fit_result_json(result);
    j["report"] = drc::fit_report(result, trap);
    write_json(cfg, "fit.json", j);

    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        std::cout << "mean n_" << names[a] << " = " << fmt(result.params.mean_n[a])
                  << " +- " << fmt(result.uncertainties.mean_n[a]) << ", omega_"
                  << names[a] << "/2pi = "
                  << fmt(result.params.omega[a] / drc::constants::two_pi / 1e3)
                  << " kHz\n";
    }
}

// ---------------------------------------------------------------------------
// thermometry
// ---------------------------------------------------------------------------

void cmd_thermometry(const drc::RunConfig& cfg, const std::string& input) {
    const drc::Spectrum band = to_relative_band(cfg, load_psd_csv(resolve_input(cfg, input)));

    struct Window {
        double lo, hi;
        std::string label;
    };
    std::vector<Window> windows;
    for (int a = 0; a < 3; ++a) {
        const double f_a = cfg.trap_freq_hz[a];
        const double w = cfg.band_hz[a];
        const std::string name(1, "xyz"[a]);
        if (f_a - w <= 0.0) {
            throw drc::ConfigError("thermometry band for axis " + name +
                                   " reaches through zero frequency");
        }
        windows.push_back({-f_a - w, -f_a + w, "S-_" + name});
        windows.push_back({f_a - w, f_a + w, "S+_" + name});
    }
    std::vector<Window> sorted = windows;
    std::sort(sorted.begin(), sorted.end(),
              [](const Window& a, const Window& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        if (sorted[i].hi > sorted[i + 1].lo) {
            throw drc::ConfigError("thermometry bands " + sorted[i].label + " and " +
                                   sorted[i + 1].label + " overlap");
        }
    }

    // The configured baseline is removed before integrating so band powers
    // carry only spectral weight.
    drc::Spectrum flat = band;
    for (double& p : flat.psd) p = std::max(p - cfg.offset, 0.0);

    auto band_power = [&flat](double lo, double hi) {
        try {
            return drc::integrate_band(flat, lo, hi);
        } catch (const drc::ConfigError&) {
            return 0.0;  // band outside the measured grid -> no power seen
        }
    };

    json axes;
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        const double f_a = cfg.trap_freq_hz[a];
        const double w = cfg.band_hz[a];
        const double s_minus = band_power(-f_a - w, -f_a + w);
        const double s_plus = band_power(f_a - w, f_a + w);
        const drc::SidebandThermometry t = drc::sideband_thermometry(s_minus, s_plus);
        json ja;
        ja["s_minus"] = s_minus;
        ja["s_plus"] = s_plus;
        ja["mean_n"] = t.mean_n;
        ja["mean_n_err"] = t.mean_n_err;
        ja["ground_state_percent"] = 100.0 * drc::ground_state_occupation(t.mean_n);
        ja["band_center_hz"] = f_a;
        ja["band_half_width_hz"] = w;
        axes[names[a]] = ja;
        std::cout << names[a] << ": mean n = " << fmt(t.mean_n) << " +- "
                  << fmt(t.mean_n_err) << ", P0 = "
                  << fmt(100.0 * drc::ground_state_occupation(t.mean_n), 3) << "%\n";
    }
    write_json(cfg, "thermometry.json", json{{"axes", axes}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"degenerate Raman cooling simulator and analysis chain"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int workers = 0;
    bool print_config = false;
    app.add_option("--config", config_path, "run configuration file (sectioned key = value)");
    auto* seed_opt = app.add_option("--seed", seed, "master RNG seed (overrides config)");
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)");
    auto* workers_opt =
        app.add_option("--workers", workers,
                       "worker threads; DRC_SIM_WORKERS is the fallback, 0 = hardware");
    app.add_flag("--print-config", print_config,
                 "print the effective configuration and exit");

    auto* sc_res = app.add_subcommand("resonances", "offset-field survival scan");
    auto* sc_cool = app.add_subcommand("cool", "cooling run at the configured field");

    auto* sc_spec = app.add_subcommand("spectrum", "fluorescence spectrum synthesis");
    std::string mode = "synth";
    sc_spec->add_option("--mode", mode, "synth (noiseless model) or pipeline (click streams)");

    auto* sc_fit = app.add_subcommand("fit", "fit a measured or synthetic spectrum");
    std::string fit_input;
    bool auto_init = false;
    sc_fit->add_option("--input", fit_input, "spectrum CSV (default <out>/psd.csv)");
    sc_fit->add_flag("--auto-init", auto_init, "derive the starting point from the data");

    auto* sc_thermo = app.add_subcommand("thermometry", "sideband-asymmetry readout");
    std::string thermo_input;
    sc_thermo->add_option("--input", thermo_input, "spectrum CSV (default <out>/psd.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        drc::RunConfig cfg;
        if (!config_path.empty()) cfg = drc::load_run_config_file(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (out_opt->count() > 0) cfg.out_dir = out_dir;
        if (workers_opt->count() > 0) {
            cfg.workers = workers;
        } else if (const char* env = std::getenv("DRC_SIM_WORKERS")) {
            try {
                cfg.workers = std::stoi(env);
            } catch (const std::exception&) {
                throw drc::ConfigError(std::string("DRC_SIM_WORKERS value '") + env +
                                       "' is not an integer");
            }
        }
        cfg.validate();

        if (print_config) {
            std::cout << drc::dump_run_config(cfg);
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << "error: missing subcommand "
                         "(resonances|cool|spectrum|fit|thermometry)\n";
            return 1;
        }

        if (sc_res->parsed()) cmd_resonances(cfg);
        if (sc_cool->parsed()) cmd_cool(cfg);
        if (sc_spec->parsed()) cmd_spectrum(cfg, mode);
        if (sc_fit->parsed()) cmd_fit(cfg, fit_input, auto_init);
        if (sc_thermo->parsed()) cmd_thermometry(cfg, thermo_input);
        return 0;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error: " << msg << "\n";
        return 1;
    }
}

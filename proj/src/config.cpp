#include "drc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "drc/errors.hpp"

namespace drc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Strip a trailing comment: '#' or ';' at the start of the line or preceded
// by whitespace opens a comment (so values themselves may contain the
// characters mid-token).
std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((s[i] == '#' || s[i] == ';') &&
            (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1])))) {
            return s.substr(0, i);
        }
    }
    return s;
}

double parse_double(const std::string& raw, const std::string& where) {
    double v = 0.0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ConfigError("value '" + raw + "' for " + where + " is not a finite number");
    }
    return v;
}

long long parse_ll(const std::string& raw, const std::string& where) {
    long long v = 0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("value '" + raw + "' for " + where + " is not an integer");
    }
    return v;
}

int parse_int(const std::string& raw, const std::string& where) {
    const long long v = parse_ll(raw, where);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("value '" + raw + "' for " + where + " is out of range");
    }
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& raw, const std::string& where) {
    std::uint64_t v = 0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("value '" + raw + "' for " + where +
                          " is not a non-negative integer");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& where) {
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw ConfigError("value '" + raw + "' for " + where +
                      " is not a boolean (use true/false)");
}

// Shortest representation that parses back to the identical double, so dumped
// configs reload bit-for-bit.
std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

struct KeyDef {
    std::string section;
    std::string key;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

KeyDef def(const char* sec, const char* key, double RunConfig::*m) {
    return {sec, key,
            [m](RunConfig& c, const std::string& raw, const std::string& where) {
                c.*m = parse_double(raw, where);
            },
            [m](const RunConfig& c) { return format_double(c.*m); }};
}

KeyDef def(const char* sec, const char* key, int RunConfig::*m) {
    return {sec, key,
            [m](RunConfig& c, const std::string& raw, const std::string& where) {
                c.*m = parse_int(raw, where);
            },
            [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

KeyDef def(const char* sec, const char* key, bool RunConfig::*m) {
    return {sec, key,
            [m](RunConfig& c, const std::string& raw, const std::string& where) {
                c.*m = parse_bool(raw, where);
            },
            [m](const RunConfig& c) { return (c.*m) ? "true" : "false"; }};
}

KeyDef def(const char* sec, const char* key, std::uint64_t RunConfig::*m) {
    return {sec, key,
            [m](RunConfig& c, const std::string& raw, const std::string& where) {
                c.*m = parse_u64(raw, where);
            },
            [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

KeyDef def(const char* sec, const char* key, std::string RunConfig::*m) {
    return {sec, key,
            [m](RunConfig& c, const std::string& raw, const std::string& where) {
                if (raw.empty()) throw ConfigError("value for " + where + " is empty");
                c.*m = raw;
            },
            [m](const RunConfig& c) { return c.*m; }};
}

KeyDef def(const char* sec, const char* key, std::array<double, 3> RunConfig::*m,
           int idx) {
    return {sec, key,
            [m, idx](RunConfig& c, const std::string& raw, const std::string& where) {
                (c.*m)[idx] = parse_double(raw, where);
            },
            [m, idx](const RunConfig& c) { return format_double((c.*m)[idx]); }};
}

KeyDef def(const char* sec, const char* key, std::array<int, 3> RunConfig::*m,
           int idx) {
    return {sec, key,
            [m, idx](RunConfig& c, const std::string& raw, const std::string& where) {
                (c.*m)[idx] = parse_int(raw, where);
            },
            [m, idx](const RunConfig& c) { return std::to_string((c.*m)[idx]); }};
}

const std::vector<KeyDef>& registry() {
    static const std::vector<KeyDef> defs = [] {
        std::vector<KeyDef> d;
        // [run]
        d.push_back(def("run", "seed", &RunConfig::seed));
        d.push_back(def("run", "out_dir", &RunConfig::out_dir));
        d.push_back(def("run", "workers", &RunConfig::workers));
        d.push_back(def("run", "method", &RunConfig::method));
        d.push_back(def("run", "duration_s", &RunConfig::duration_s));
        d.push_back(def("run", "time_samples", &RunConfig::time_samples));
        d.push_back(def("run", "initial_mean_n", &RunConfig::initial_mean_n));
        d.push_back(def("run", "transverse_coupling", &RunConfig::transverse_coupling));
        d.push_back(def("run", "scan_b_min_gauss", &RunConfig::scan_b_min_gauss));
        d.push_back(def("run", "scan_b_max_gauss", &RunConfig::scan_b_max_gauss));
        d.push_back(def("run", "scan_points", &RunConfig::scan_points));
        // [trap]
        d.push_back(def("trap", "omega_x_hz", &RunConfig::trap_freq_hz, 0));
        d.push_back(def("trap", "omega_y_hz", &RunConfig::trap_freq_hz, 1));
        d.push_back(def("trap", "omega_z_hz", &RunConfig::trap_freq_hz, 2));
        d.push_back(def("trap", "anharmonicity_x", &RunConfig::anharmonicity, 0));
        d.push_back(def("trap", "anharmonicity_y", &RunConfig::anharmonicity, 1));
        d.push_back(def("trap", "anharmonicity_z", &RunConfig::anharmonicity, 2));
        d.push_back(def("trap", "depth_x", &RunConfig::trap_depth, 0));
        d.push_back(def("trap", "depth_y", &RunConfig::trap_depth, 1));
        d.push_back(def("trap", "depth_z", &RunConfig::trap_depth, 2));
        d.push_back(def("trap", "eta_projection_x", &RunConfig::eta_projection, 0));
        d.push_back(def("trap", "eta_projection_y", &RunConfig::eta_projection, 1));
        d.push_back(def("trap", "eta_projection_z", &RunConfig::eta_projection, 2));
        d.push_back(def("trap", "mass_kg", &RunConfig::mass_kg));
        d.push_back(def("trap", "probe_wavelength_m", &RunConfig::probe_wavelength_m));
        // [field]
        d.push_back(def("field", "b_off_gauss", &RunConfig::b_off_gauss));
        d.push_back(def("field", "b_gradient_gauss_per_m",
                        &RunConfig::b_gradient_gauss_per_m));
        d.push_back(def("field", "lande_g", &RunConfig::lande_g));
        d.push_back(def("field", "f_total", &RunConfig::f_total));
        // [laser]
        d.push_back(def("laser", "detuning_linewidths", &RunConfig::detuning_linewidths));
        d.push_back(def("laser", "intensity_sat", &RunConfig::intensity_sat));
        d.push_back(def("laser", "linewidth_rad_s", &RunConfig::linewidth_rad_s));
        d.push_back(def("laser", "ac_stark_shift_per_mf",
                        &RunConfig::ac_stark_shift_per_mf));
        d.push_back(def("laser", "pump_rate_hz", &RunConfig::pump_rate_hz));
        // [dissipators]
        d.push_back(def("dissipators", "geometry_x", &RunConfig::recoil_geometry, 0));
        d.push_back(def("dissipators", "geometry_y", &RunConfig::recoil_geometry, 1));
        d.push_back(def("dissipators", "geometry_z", &RunConfig::recoil_geometry, 2));
        d.push_back(def("dissipators", "background_x",
                        &RunConfig::background_quanta_per_s, 0));
        d.push_back(def("dissipators", "background_y",
                        &RunConfig::background_quanta_per_s, 1));
        d.push_back(def("dissipators", "background_z",
                        &RunConfig::background_quanta_per_s, 2));
        d.push_back(def("dissipators", "boundary_loss_rate",
                        &RunConfig::boundary_loss_rate));
        // [signal]
        d.push_back(def("signal", "mean_rate_hz", &RunConfig::mean_rate_hz));
        d.push_back(def("signal", "carrier_offset_hz", &RunConfig::carrier_offset_hz));
        d.push_back(def("signal", "duration_s", &RunConfig::stream_duration_s));
        d.push_back(def("signal", "realizations", &RunConfig::realizations));
        d.push_back(def("signal", "window_s", &RunConfig::window_s));
        d.push_back(def("signal", "overlap", &RunConfig::overlap));
        d.push_back(def("signal", "bin_s", &RunConfig::bin_s));
        d.push_back(def("signal", "total_modulation", &RunConfig::total_modulation));
        // [fit]
        d.push_back(def("fit", "mean_n_x", &RunConfig::fit_mean_n, 0));
        d.push_back(def("fit", "mean_n_y", &RunConfig::fit_mean_n, 1));
        d.push_back(def("fit", "mean_n_z", &RunConfig::fit_mean_n, 2));
        d.push_back(def("fit", "min_width_hz", &RunConfig::min_width_hz));
        d.push_back(def("fit", "amplitude", &RunConfig::amplitude));
        d.push_back(def("fit", "offset", &RunConfig::offset));
        d.push_back(def("fit", "gamma_sc_hz", &RunConfig::gamma_sc_hz));
        d.push_back(def("fit", "span_hz", &RunConfig::span_hz));
        d.push_back(def("fit", "samples", &RunConfig::samples));
        d.push_back(def("fit", "log_occupation", &RunConfig::log_occupation));
        d.push_back(def("fit", "weight_by_variance", &RunConfig::weight_by_variance));
        d.push_back(def("fit", "multistart", &RunConfig::multistart));
        d.push_back(def("fit", "band_x_hz", &RunConfig::band_hz, 0));
        d.push_back(def("fit", "band_y_hz", &RunConfig::band_hz, 1));
        d.push_back(def("fit", "band_z_hz", &RunConfig::band_hz, 2));
        return d;
    }();
    return defs;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
    for (const auto& kd : registry()) {
        if (kd.section == section && kd.key == key) return &kd;
    }
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const auto& kd : registry()) {
        if (kd.section == section) return true;
    }
    return false;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

TrapConfig RunConfig::trap() const {
    TrapConfig t;
    for (int i = 0; i < 3; ++i) {
        t.omega[i] = constants::two_pi * trap_freq_hz[i];
        t.anharmonicity[i] = anharmonicity[i];
        t.trap_depth_quanta[i] = trap_depth[i];
        t.eta_projection[i] = eta_projection[i];
    }
    t.mass = mass_kg;
    t.probe_wavelength = probe_wavelength_m;
    return t;
}

FieldConfig RunConfig::field() const {
    FieldConfig f;
    f.b_off_gauss = b_off_gauss;
    f.b_gradient_gauss_per_m = b_gradient_gauss_per_m;
    f.lande_g = lande_g;
    f.f_total = f_total;
    return f;
}

LaserConfig RunConfig::laser() const {
    LaserConfig l;
    l.linewidth = linewidth_rad_s;
    l.ac_stark_shift_per_mf = ac_stark_shift_per_mf;
    if (pump_rate_hz > 0.0) {
        // Solve (Gamma/2) s / (1 + s) = 2 pi * pump_rate_hz for the resonant
        // saturation parameter; only rates below Gamma/2 are reachable.
        const double rate = constants::two_pi * pump_rate_hz;
        require(2.0 * rate < linewidth_rad_s,
                "pump_rate_hz " + format_double(pump_rate_hz) +
                    " exceeds the saturation limit linewidth/(4 pi)");
        l.detuning_linewidths = 0.0;
        l.intensity_sat = 2.0 * rate / (linewidth_rad_s - 2.0 * rate);
    } else {
        l.detuning_linewidths = detuning_linewidths;
        l.intensity_sat = intensity_sat;
    }
    return l;
}

DissipatorSet RunConfig::dissipators() const {
    DissipatorSet d = DissipatorSet::from_laser(trap(), field(), laser(),
                                                recoil_geometry,
                                                background_quanta_per_s);
    d.boundary_loss_rate = boundary_loss_rate;
    return d;
}

double RunConfig::gamma_sc() const {
    return constants::two_pi * (gamma_sc_hz > 0.0 ? gamma_sc_hz : min_width_hz);
}

void RunConfig::validate() const {
    trap().validate();
    field().validate();
    laser().validate();

    require(!out_dir.empty(), "run.out_dir must not be empty");
    require(workers >= 0, "run.workers must be >= 0");
    require(method == "rate" || method == "lindblad",
            "run.method must be 'rate' or 'lindblad', got '" + method + "'");
    require(duration_s > 0.0, "run.duration_s must be positive");
    require(time_samples >= 2, "run.time_samples must be at least 2");
    require(initial_mean_n >= 0.0, "run.initial_mean_n must be non-negative");
    require(transverse_coupling >= 0.0, "run.transverse_coupling must be non-negative");
    require(scan_b_min_gauss > 0.0, "run.scan_b_min_gauss must be positive");
    require(scan_b_max_gauss >= scan_b_min_gauss,
            "run.scan_b_max_gauss must be >= run.scan_b_min_gauss");
    require(scan_points >= 1, "run.scan_points must be at least 1");

    require(pump_rate_hz >= 0.0, "laser.pump_rate_hz must be non-negative");
    for (int i = 0; i < 3; ++i) {
        require(recoil_geometry[i] >= 0.0, "dissipators.geometry_* must be non-negative");
        require(background_quanta_per_s[i] >= 0.0,
                "dissipators.background_* must be non-negative");
        require(fit_mean_n[i] >= 0.0, "fit.mean_n_* must be non-negative");
        require(band_hz[i] > 0.0, "fit.band_*_hz must be positive");
    }
    require(boundary_loss_rate >= 0.0,
            "dissipators.boundary_loss_rate must be non-negative");

    require(mean_rate_hz > 0.0, "signal.mean_rate_hz must be positive");
    require(carrier_offset_hz >= 0.0, "signal.carrier_offset_hz must be non-negative");
    require(stream_duration_s > 0.0, "signal.duration_s must be positive");
    require(realizations >= 1, "signal.realizations must be at least 1");
    require(window_s > 0.0, "signal.window_s must be positive");
    require(window_s <= stream_duration_s,
            "signal.window_s must not exceed signal.duration_s");
    require(overlap >= 0.0 && overlap < 1.0, "signal.overlap must lie in [0, 1)");
    require(bin_s > 0.0, "signal.bin_s must be positive");
    require(total_modulation >= 0.0 && total_modulation <= 1.0,
            "signal.total_modulation must lie in [0, 1]");

    require(min_width_hz > 0.0, "fit.min_width_hz must be positive");
    require(amplitude >= 0.0, "fit.amplitude must be non-negative");
    require(gamma_sc_hz >= 0.0, "fit.gamma_sc_hz must be non-negative");
    require(span_hz > 0.0, "fit.span_hz must be positive");
    require(samples >= 2, "fit.samples must be at least 2");
    require(multistart >= 1, "fit.multistart must be at least 1");
}

RunConfig load_run_config(std::istream& is) {
    RunConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string text = trim(strip_comment(line));
        if (text.empty()) continue;
        const std::string at = "config line " + std::to_string(lineno) + ": ";
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) {
                throw ConfigError(at + "malformed section header '" + text + "'");
            }
            section = trim(text.substr(1, text.size() - 2));
            if (!known_section(section)) {
                throw ConfigError(at + "unknown section '[" + section + "]'");
            }
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(at + "expected 'key = value', got '" + text + "'");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError(at + "missing key before '='");
        if (section.empty()) {
            throw ConfigError(at + "key '" + key + "' appears outside any section");
        }
        const KeyDef* kd = find_key(section, key);
        if (kd == nullptr) {
            throw ConfigError(at + "unknown key '" + section + "." + key + "'");
        }
        try {
            kd->set(cfg, value, section + "." + key);
        } catch (const ConfigError& e) {
            throw ConfigError(at + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    return load_run_config(f);
}

void apply_override(RunConfig& cfg, const std::string& qualified_key,
                    const std::string& value) {
    const std::size_t dot = qualified_key.find('.');
    if (dot == std::string::npos) {
        throw ConfigError("override key '" + qualified_key +
                          "' must be section-qualified, e.g. trap.omega_y_hz");
    }
    const std::string section = qualified_key.substr(0, dot);
    const std::string key = qualified_key.substr(dot + 1);
    const KeyDef* kd = find_key(section, key);
    if (kd == nullptr) throw ConfigError("unknown key '" + qualified_key + "'");
    kd->set(cfg, value, qualified_key);
}

std::string dump_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& kd : registry()) {
        if (kd.section != section) {
            if (!section.empty()) out << "\n";
            out << "[" << kd.section << "]\n";
            section = kd.section;
        }
        out << kd.key << " = " << kd.get(cfg) << "\n";
    }
    return out.str();
}

}  // namespace drc

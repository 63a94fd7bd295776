#include "drc/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "drc/constants.hpp"
#include "drc/errors.hpp"
#include "drc/least_squares.hpp"
#include "drc/seeding.hpp"
#include "drc/worker_pool.hpp"

namespace drc {

namespace {

constexpr int kNumParams = 9;

// Packed order: [n_x, n_y, n_z, w_x, w_y, w_z, min_width, amplitude, offset].
Eigen::VectorXd pack(const FitModelParams& p, bool log_occupation) {
    Eigen::VectorXd x(kNumParams);
    for (int a = 0; a < 3; ++a) {
        x[a] = log_occupation ? std::log1p(std::max(p.mean_n[a], 0.0)) : p.mean_n[a];
        x[3 + a] = p.omega[a];
    }
    x[6] = p.min_width_hz;
    x[7] = p.amplitude;
    x[8] = p.offset;
    return x;
}

FitModelParams unpack(const Eigen::VectorXd& x, bool log_occupation) {
    FitModelParams p;
    for (int a = 0; a < 3; ++a) {
        p.mean_n[a] = log_occupation ? std::expm1(x[a]) : x[a];
        p.omega[a] = x[3 + a];
    }
    p.min_width_hz = x[6];
    p.amplitude = x[7];
    p.offset = x[8];
    return p;
}

// The model must stay evaluable when finite-difference probes or damped steps
// graze the physical boundary, so clamp into the valid domain.  The frequency
// floor keeps the Lamb-Dicke factor eta = proj * k * sqrt(hbar / (2 m omega))
// below its hard validity cap for every probe.
FitModelParams clamp_physical(FitModelParams p, const TrapConfig& trap) {
    const double k = constants::two_pi / trap.probe_wavelength;
    constexpr double eta_cap = 0.499;
    for (int a = 0; a < 3; ++a) {
        p.mean_n[a] = std::clamp(p.mean_n[a], 0.0, 1e6);
        const double kp = k * trap.eta_projection[a];
        const double omega_floor =
            std::max(1.0, kp * kp * constants::hbar / (2.0 * trap.mass * eta_cap * eta_cap));
        p.omega[a] = std::max(p.omega[a], omega_floor);
    }
    p.min_width_hz = std::max(p.min_width_hz, 1e-3);
    return p;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.empty() ? 0.0 : v[v.size() / 2];
}

void check_bounds(const FitModelParams& initial, const FitBounds& bounds,
                  bool log_occupation) {
    const Eigen::VectorXd lo = pack(bounds.lower, log_occupation);
    const Eigen::VectorXd hi = pack(bounds.upper, log_occupation);
    const Eigen::VectorXd x0 = pack(initial, log_occupation);
    for (int i = 0; i < kNumParams; ++i) {
        if (!(lo[i] <= hi[i])) {
            throw BoundsViolation("fit bounds inverted at parameter index " +
                                  std::to_string(i));
        }
        if (x0[i] < lo[i] || x0[i] > hi[i]) {
            throw BoundsViolation("initial fit parameter " + std::to_string(i) +
                                  " = " + std::to_string(x0[i]) + " outside its bounds");
        }
    }
}

}  // namespace

FitBounds FitBounds::around(const FitModelParams& initial) {
    FitBounds b;
    for (int a = 0; a < 3; ++a) {
        b.lower.mean_n[a] = 0.0;
        b.upper.mean_n[a] = std::max(30.0, 3.0 * initial.mean_n[a]);
        b.lower.omega[a] = 0.5 * initial.omega[a];
        b.upper.omega[a] = 2.0 * initial.omega[a];
    }
    b.lower.min_width_hz = std::max(0.05 * initial.min_width_hz, 1.0);
    b.upper.min_width_hz = 20.0 * initial.min_width_hz;
    const double scale = std::max({1.0, std::abs(initial.amplitude), std::abs(initial.offset)});
    b.lower.amplitude = 0.0;
    b.upper.amplitude = 1e12 * scale;
    b.lower.offset = -1e12 * scale;
    b.upper.offset = 1e12 * scale;
    return b;
}

std::vector<double> fit_model_psd(const TrapConfig& trap, const FitModelParams& params,
                                  const std::vector<double>& freq_rel_hz) {
    const FitModelParams p = clamp_physical(params, trap);
    TrapConfig model_trap = trap;
    model_trap.omega = p.omega;
    // Scattering rate tied to the width floor; see the header rationale.
    const double gamma_sc = constants::two_pi * p.min_width_hz;
    const std::vector<SidebandComponent> comps =
        spectrum_components(model_trap, p.mean_n, gamma_sc, p.min_width_hz);
    return evaluate_spectrum(comps, freq_rel_hz, p.amplitude, p.offset);
}

Eigen::MatrixXd fit_model_jacobian(const TrapConfig& trap, const FitModelParams& params,
                                   const std::vector<double>& freq_rel_hz,
                                   double rel_step) {
    const Eigen::VectorXd x = pack(params, false);
    Eigen::MatrixXd jac(static_cast<int>(freq_rel_hz.size()), kNumParams);
    for (int j = 0; j < kNumParams; ++j) {
        const double h = rel_step * std::max(std::abs(x[j]), 1.0);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[j] += h;
        xm[j] -= h;
        const std::vector<double> fp = fit_model_psd(trap, unpack(xp, false), freq_rel_hz);
        const std::vector<double> fm = fit_model_psd(trap, unpack(xm, false), freq_rel_hz);
        for (std::size_t i = 0; i < freq_rel_hz.size(); ++i) {
            jac(static_cast<int>(i), j) = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    return jac;
}

FitResult fit_spectrum(const Spectrum& data, const TrapConfig& trap,
                       const FitModelParams& initial, const FitBounds& bounds,
                       const FitOptions& options) {
    trap.validate();
    if (data.frequency_hz.size() != data.psd.size()) {
        throw DimensionMismatch("spectrum frequency and psd arrays differ in length");
    }
    if (data.frequency_hz.size() < 2 * kNumParams) {
        throw ConfigError("spectrum has too few points to constrain the fit");
    }
    check_bounds(initial, bounds, options.log_occupation);
    const double f_extent = std::max(std::abs(data.frequency_hz.front()),
                                     std::abs(data.frequency_hz.back()));
    for (int a = 0; a < 3; ++a) {
        if (initial.omega[a] / constants::two_pi > f_extent * (1.0 + 1e-9)) {
            throw ConfigError("data grid does not cover the candidate sideband at " +
                              std::to_string(initial.omega[a] / constants::two_pi) + " Hz");
        }
    }

    const double psd_scale = std::max(
        1e-30, *std::max_element(data.psd.begin(), data.psd.end(),
                                 [](double a, double b) { return std::abs(a) < std::abs(b); }));
    const bool weighted = options.weight_by_variance;
    const auto residual = [&](const Eigen::VectorXd& x) {
        const std::vector<double> model =
            fit_model_psd(trap, unpack(x, options.log_occupation), data.frequency_hz);
        Eigen::VectorXd r(static_cast<int>(model.size()));
        for (std::size_t i = 0; i < model.size(); ++i) {
            double ri = model[i] - data.psd[i];
            if (weighted) ri /= std::max(std::abs(data.psd[i]), 1e-6 * psd_scale);
            r[static_cast<int>(i)] = ri;
        }
        return r;
    };

    LeastSquaresOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.finite_diff_rel = options.fd_rel_step;
    // Noisy spectra settle into a chi2 plateau the gradient test never exits;
    // declare convergence once successive improvements become negligible.  On
    // variance-weighted data chi2 changes below ~1e-7 of its value are far
    // inside one statistical standard error, so stopping there is safe.
    lm.chi2_rel_tol = weighted ? 1e-7 : 1e-10;
    const Eigen::VectorXd lo = pack(bounds.lower, options.log_occupation);
    const Eigen::VectorXd hi = pack(bounds.upper, options.log_occupation);
    lm.lower.assign(lo.data(), lo.data() + kNumParams);
    lm.upper.assign(hi.data(), hi.data() + kNumParams);

    const LeastSquaresResult ls =
        fit_least_squares(residual, pack(initial, options.log_occupation), lm);

    // Rank check of the normal matrix at the solution, in column-equilibrated
    // (units-free) form: a zero column or an exactly collinear pair means the
    // data cannot tell the parameters apart.
    {
        const int m = static_cast<int>(data.psd.size());
        Eigen::MatrixXd jac(m, kNumParams);
        for (int j = 0; j < kNumParams; ++j) {
            const double h =
                options.fd_rel_step * std::max(std::abs(ls.parameters[j]), 1.0);
            Eigen::VectorXd xp = ls.parameters;
            Eigen::VectorXd xm = ls.parameters;
            xp[j] += h;
            xm[j] -= h;
            jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
        }
        Eigen::VectorXd norms(kNumParams);
        for (int j = 0; j < kNumParams; ++j) norms[j] = jac.col(j).norm();
        if (norms.minCoeff() <= 0.0) {
            throw SingularNormalMatrix(
                "a fit parameter has no effect on the model over this grid");
        }
        Eigen::MatrixXd corr = jac.transpose() * jac;
        for (int i = 0; i < kNumParams; ++i) {
            for (int j = 0; j < kNumParams; ++j) corr(i, j) /= norms[i] * norms[j];
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
        if (eig.eigenvalues().minCoeff() < 1e-10) {
            throw SingularNormalMatrix(
                "normal matrix is rank deficient (degenerate parameters)");
        }
    }

    FitResult result;
    result.params = unpack(ls.parameters, options.log_occupation);
    result.iterations = ls.iterations;
    result.converged = ls.converged;
    result.residual_norm = std::sqrt(ls.chi2);

    // Map the covariance back to the native parameterization (delta method on
    // the occupation entries when they were fitted in log space).
    Eigen::MatrixXd cov = ls.covariance;
    if (options.log_occupation) {
        Eigen::VectorXd d = Eigen::VectorXd::Ones(kNumParams);
        for (int a = 0; a < 3; ++a) d[a] = 1.0 + result.params.mean_n[a];
        cov = d.asDiagonal() * cov * d.asDiagonal();
    }
    result.covariance = 0.5 * (cov + cov.transpose());
    Eigen::VectorXd sigma(kNumParams);
    for (int i = 0; i < kNumParams; ++i) {
        sigma[i] = std::sqrt(std::max(result.covariance(i, i), 0.0));
    }
    result.uncertainties = unpack(sigma, false);
    return result;
}

FitResult fit_spectrum_multistart(const Spectrum& data, const TrapConfig& trap,
                                  const FitModelParams& initial, const FitBounds& bounds,
                                  const FitOptions& options, int n_starts,
                                  std::uint64_t master_seed, int workers) {
    if (n_starts < 1) throw ConfigError("need at least one fit start");

    const auto clamp_into = [&](FitModelParams p) {
        const auto box = [](double v, double lo, double hi) {
            return std::min(std::max(v, lo), hi);
        };
        for (int a = 0; a < 3; ++a) {
            p.mean_n[a] = box(p.mean_n[a], bounds.lower.mean_n[a], bounds.upper.mean_n[a]);
            p.omega[a] = box(p.omega[a], bounds.lower.omega[a], bounds.upper.omega[a]);
        }
        p.min_width_hz =
            box(p.min_width_hz, bounds.lower.min_width_hz, bounds.upper.min_width_hz);
        p.amplitude = box(p.amplitude, bounds.lower.amplitude, bounds.upper.amplitude);
        p.offset = box(p.offset, bounds.lower.offset, bounds.upper.offset);
        return p;
    };

    std::vector<FitModelParams> starts;
    starts.push_back(clamp_into(initial));
    for (int k = 1; k < n_starts; ++k) {
        std::mt19937_64 rng(split_seed(master_seed, static_cast<std::uint64_t>(k)));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        FitModelParams p = initial;
        for (int a = 0; a < 3; ++a) {
            p.mean_n[a] *= 1.0 + 0.1 * u(rng);
            p.omega[a] *= 1.0 + 0.1 * u(rng);
        }
        p.min_width_hz *= 1.0 + 0.1 * u(rng);
        p.amplitude *= 1.0 + 0.1 * u(rng);
        p.offset *= 1.0 + 0.1 * u(rng);
        starts.push_back(clamp_into(p));
    }

    std::vector<std::optional<FitResult>> results(starts.size());
    std::vector<std::string> failures(starts.size());
    parallel_for(
        static_cast<int>(starts.size()),
        [&](int k) {
            try {
                results[static_cast<std::size_t>(k)] =
                    fit_spectrum(data, trap, starts[static_cast<std::size_t>(k)], bounds,
                                 options);
            } catch (const Error& e) {
                failures[static_cast<std::size_t>(k)] = e.what();
            }
        },
        workers);

    int best = -1;
    for (int k = 0; k < static_cast<int>(results.size()); ++k) {
        if (!results[static_cast<std::size_t>(k)]) continue;
        const FitResult& r = *results[static_cast<std::size_t>(k)];
        if (!r.converged) continue;
        if (best < 0 ||
            r.residual_norm < results[static_cast<std::size_t>(best)]->residual_norm) {
            best = k;
        }
    }
    if (best < 0) {
        std::string detail;
        for (const std::string& f : failures) {
            if (!f.empty()) {
                detail = "; first failure: " + f;
                break;
            }
        }
        throw FitDiverged("no fit start converged" + detail);
    }
    return *results[static_cast<std::size_t>(best)];
}

FitModelParams auto_initial_params(const Spectrum& data, const TrapConfig& reference) {
    reference.validate();
    const std::size_t n = data.psd.size();
    if (n < 32 || data.frequency_hz.size() != n) {
        throw ConfigError("spectrum too short for automatic initialization");
    }
    // Baseline: a low percentile, not the median.  Lorentzian tails of the
    // elastic line raise a large fraction of the grid, so the median sits
    // visibly above the true floor; the bins a carrier tail cannot reach
    // nearly touch it.
    std::vector<double> sorted_psd = data.psd;
    std::sort(sorted_psd.begin(), sorted_psd.end());
    const double offset = sorted_psd[n / 10];
    const double median = sorted_psd[n / 2];
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(data.psd[i] - median);
    const double noise = 1.4826 * median_of(dev);

    struct Peak {
        double f = 0.0;
        double height = 0.0;
        std::size_t index = 0;
    };
    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (data.frequency_hz[i] <= 0.0) continue;
        if (data.psd[i] > data.psd[i - 1] && data.psd[i] >= data.psd[i + 1] &&
            data.psd[i] > median + 3.0 * noise) {
            peaks.push_back({data.frequency_hz[i], data.psd[i] - offset, i});
        }
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.height > b.height; });
    if (peaks.size() > 12) peaks.resize(12);

    FitModelParams guess;
    std::array<Peak, 3> assigned{};
    for (int a = 0; a < 3; ++a) {
        const double f_ref = reference.omega[a] / constants::two_pi;
        // Only adopt a detected peak that plausibly belongs to this axis;
        // an axis whose line is buried in the floor keeps the reference
        // frequency instead of stealing a neighbor's peak.
        const Peak* best = nullptr;
        for (const Peak& p : peaks) {
            if (std::abs(p.f - f_ref) > 0.25 * f_ref) continue;
            if (!best || std::abs(p.f - f_ref) < std::abs(best->f - f_ref)) best = &p;
        }
        assigned[a] = best ? *best : Peak{f_ref, 0.0, 0};
        guess.omega[a] = constants::two_pi * assigned[a].f;
    }

    // Half-maximum extent of the line around a grid index, in Hz.
    const double df = n > 1 ? data.frequency_hz[1] - data.frequency_hz[0] : 1.0;
    const auto fwhm_at = [&](std::size_t index, double height) {
        const double half = offset + 0.5 * height;
        std::size_t left = index;
        while (left > 0 && data.psd[left - 1] > half) --left;
        std::size_t right = index;
        while (right + 1 < n && data.psd[right + 1] > half) ++right;
        return static_cast<double>(right - left + 1) * df;
    };

    // The elastic line at zero beat frequency is by far the strongest feature;
    // measure it so its Lorentzian tails can be subtracted from the sideband
    // bands, and use its half-maximum extent as the natural width estimate.
    std::size_t i_zero = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(data.frequency_hz[i]) < std::abs(data.frequency_hz[i_zero])) i_zero = i;
    }
    double carrier_area = 0.0;
    double carrier_fwhm = 0.0;
    const double carrier_height = data.psd[i_zero] - offset;
    if (std::abs(data.frequency_hz[i_zero]) < 2.0 * df && carrier_height > 3.0 * noise) {
        carrier_fwhm = fwhm_at(i_zero, carrier_height);
        carrier_area = carrier_height * constants::pi * 0.5 * carrier_fwhm;
    }

    double width = carrier_fwhm;
    if (width <= 0.0) {
        const Peak tallest = *std::max_element(
            assigned.begin(), assigned.end(),
            [](const Peak& a, const Peak& b) { return a.height < b.height; });
        width = tallest.height > 0.0 ? fwhm_at(tallest.index, tallest.height) : 2.0 * df;
    }
    double min_assigned_f = assigned[0].f;
    for (const Peak& p : assigned) min_assigned_f = std::min(min_assigned_f, p.f);
    guess.min_width_hz =
        std::min(std::max(width, 2.0 * df), std::max(0.3 * min_assigned_f, 2.0 * df));

    // Occupations from the red/blue peak-height ratio of each axis.  Red and
    // blue partners share their width, so the height ratio equals the area
    // ratio; reading heights through a narrow window keeps the estimate
    // insensitive to baseline drift, and the modeled elastic-line tail is
    // removed before the ratio is taken.
    const auto line_height = [&](double center) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = data.frequency_hz[i];
            if (std::abs(f - center) > 1.5 * df) continue;
            double excess = data.psd[i] - offset;
            if (carrier_area > 0.0) {
                excess -= carrier_area * lorentzian(f, 0.0, carrier_fwhm);
            }
            sum += excess;
            ++count;
        }
        return count > 0 ? sum / count : 0.0;
    };
    for (int a = 0; a < 3; ++a) {
        const double red = std::max(line_height(-assigned[a].f), 0.0);
        const double blue = line_height(assigned[a].f);
        double occ = 0.5;
        if (blue > red && blue > 0.0) {
            occ = sideband_thermometry(red, blue).mean_n;
        }
        guess.mean_n[a] = std::clamp(occ, 0.01, 30.0);
    }

    // Amplitude by linear projection of the background-subtracted data onto
    // the unit-amplitude model.
    guess.offset = offset;
    guess.amplitude = 1.0;
    FitModelParams unit = guess;
    unit.amplitude = 1.0;
    unit.offset = 0.0;
    const std::vector<double> model = fit_model_psd(reference, unit, data.frequency_hz);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (data.psd[i] - offset) * model[i];
        den += model[i] * model[i];
    }
    guess.amplitude = den > 0.0 ? std::max(num / den, 1e-30) : 1.0;
    return guess;
}

Spectrum extract_beat_band(const Spectrum& psd_abs, double carrier_hz, double half_span_hz,
                           double counting_bin_s) {
    if (psd_abs.frequency_hz.size() != psd_abs.psd.size()) {
        throw DimensionMismatch("spectrum frequency and psd arrays differ in length");
    }
    if (!(half_span_hz > 0.0)) throw ConfigError("band half-span must be positive");
    Spectrum band;
    band.resolution_bandwidth_hz = psd_abs.resolution_bandwidth_hz;
    band.averaging_count = psd_abs.averaging_count;
    for (std::size_t i = 0; i < psd_abs.frequency_hz.size(); ++i) {
        const double f = psd_abs.frequency_hz[i];
        if (f < carrier_hz - half_span_hz || f > carrier_hz + half_span_hz) continue;
        double p = psd_abs.psd[i];
        if (counting_bin_s > 0.0 && f > 0.0) {
            const double x = constants::pi * f * counting_bin_s;
            const double s = std::sin(x) / x;
            p /= std::max(s * s, 1e-6);
        }
        band.frequency_hz.push_back(f - carrier_hz);
        band.psd.push_back(p);
    }
    if (band.frequency_hz.size() < 16) {
        throw ConfigError("beat band holds too few grid points");
    }
    return band;
}

nlohmann::json fit_result_json(const FitResult& result) {
    nlohmann::json j;
    const char* axis[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        j[std::string("mean_n_") + axis[a]] = result.params.mean_n[a];
        j[std::string("mean_n_") + axis[a] + "_err"] = result.uncertainties.mean_n[a];
        j[std::string("omega_") + axis[a]] = result.params.omega[a];
        j[std::string("omega_") + axis[a] + "_err"] = result.uncertainties.omega[a];
    }
    j["min_width_hz"] = result.params.min_width_hz;
    j["min_width_hz_err"] = result.uncertainties.min_width_hz;
    j["amplitude"] = result.params.amplitude;
    j["amplitude_err"] = result.uncertainties.amplitude;
    j["offset"] = result.params.offset;
    j["offset_err"] = result.uncertainties.offset;
    j["residual_norm"] = result.residual_norm;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    std::vector<double> cov;
    cov.reserve(kNumParams * kNumParams);
    for (int r = 0; r < kNumParams; ++r) {
        for (int c = 0; c < kNumParams; ++c) {
            cov.push_back(result.covariance(r, c));
        }
    }
    j["covariance"] = cov;
    return j;
}

nlohmann::json fit_report(const FitResult& result, const TrapConfig& reference) {
    if (!result.converged) {
        throw ConfigError("fit report requires a converged result");
    }
    nlohmann::json j;
    const char* axis[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        nlohmann::json ax;
        ax["mean_n"] = result.params.mean_n[a];
        ax["mean_n_err"] = result.uncertainties.mean_n[a];
        ax["ground_state_percent"] =
            100.0 * ground_state_occupation(std::max(result.params.mean_n[a], 0.0));
        ax["omega_fit_khz"] = result.params.omega[a] / constants::two_pi / 1e3;
        ax["omega_ref_khz"] = reference.omega[a] / constants::two_pi / 1e3;
        ax["omega_deviation_percent"] =
            100.0 * (result.params.omega[a] - reference.omega[a]) / reference.omega[a];
        j["axes"][axis[a]] = ax;
    }
    j["min_width_khz"] = result.params.min_width_hz / 1e3;
    const bool ten_khz_scale =
        result.params.min_width_hz >= 3e3 && result.params.min_width_hz <= 3e4;
    j["width_on_ten_khz_scale"] = ten_khz_scale;
    j["width_note"] =
        ten_khz_scale
            ? "sideband width on the order of ten kilohertz, consistent with ~10% "
              "trap inhomogeneity"
            : "sideband width outside the expected ten-kilohertz inhomogeneity scale";
    j["frequency_note"] = "deviation from the reference frequencies is informational only";
    j["residual_norm"] = result.residual_norm;
    j["iterations"] = result.iterations;
    return j;
}

}  // namespace drc

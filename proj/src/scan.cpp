#include "drc/scan.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "drc/errors.hpp"
#include "drc/hilbert.hpp"
#include "drc/least_squares.hpp"
#include "drc/rate_model.hpp"
#include "drc/worker_pool.hpp"

namespace drc {
namespace {

Eigen::VectorXd truncated_thermal(int levels, double mean_n) {
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

struct AxisResult {
    double survival = 1.0;
    double mean_n = 0.0;
    double tau_s = std::numeric_limits<double>::infinity();
};

AxisResult run_axis_rate(const TrapConfig& trap, const FieldConfig& field,
                         const DissipatorSet& diss, Axis axis, double coupling,
                         double duration, const ScanOptions& opt) {
    const int a = axis_index(axis);
    RateModelParams prm;
    prm.omega = trap.omega[a];
    prm.delta_off = zeeman_splitting(field);
    prm.coupling = coupling;
    prm.pump_rate = diss.pump_rate;
    prm.recoil_per_event = diss.recoil_per_event[a];
    prm.background_rate = diss.background_heating[a];
    prm.stark_per_mf = opt.stark_per_mf;
    prm.levels = std::max(2, trap.trap_depth_quanta[a]);
    prm.absorbing = true;

    const RateChain chain = build_drc_chain(prm);
    const Eigen::VectorXd p0 = truncated_thermal(prm.levels, opt.initial_mean_n);
    const RateTrajectory traj =
        rate_evolve(chain, p0, duration, std::max(2, opt.time_samples));

    AxisResult out;
    // Clamp away the expm roundoff of fully drained chains.
    out.survival = std::clamp(traj.survival.back(), 0.0, 1.0);
    out.tau_s = chain_decay_time(chain);
    // Occupation reported for surviving atoms: the stationary distribution of
    // the same chain with the boundary closed.  A chain with no rates at all
    // has no unique stationary point, but then nothing moves either, so the
    // start distribution is the honest answer.
    prm.absorbing = false;
    try {
        out.mean_n = rate_steady_state(build_drc_chain(prm)).mean_n;
    } catch (const SingularBalanceMatrix&) {
        double m = 0.0;
        for (int n = 0; n < prm.levels; ++n) m += n * p0(n);
        out.mean_n = m;
    }
    return out;
}

AxisResult run_axis_lindblad(const TrapConfig& trap, const FieldConfig& field,
                             const DissipatorSet& diss, Axis axis, double coupling,
                             double duration, const ScanOptions& opt) {
    const int a = axis_index(axis);
    const HilbertSpace space{field.f_total, trap.trap_depth_quanta[a]};
    const Operator h = build_axis_hamiltonian(space, trap.omega[a], zeeman_splitting(field),
                                              coupling, opt.stark_per_mf);
    const LindbladGenerator gen(h, diss, axis);
    const DensityState rho0 =
        thermal_state(space, -field.f_total, opt.initial_mean_n, 1e-3);

    EvolveOptions ev;
    ev.t_final = duration;
    ev.sample_interval = duration / std::max(1, opt.time_samples - 1);
    ev.method = EvolveOptions::Method::krylov;
    ev.track_populations = false;
    const CoolingTrajectory traj = lindblad_evolve(gen, rho0, ev);

    AxisResult out;
    out.survival = std::clamp(traj.survival.back(), 0.0, 1.0);
    out.mean_n = traj.mean_n.back();
    try {
        out.tau_s = survival_lifetime(traj).tau_s;
    } catch (const FitDiverged&) {
        out.tau_s = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace

std::vector<ScanPoint> scan_offset_field(const TrapConfig& trap, const FieldConfig& field,
                                         const std::vector<double>& b_values,
                                         const DissipatorSet& diss, double duration,
                                         const ScanOptions& opt) {
    trap.validate();
    field.validate();
    if (b_values.empty()) throw ConfigError("offset-field scan needs at least one field value");
    if (duration <= 0.0) throw ConfigError("scan duration must be positive");
    if (opt.initial_mean_n < 0.0) throw ConfigError("initial occupation must be >= 0");
    if (opt.transverse_coupling_factor < 0.0)
        throw ConfigError("transverse coupling factor must be >= 0");

    std::vector<ScanPoint> curve(b_values.size());
    parallel_for(
        b_values.size(),
        [&](std::size_t i) {
            FieldConfig at_b = field;
            at_b.b_off_gauss = b_values[i];
            at_b.validate();
            const double omega_coupling = spin_motion_coupling(trap, at_b);

            ScanPoint& pt = curve[i];
            pt.b_off_gauss = b_values[i];
            pt.survival = 1.0;
            double inv_tau = 0.0;
            for (Axis axis : all_axes) {
                const double coupling = axis == Axis::y
                                            ? omega_coupling
                                            : opt.transverse_coupling_factor * omega_coupling;
                const AxisResult r =
                    opt.method == ScanOptions::Method::rate
                        ? run_axis_rate(trap, at_b, diss, axis, coupling, duration, opt)
                        : run_axis_lindblad(trap, at_b, diss, axis, coupling, duration, opt);
                pt.survival *= r.survival;
                pt.mean_n[axis_index(axis)] = r.mean_n;
                if (std::isfinite(r.tau_s) && r.tau_s > 0.0) inv_tau += 1.0 / r.tau_s;
            }
            pt.tau_s = inv_tau > 0.0 ? 1.0 / inv_tau : std::numeric_limits<double>::infinity();
        },
        opt.workers);
    return curve;
}

std::vector<double> field_range(double b_min_gauss, double b_max_gauss, int count) {
    if (count < 2) throw ConfigError("field range needs at least two points");
    if (!(b_max_gauss > b_min_gauss))
        throw ConfigError("field range must have b_max > b_min");
    std::vector<double> values(static_cast<std::size_t>(count));
    const double step = (b_max_gauss - b_min_gauss) / (count - 1);
    for (int i = 0; i < count; ++i) values[i] = b_min_gauss + step * i;
    values.back() = b_max_gauss;
    return values;
}

int argmax_survival(const std::vector<ScanPoint>& curve) {
    if (curve.empty()) throw ConfigError("cannot take the maximum of an empty scan");
    int best = 0;
    for (int i = 1; i < int(curve.size()); ++i)
        if (curve[i].survival > curve[best].survival) best = i;
    return best;
}

LifetimeFit survival_lifetime(const std::vector<double>& times,
                              const std::vector<double>& survival) {
    if (times.size() != survival.size())
        throw DimensionMismatch("time and survival arrays differ in length");
    const int n = int(times.size());
    if (n < 10) throw FitDiverged("survival lifetime needs at least 10 samples");
    for (int i = 1; i < n; ++i)
        if (!(survival[i] < survival[i - 1]))
            throw FitDiverged("survival curve is not strictly decreasing; no loss to time");
    if (!(survival[0] > 0.0)) throw FitDiverged("survival curve starts at zero");

    const double span = times[n - 1] - times[0];
    if (!(span > 0.0)) throw FitDiverged("time grid does not advance");
    const double s0 = survival[0];
    const double s_end = std::max(survival[n - 1], 1e-12 * s0);
    double tau0 = span / std::log(s0 / s_end);
    if (!std::isfinite(tau0) || tau0 <= 0.0) tau0 = 0.5 * span;

    Eigen::VectorXd sv(n), tv(n);
    for (int i = 0; i < n; ++i) {
        tv(i) = times[i];
        sv(i) = survival[i];
    }
    LeastSquaresOptions lm;
    lm.lower = {1e-300, 1e-12 * span};
    Eigen::VectorXd x0(2);
    x0 << s0, tau0;
    const LeastSquaresResult fit = fit_least_squares(
        [&](const Eigen::VectorXd& x) {
            return (x(0) * (-tv.array() / x(1)).exp() - sv.array()).matrix().eval();
        },
        x0, lm);
    if (!std::isfinite(fit.parameters(1)) || fit.parameters(1) <= 0.0)
        throw FitDiverged("exponential lifetime fit returned a non-physical decay time");

    LifetimeFit out;
    out.tau_s = fit.parameters(1);
    out.tau_err_s = std::sqrt(std::max(0.0, fit.covariance(1, 1)));
    return out;
}

LifetimeFit survival_lifetime(const CoolingTrajectory& traj) {
    return survival_lifetime(traj.times, traj.survival);
}

namespace {
void put_row(std::ostream& os, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) os << ',';
        first = false;
        os << v;
    }
    os << '\n';
}
}  // namespace

void write_scan_csv(std::ostream& os, const std::vector<ScanPoint>& curve) {
    os << "b_off_gauss,survival,mean_n_x,mean_n_y,mean_n_z,tau_s\n";
    const auto saved = os.precision(12);
    for (const ScanPoint& pt : curve)
        put_row(os, {pt.b_off_gauss, pt.survival, pt.mean_n[0], pt.mean_n[1], pt.mean_n[2],
                     pt.tau_s});
    os.precision(saved);
}

void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::array<std::vector<double>, 3>& mean_n,
                          const std::vector<double>& survival) {
    for (const auto& axis_values : mean_n)
        if (axis_values.size() != times.size())
            throw DimensionMismatch("trajectory occupation column length mismatch");
    if (survival.size() != times.size())
        throw DimensionMismatch("trajectory survival column length mismatch");
    os << "t_s,mean_n_x,mean_n_y,mean_n_z,survival\n";
    const auto saved = os.precision(12);
    for (std::size_t i = 0; i < times.size(); ++i)
        put_row(os, {times[i], mean_n[0][i], mean_n[1][i], mean_n[2][i], survival[i]});
    os.precision(saved);
}

}  // namespace drc

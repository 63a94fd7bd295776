#include "drc/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "drc/errors.hpp"

namespace drc {

Eigen::MatrixXd RateChain::generator() const {
    const int l = levels();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l, l);
    for (int n = 0; n < l; ++n) {
        if (n + 1 < l) {
            m(n + 1, n) += up[n];
            m(n, n) -= up[n];
        } else if (absorbing) {
            m(n, n) -= up[n];  // flows past the trap depth and is lost
        }
        if (n > 0) {
            m(n - 1, n) += down[n];
            m(n, n) -= down[n];
        }
    }
    return m;
}

RateChain build_drc_chain(const RateModelParams& p) {
    if (p.levels < 2) throw ConfigError("rate chain needs at least 2 levels");
    if (p.pump_rate < 0.0 || p.background_rate < 0.0 || p.recoil_per_event < 0.0)
        throw ConfigError("rate-chain rates must be non-negative");

    RateChain c;
    c.up = Eigen::VectorXd::Zero(p.levels);
    c.down = Eigen::VectorXd::Zero(p.levels);
    c.absorbing = p.absorbing;

    const double gamma_c = 0.9 * p.pump_rate;
    const double delta_minus = p.delta_off + p.stark_per_mf - p.omega;
    const double delta_plus = p.delta_off + p.stark_per_mf + p.omega;
    auto lorentz = [gamma_c](double delta) {
        const double denom = gamma_c * gamma_c + 4.0 * delta * delta;
        return denom > 0.0 ? gamma_c / denom : 0.0;
    };
    // Frozen delocalization enhancement (see header).  The excess over the
    // bare golden rule exists only where the exchange manifolds are
    // degenerate, so it tapers off resonance with the same Lorentzian.
    const double ratio = p.pump_rate > 0.0 ? p.coupling / p.pump_rate : 0.0;
    const double on_resonance = gamma_c * lorentz(delta_minus);
    const double enhancement =
        1.0 + (3.0 + 900.0 * ratio * ratio) * on_resonance;
    const double v2 = 32.0 * p.coupling * p.coupling;  // 4 V^2 at n = 1
    const double cascade = p.recoil_per_event > 0.0 ? pump_cascade_length(4) : 0.0;

    for (int n = 0; n < p.levels; ++n) {
        double up_n = v2 * (n + 1) * lorentz(delta_plus) * enhancement;
        double down_n = v2 * n * lorentz(delta_minus);
        // Background heating: stimulated pair, net +background_rate quanta/s.
        up_n += p.background_rate * (n + 1);
        down_n += p.background_rate * n;
        // Photon recoil riding on the golden-rule cycles (first order).
        if (p.recoil_per_event > 0.0) {
            const double photons =
                cascade * (v2 * n * lorentz(delta_minus) +
                           v2 * (n + 1) * lorentz(delta_plus) * enhancement);
            up_n += photons * p.recoil_per_event * (n + 1);
            down_n += photons * p.recoil_per_event * n;
        }
        c.up[n] = up_n;
        c.down[n] = down_n;
    }
    return c;
}

RateSteadyState rate_steady_state(const RateChain& chain) {
    const int l = chain.levels();
    if (chain.absorbing)
        throw SingularBalanceMatrix(
            "absorbing chain has no stationary distribution; evolve it instead");

    Eigen::VectorXd w = Eigen::VectorXd::Zero(l);
    w[0] = 1.0;
    for (int n = 0; n + 1 < l; ++n) {
        const double u = chain.up[n], d = chain.down[n + 1];
        if (u > 0.0 && d > 0.0) {
            w[n + 1] = w[n] * (u / d);
        } else if (u <= 0.0 && d <= 0.0) {
            throw SingularBalanceMatrix(
                "chain disconnected between levels " + std::to_string(n) + " and " +
                std::to_string(n + 1) + "; stationary state is not unique");
        } else if (u <= 0.0) {
            w[n + 1] = 0.0;  // one-way drain: nothing survives above
        } else {
            // One-way pump: everything below level n+1 is transient.
            w.head(n + 1).setZero();
            w[n + 1] = 1.0;
        }
    }
    const double norm = w.sum();
    if (!(norm > 0.0) || !w.allFinite())
        throw SingularBalanceMatrix("stationary weights are not normalizable");
    w /= norm;

    RateSteadyState out;
    out.populations = w;
    for (int n = 0; n < l; ++n) out.mean_n += n * w[n];
    return out;
}

RateSteadyState rate_equation_steady_state(const TrapConfig& trap, const FieldConfig& field,
                                           const DissipatorSet& diss, Axis axis,
                                           double transverse_coupling_factor) {
    trap.validate();
    field.validate();
    const int ax = axis_index(axis);
    RateModelParams p;
    p.omega = trap.omega[ax];
    p.delta_off = zeeman_splitting(field);
    const double base = spin_motion_coupling(trap, field);
    p.coupling = axis == Axis::y ? base : transverse_coupling_factor * base;
    p.pump_rate = diss.pump_rate;
    p.recoil_per_event = diss.recoil_per_event[ax];
    p.background_rate = diss.background_heating[ax];
    p.levels = std::max(2, trap.trap_depth_quanta[ax]);
    p.absorbing = false;
    return rate_steady_state(build_drc_chain(p));
}

RateTrajectory rate_evolve(const RateChain& chain, const Eigen::VectorXd& p0,
                           double t_final, int samples) {
    if (p0.size() != chain.levels())
        throw DimensionMismatch("initial distribution does not match the chain");
    if (!(t_final > 0.0) || samples < 1)
        throw ConfigError("rate_evolve needs t_final > 0 and at least one sample");

    const double dt = t_final / samples;
    const Eigen::MatrixXd prop = (chain.generator() * dt).exp();

    RateTrajectory traj;
    traj.times.reserve(samples + 1);
    Eigen::VectorXd p = p0;
    for (int k = 0; k <= samples; ++k) {
        if (k > 0) p = prop * p;
        const double total = p.sum();
        double mean = 0.0;
        if (total > 1e-300) {
            for (int n = 0; n < p.size(); ++n) mean += n * p[n];
            mean /= total;
        }
        traj.times.push_back(k * dt);
        traj.survival.push_back(total);
        traj.mean_n.push_back(mean);
        traj.populations.push_back(p);
    }
    return traj;
}

double chain_decay_time(const RateChain& chain) {
    const Eigen::MatrixXd m = chain.generator();
    const Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    double slowest = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.rows(); ++i)
        slowest = std::max(slowest, es.eigenvalues()[i].real());
    if (slowest > -1e-12) return std::numeric_limits<double>::infinity();
    return -1.0 / slowest;
}

double pump_cascade_length(int f_total) {
    const auto channels = pump_channels(f_total);
    // Expected photons to reach the dark stretched state from each m, found by
    // descending recursion: every branch lands on m, m-1, or m-2.
    std::map<int, double> expected{{-f_total, 0.0}};
    for (int m = -f_total + 1; m <= f_total; ++m) {
        double total = 0.0, stay = 0.0, mixed = 0.0;
        for (const auto& c : channels) {
            if (c.m_from != m) continue;
            total += c.weight;
            if (c.m_to == m)
                stay += c.weight;
            else
                mixed += c.weight * expected.at(c.m_to);
        }
        if (total <= 0.0) {
            expected[m] = 0.0;  // never pumped (cannot happen for f >= 1)
            continue;
        }
        expected[m] = (1.0 + mixed / total) / (1.0 - stay / total);
    }
    return expected.at(-f_total + 1);
}

}  // namespace drc

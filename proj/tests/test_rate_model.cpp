#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "drc/constants.hpp"
#include "drc/errors.hpp"
#include "drc/hilbert.hpp"
#include "drc/lindblad.hpp"
#include "drc/liouvillian.hpp"
#include "drc/rate_model.hpp"

using namespace drc;
using doctest::Approx;
using constants::two_pi;

namespace {

RateChain custom_chain(const Eigen::VectorXd& up, const Eigen::VectorXd& down,
                       bool absorbing = false) {
    RateChain c;
    c.up = up;
    c.down = down;
    c.absorbing = absorbing;
    return c;
}

// Independent mean-first-passage oracle for a chain absorbed past the top
// level, starting from the ground level: standard nested-sum formula.
double mfpt_from_zero(const RateChain& c) {
    const int n = c.levels();
    double total = 0.0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j) {
            double term = 1.0 / c.up[j];
            for (int i = j + 1; i <= k; ++i) term *= c.down[i] / c.up[i];
            total += term;
        }
    return total;
}

}  // namespace

TEST_SUITE("rate_model") {

TEST_CASE("pure cooling chain collapses into the ground level") {
    // The spin-eliminated chain's level 0 is the dark (stretched, n = 0) state;
    // with no upward rate at all it is the unique absorbing configuration.
    Eigen::VectorXd up = Eigen::VectorXd::Zero(8);
    Eigen::VectorXd down(8);
    for (int n = 0; n < 8; ++n) down[n] = 1e3 * n;
    const auto ss = rate_steady_state(custom_chain(up, down));
    CHECK(ss.populations[0] == Approx(1.0).epsilon(1e-14));
    CHECK(ss.mean_n == Approx(0.0).epsilon(1e-14));
}

TEST_CASE("stimulated heating against linear cooling gives the geometric ladder") {
    // up = h (n+1), down = c0 n  =>  p_{n+1}/p_n = h/c0 exactly; with
    // c0 = 10 h the occupation is 1/(10-1) = 1/9.
    const double h = 30.0, c0 = 300.0;
    Eigen::VectorXd up(40), down(40);
    for (int n = 0; n < 40; ++n) {
        up[n] = h * (n + 1);
        down[n] = c0 * n;
    }
    const auto ss = rate_steady_state(custom_chain(up, down));
    CHECK(ss.mean_n == Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(ss.populations[1] / ss.populations[0] == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("golden-rule chain obeys its own detailed balance") {
    RateModelParams p;
    p.omega = two_pi * 83e3;
    p.delta_off = p.omega;
    p.coupling = two_pi * 900.0;
    p.pump_rate = two_pi * 25e3;
    p.background_rate = 40.0;
    p.levels = 12;
    const auto chain = build_drc_chain(p);
    const auto ss = rate_steady_state(chain);
    for (int n = 0; n + 1 < p.levels; ++n) {
        const double flow_up = chain.up[n] * ss.populations[n];
        const double flow_down = chain.down[n + 1] * ss.populations[n + 1];
        CHECK(flow_up == Approx(flow_down).epsilon(1e-10));
    }
}

TEST_CASE("stationary occupation matches the full quantum model at weak coupling") {
    RateModelParams p;
    p.omega = two_pi * 83e3;
    p.delta_off = p.omega;  // on resonance
    p.coupling = two_pi * 750.0;
    p.pump_rate = two_pi * 30e3;
    p.levels = 9;
    const auto rs = rate_steady_state(build_drc_chain(p));
    CHECK(rs.mean_n == Approx(0.0309036248).epsilon(1e-6));

    HilbertSpace sp{4, 8};
    const auto ham = build_axis_hamiltonian(sp, p.omega, p.delta_off, p.coupling);
    DissipatorSet d;
    d.f_total = 4;
    d.pump_rate = p.pump_rate;
    d.channels = pump_channels(4);
    const auto gen = LindbladGenerator(ham, d, Axis::y);
    const auto ss = steady_state(gen);
    CHECK(std::abs(rs.mean_n / ss.state.mean_n() - 1.0) < 0.10);
}

TEST_CASE("config wrapper reproduces the primitive chain") {
    TrapConfig trap = TrapConfig::nanofiber_defaults();
    FieldConfig field = FieldConfig::nanofiber_defaults();
    // Rescale the gradient so the exchange strength is 2pi x 750 Hz, then sit
    // exactly on the y resonance.
    field.b_gradient_gauss_per_m *= two_pi * 750.0 / spin_motion_coupling(trap, field);
    field.b_off_gauss = resonant_field(trap, field, Axis::y);
    DissipatorSet d;
    d.f_total = 4;
    d.pump_rate = two_pi * 30e3;
    d.channels = pump_channels(4);

    const auto ws = rate_equation_steady_state(trap, field, d, Axis::y);
    CHECK(ws.mean_n == Approx(0.0309036248).epsilon(1e-6));

    // Transverse axis: documented 0.3 coupling factor and its own frequency.
    RateModelParams p;
    p.omega = trap.omega[0];
    p.delta_off = zeeman_splitting(field);
    p.coupling = 0.3 * spin_motion_coupling(trap, field);
    p.pump_rate = d.pump_rate;
    p.levels = trap.trap_depth_quanta[0];
    const auto manual = rate_steady_state(build_drc_chain(p));
    const auto wx = rate_equation_steady_state(trap, field, d, Axis::x);
    CHECK(wx.mean_n == Approx(manual.mean_n).epsilon(1e-14));
}

TEST_CASE("disconnected and degenerate chains are rejected") {
    Eigen::VectorXd up = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd down = Eigen::VectorXd::Zero(6);
    CHECK_THROWS_AS(rate_steady_state(custom_chain(up, down)), SingularBalanceMatrix);

    // Break the chain between levels 2 and 3 with live rates elsewhere.
    for (int n = 0; n < 6; ++n) {
        up[n] = 10.0;
        down[n] = 20.0 * n;
    }
    up[2] = 0.0;
    down[3] = 0.0;
    CHECK_THROWS_AS(rate_steady_state(custom_chain(up, down)), SingularBalanceMatrix);

    // An absorbing chain has no stationary distribution at all.
    for (int n = 0; n < 6; ++n) down[3] = 20.0 * 3;
    CHECK_THROWS_AS(rate_steady_state(custom_chain(up, down, true)),
                    SingularBalanceMatrix);
}

TEST_CASE("one-way pumping concentrates everything at the top") {
    Eigen::VectorXd up(5), down = Eigen::VectorXd::Zero(5);
    for (int n = 0; n < 5; ++n) up[n] = 5.0 * (n + 1);
    const auto ss = rate_steady_state(custom_chain(up, down));
    CHECK(ss.populations[4] == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-level relaxation follows the analytic exponential") {
    Eigen::VectorXd up(2), down(2);
    up << 120.0, 0.0;
    down << 0.0, 480.0;
    Eigen::VectorXd p0(2);
    p0 << 1.0, 0.0;
    const auto traj = rate_evolve(custom_chain(up, down), p0, 0.02, 40);
    const double a = up[0], b = down[1];
    for (size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double p1 = a / (a + b) * (1.0 - std::exp(-(a + b) * t));
        CHECK(traj.populations[i][1] == Approx(p1).epsilon(1e-10));
        CHECK(traj.survival[i] == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("absorbing decay time matches the first-passage oracle") {
    const double h = 50.0, c0 = 500.0;
    Eigen::VectorXd up(6), down(6);
    for (int n = 0; n < 6; ++n) {
        up[n] = h * (n + 1);
        down[n] = c0 * n;
    }
    const auto chain = custom_chain(up, down, true);
    const double mfpt = mfpt_from_zero(chain);
    CHECK(mfpt == Approx(421.239).epsilon(1e-5));
    const double tau = chain_decay_time(chain);
    CHECK(std::abs(tau / mfpt - 1.0) < 0.05);

    // Survival from the propagated chain decays accordingly.
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(6);
    p0[0] = 1.0;
    const auto traj = rate_evolve(chain, p0, 2.0 * tau, 50);
    CHECK(traj.survival.back() == Approx(std::exp(-2.0)).epsilon(0.02));

    // A chain that cannot lose population reports an infinite decay time.
    CHECK(std::isinf(chain_decay_time(custom_chain(up, down, false))));
}

TEST_CASE("repolarization cascade length comes out of the branching table") {
    CHECK(pump_cascade_length(4) == Approx(5.0).epsilon(1e-12));
    CHECK(pump_cascade_length(1) == Approx(2.0).epsilon(1e-12));
}

}  // TEST_SUITE

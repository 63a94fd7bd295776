#ifndef DRC_RATE_MODEL_HPP
#define DRC_RATE_MODEL_HPP

#include <vector>

#include <Eigen/Dense>

#include "drc/dissipators.hpp"
#include "drc/trap.hpp"

namespace drc {

// Classical birth-death chain over Fock levels, obtained from the full
// spin-motion problem by Fermi-golden-rule elimination of both the spin ladder
// (pumping is the fastest scale) and the exchange coherences.  Level n couples
// to n+1 at rate up[n] and to n-1 at rate down[n]; with `absorbing` set, the
// up-flow out of the last level leaves the chain for good (trap loss).
struct RateChain {
    Eigen::VectorXd up;    // size L, 1/s; up[L-1] feeds the absorber if absorbing
    Eigen::VectorXd down;  // size L, 1/s; down[0] is ignored
    bool absorbing = false;

    int levels() const { return int(up.size()); }
    // dp/dt = M p restricted to the chain (absorbed population just leaves).
    Eigen::MatrixXd generator() const;
};

// Golden-rule sideband rates for one axis of the cooling problem.  The
// coherent exchange element V(n) = sqrt(8 n) * coupling between |m, n> and
// |m-1, n-1> becomes a rate through a Lorentzian of the pump linewidth:
//
//   cool(n) = 4 V(n)^2   * gamma_c / (gamma_c^2 + 4 delta_minus^2)
//   heat(n) = 4 V(n+1)^2 * gamma_c / (gamma_c^2 + 4 delta_plus^2) * D
//
// with delta_minus = delta_off + stark_per_mf - omega (the scan resonance),
// delta_plus = delta_off + stark_per_mf + omega (the counter-rotating leak),
// and gamma_c = 0.9 pump_rate the mean decoherence rate of the exchange
// coherence (elastic plus depumping photon shot noise of the m = -3 partner).
//
// D is a delocalization enhancement: in the full model the leaked population
// random-walks through the degenerate spin-motion manifolds before the pump
// recaptures it, depositing more than one quantum per leak.  The excess rides
// the resonance Lorentzian (off resonance the manifolds split and the bare
// golden rule returns):
//   D = 1 + (3 + 900 (coupling/pump_rate)^2) * gamma_c^2/(gamma_c^2 + 4 delta_minus^2)
// The constants were calibrated once against the master-equation solver on a
// recoil-free resonant grid and frozen; on resonance D = 4 + 900 (c/R)^2,
// valid for coupling <= 0.08 pump_rate.
//
// Background heating adds the usual stimulated pair bg*(n+1) up, bg*n down.
// Recoil adds a photon-recoil walk recoil_per_event * (2n+1)-weighted, with
// the photon budget tied to the golden-rule cycle rate times the mean cascade
// length of the repolarizing pump (first-order treatment; the full model shows
// an additional recoil excess at weak coupling that this chain does not carry).
struct RateModelParams {
    double omega = 0.0;             // trap frequency, rad/s
    double delta_off = 0.0;         // Zeeman splitting per m_F, rad/s
    double coupling = 0.0;          // spin-motion exchange strength, rad/s
    double pump_rate = 0.0;         // stretched-transition scattering rate, 1/s
    double recoil_per_event = 0.0;  // quanta per scattered photon on this axis
    double background_rate = 0.0;   // quanta/s
    double stark_per_mf = 0.0;      // rad/s per unit m_F
    int levels = 0;                 // chain length (trap depth in quanta)
    bool absorbing = false;
};

RateChain build_drc_chain(const RateModelParams& p);

struct RateSteadyState {
    Eigen::VectorXd populations;  // size L, sums to 1
    double mean_n = 0.0;
};

// Stationary distribution of a non-absorbing chain by detailed balance.
// Throws SingularBalanceMatrix when the chain is disconnected (some interior
// level exchanges no population in either direction) or entirely rate-free.
RateSteadyState rate_steady_state(const RateChain& chain);

// Convenience wrapper: chain for one axis of the configured problem, solved
// stationarily.  The y axis takes its exchange strength from the field
// gradient; the transverse axes default to the documented 0.3 factor.
RateSteadyState rate_equation_steady_state(const TrapConfig& trap, const FieldConfig& field,
                                           const DissipatorSet& diss, Axis axis,
                                           double transverse_coupling_factor = 0.3);

struct RateTrajectory {
    std::vector<double> times;
    std::vector<double> survival;          // total chain population
    std::vector<double> mean_n;            // conditioned on survival
    std::vector<Eigen::VectorXd> populations;
};

// Exact propagation p(t) = exp(M t) p0 sampled on a uniform grid.
RateTrajectory rate_evolve(const RateChain& chain, const Eigen::VectorXd& p0,
                           double t_final, int samples);

// 1/e time of the slowest decaying mode of an absorbing chain (+inf when the
// chain cannot lose population at all).
double chain_decay_time(const RateChain& chain);

// Mean photon count scattered by the repolarizing cascade per cooling cycle,
// from the branching table of the pump (expected photons from m = -(F-1) back
// to the dark m = -F).
double pump_cascade_length(int f_total);

}  // namespace drc

#endif

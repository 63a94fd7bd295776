#ifndef DRC_LINDBLAD_HPP
#define DRC_LINDBLAD_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drc/dissipators.hpp"
#include "drc/hilbert.hpp"

namespace drc {

// One collapse channel sqrt(rate) * op acting on the spin-motion space.
struct JumpChannel {
    SparseOp op;
    double rate;  // 1/s
};

// Master-equation generator for a single axis.  The right-hand side is evaluated as
//   d rho/dt = G rho + rho G^dag + sum_k rate_k L_k rho L_k^dag
// with G = -iH - (1/2) sum_k rate_k L_k^dag L_k - (1/2) kappa P_boundary.
// The boundary term is pure loss (no refill jump), so tr(rho) decays by exactly the
// probability current into the boundary level.
class LindbladGenerator {
  public:
    LindbladGenerator(const Operator& hamiltonian, const DissipatorSet& diss, Axis axis);

    const HilbertSpace& space() const { return space_; }
    const std::vector<JumpChannel>& channels() const { return channels_; }
    const SparseOp& drift() const { return drift_; }
    bool has_boundary() const { return boundary_rate_ > 0.0; }
    double norm_estimate() const { return norm_estimate_; }  // rad/s scale for dt choice

    // Full right-hand side; valid for arbitrary (not only Hermitian) rho, so it can
    // back both the integrator and matrix-free exponential propagation.
    void apply(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
               Eigen::Ref<Eigen::MatrixXcd> out) const;
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

  private:
    void add_channel(const SparseOp& op, double rate);

    HilbertSpace space_;
    std::vector<JumpChannel> channels_;
    SparseOp drift_;       // G
    SparseOp drift_adj_;   // G^dag
    double boundary_rate_ = 0.0;
    double norm_estimate_ = 0.0;

    // Per-channel triplet cache driving the O(nnz^2) jump application.
    struct Cache {
        std::vector<int> row, col;
        std::vector<Complex> val;
        double rate;
    };
    std::vector<Cache> cache_;
};

struct EvolveOptions {
    double t_final = 1e-3;        // s
    double dt = 0.0;              // s; 0 = auto (0.1 / norm_estimate)
    double sample_interval = 0.0; // s; 0 = t_final / 100
    enum class Method { rk4, krylov } method = Method::rk4;
    double krylov_tol = 1e-9;
    int krylov_dim = 30;
    int max_halvings = 8;         // adaptive fallback on monitor violation
    bool track_populations = true;
};

// Sampled open-system trajectory for one axis, with its integrity monitors.
struct CoolingTrajectory {
    std::vector<double> times;                  // s
    std::vector<double> mean_n;                 // conditional on survival
    std::vector<double> survival;               // tr(rho)
    std::vector<Eigen::MatrixXd> populations;   // spin_dim x fock_dim per sample

    double max_trace_error_per_ms = 0.0;  // |tr - 1| / (t/ms); boundary-free runs only
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;          // most negative eigenvalue seen at samples
    double max_boundary_population = 0.0;
    int halvings = 0;
    double dt_used = 0.0;
    std::string method;

    DensityState final_state;
};

// Integrates the master equation from rho0.  Fixed-step RK4 by default with
// trace/positivity monitors and bounded dt-halving; optional Krylov exponential
// stepping for long horizons.  Throws StepTooLarge when halving is exhausted and
// TruncationOverflow when the boundary level accumulates > 1e-3 population.
CoolingTrajectory lindblad_evolve(const LindbladGenerator& gen, const DensityState& rho0,
                                  const EvolveOptions& options);

}  // namespace drc

#endif

#ifndef DRC_LIOUVILLIAN_HPP
#define DRC_LIOUVILLIAN_HPP

#include <string>

#include "drc/hilbert.hpp"
#include "drc/lindblad.hpp"

namespace drc {

// Sparse matrix of the full generator acting on column-major vec(rho):
//   vec(A rho B) = (B^T kron A) vec(rho)
// so  L = I kron G + conj(G) kron I + sum_k rate_k * conj(L_k) kron L_k.
// Dimension is dim^2 x dim^2; intended for the truncated spaces used here.
SparseOp build_liouvillian(const LindbladGenerator& gen);

struct SteadyStateOptions {
    double residual_tol = 1e-8;   // acceptance threshold on ||L[rho]||_max / scale
    double evolve_chunk = 2e-4;   // s of evolution per convergence probe
    double evolve_max_time = 0.1; // s; NoConvergence beyond this horizon
    double evolve_tol = 1e-9;     // elementwise change per chunk treated as converged
};

// Stationary solution of L[rho] = 0, normalized to unit trace.
struct SteadyState {
    DensityState state;
    std::string method;   // "null-space" or "long-time-evolution"
    double residual;      // max |L[rho]| element after the solve
};

// Direct route: replace the redundant trace-conservation row of the sparse
// Liouvillian with the constraint tr(rho) = 1 and solve by sparse LU.  A
// degenerate null space (dimension > 1) cannot be pinned down this way and
// raises NonUniqueSteadyState; a generator that drains trace through the
// absorbing boundary admits no unit-trace stationary state and raises
// NoConvergence.
SteadyState steady_state(const LindbladGenerator& gen,
                         const SteadyStateOptions& opt = {});

// Seeded route: try the null-space solve first; if the null space is
// degenerate, fall back to evolving rho0 until the state stops changing
// (the physical steady state selected by the initial conditions).
SteadyState steady_state(const LindbladGenerator& gen, const DensityState& rho0,
                         const SteadyStateOptions& opt = {});

}  // namespace drc

#endif

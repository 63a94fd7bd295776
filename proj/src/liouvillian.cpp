#include "drc/liouvillian.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "drc/errors.hpp"

namespace drc {

SparseOp build_liouvillian(const LindbladGenerator& gen) {
    const int dim = gen.space().dim();
    const int big = dim * dim;
    const SparseOp& g = gen.drift();
    const SparseOp gc = g.conjugate();

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(2 * dim * g.nonZeros() + 1024);

    // I kron G: one copy of G per diagonal block (column-major vec convention).
    for (int outer = 0; outer < g.outerSize(); ++outer)
        for (SparseOp::InnerIterator it(g, outer); it; ++it)
            for (int d = 0; d < dim; ++d)
                trip.emplace_back(d * dim + int(it.row()), d * dim + int(it.col()),
                                  it.value());

    // conj(G) kron I: each entry of conj(G) smears over an identity block.
    for (int outer = 0; outer < gc.outerSize(); ++outer)
        for (SparseOp::InnerIterator it(gc, outer); it; ++it)
            for (int d = 0; d < dim; ++d)
                trip.emplace_back(int(it.row()) * dim + d, int(it.col()) * dim + d,
                                  it.value());

    // rate * conj(L) kron L for every jump channel.
    for (const auto& ch : gen.channels()) {
        const SparseOp lc = ch.op.conjugate();
        for (int o1 = 0; o1 < lc.outerSize(); ++o1)
            for (SparseOp::InnerIterator i1(lc, o1); i1; ++i1)
                for (int o2 = 0; o2 < ch.op.outerSize(); ++o2)
                    for (SparseOp::InnerIterator i2(ch.op, o2); i2; ++i2)
                        trip.emplace_back(int(i1.row()) * dim + int(i2.row()),
                                          int(i1.col()) * dim + int(i2.col()),
                                          ch.rate * i1.value() * i2.value());
    }

    SparseOp liou(big, big);
    liou.setFromTriplets(trip.begin(), trip.end());
    return liou;
}

namespace {

// Residual ||L[rho]||_max normalized by the generator's rate scale.
double relative_residual(const LindbladGenerator& gen, const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd rhs = gen.apply(rho);
    return rhs.cwiseAbs().maxCoeff() / gen.norm_estimate();
}

SteadyState finish(const LindbladGenerator& gen, Eigen::MatrixXcd rho,
                   const char* method) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    rho /= tr;
    SteadyState out{DensityState{gen.space(), std::move(rho)}, method, 0.0};
    out.residual = relative_residual(gen, out.state.rho);
    return out;
}

}  // namespace

SteadyState steady_state(const LindbladGenerator& gen, const SteadyStateOptions& opt) {
    const int dim = gen.space().dim();
    const int big = dim * dim;
    const SparseOp liou = build_liouvillian(gen);

    // Replace the d/dt rho(0,0) row with the unit-trace constraint.  For a
    // trace-preserving generator that row is linearly dependent on the rest,
    // so the replacement pins the one-dimensional null space uniquely.
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(liou.nonZeros() + dim);
    for (int outer = 0; outer < liou.outerSize(); ++outer)
        for (SparseOp::InnerIterator it(liou, outer); it; ++it)
            if (it.row() != 0)
                trip.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int i = 0; i < dim; ++i)
        trip.emplace_back(0, i * (dim + 1), Complex(1.0, 0.0));

    SparseOp a(big, big);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    Eigen::SparseLU<SparseOp> solver;
    solver.compute(a);
    bool degenerate = solver.info() != Eigen::Success;
    Eigen::VectorXcd x;
    if (!degenerate) {
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(big);
        b[0] = 1.0;
        x = solver.solve(b);
        degenerate = solver.info() != Eigen::Success || !x.allFinite() ||
                     x.cwiseAbs().maxCoeff() > 1e6;
    }
    if (degenerate)
        throw NonUniqueSteadyState(
            "null space of the generator is degenerate; the stationary state "
            "depends on the initial conditions");

    SteadyState out =
        finish(gen, Eigen::Map<const Eigen::MatrixXcd>(x.data(), dim, dim),
               "null-space");
    if (out.residual > opt.residual_tol)
        throw NoConvergence(
            "no unit-trace stationary state (residual " +
            std::to_string(out.residual) +
            "); the absorbing boundary drains every candidate state");
    return out;
}

SteadyState steady_state(const LindbladGenerator& gen, const DensityState& rho0,
                         const SteadyStateOptions& opt) {
    try {
        return steady_state(gen, opt);
    } catch (const NonUniqueSteadyState&) {
        // Fall through to the seeded long-time route.
    }

    Eigen::MatrixXcd rho = rho0.rho;
    double elapsed = 0.0;
    while (elapsed < opt.evolve_max_time) {
        EvolveOptions eopt;
        eopt.t_final = opt.evolve_chunk;
        eopt.sample_interval = opt.evolve_chunk;
        eopt.method = EvolveOptions::Method::krylov;
        eopt.track_populations = false;
        const auto traj =
            lindblad_evolve(gen, DensityState{gen.space(), rho}, eopt);
        const Eigen::MatrixXcd& next = traj.final_state.rho;
        const double change = (next - rho).cwiseAbs().maxCoeff();
        rho = next;
        elapsed += opt.evolve_chunk;
        if (change < opt.evolve_tol) {
            if (rho.trace().real() < 0.99)
                throw NoConvergence(
                    "trajectory drained through the absorbing boundary instead "
                    "of reaching a stationary state");
            return finish(gen, rho, "long-time-evolution");
        }
    }
    throw NoConvergence("state still changing after " +
                        std::to_string(opt.evolve_max_time) +
                        " s of relaxation");
}

}  // namespace drc

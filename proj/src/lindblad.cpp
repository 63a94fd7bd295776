#include "drc/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "drc/errors.hpp"
#include "drc/krylov.hpp"

namespace drc {

namespace {

double sparse_inf_norm(const SparseOp& m) {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseOp::InnerIterator it(m, k); it; ++it)
            row_sums[it.row()] += std::abs(it.value());
    return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

}  // namespace

LindbladGenerator::LindbladGenerator(const Operator& hamiltonian, const DissipatorSet& diss,
                                     Axis axis)
    : space_(hamiltonian.space) {
    const int ax = axis_index(axis);
    const double recoil = diss.recoil_per_event[ax];
    const double bg = diss.background_heating[ax];

    const auto a_op = fock_annihilation(space_);
    const auto ad_op = fock_creation(space_);

    for (const auto& c : diss.channels) {
        const double r = diss.pump_rate * c.weight;
        if (r <= 0.0) continue;
        const auto s = spin_transfer(space_, c.m_from, c.m_to);
        add_channel(s.mat, r);  // zeroth order: motional state untouched
        if (recoil > 0.0) {     // eta^2-weighted recoil sidebands of the same cycle
            add_channel(SparseOp(s.mat * ad_op.mat), r * recoil);
            add_channel(SparseOp(s.mat * a_op.mat), r * recoil);
        }
    }
    if (bg > 0.0) {  // symmetric pair: net heating of exactly bg quanta/s
        add_channel(ad_op.mat, bg);
        add_channel(a_op.mat, bg);
    }
    boundary_rate_ = diss.boundary_loss_rate;

    SparseOp back_action(space_.dim(), space_.dim());
    for (const auto& ch : channels_)
        back_action += SparseOp(Complex(0.5 * ch.rate, 0.0) * (ch.op.adjoint() * ch.op));
    if (boundary_rate_ > 0.0)
        back_action += SparseOp(Complex(0.5 * boundary_rate_, 0.0) *
                                fock_level_projector(space_, space_.n_max).mat);

    drift_ = SparseOp(Complex(0.0, -1.0) * hamiltonian.mat) - back_action;
    drift_.makeCompressed();
    drift_adj_ = SparseOp(drift_.adjoint());
    drift_adj_.makeCompressed();

    double jump_norm = 0.0;
    for (const auto& ch : channels_)
        jump_norm += ch.rate * sparse_inf_norm(SparseOp(ch.op.adjoint() * ch.op));
    norm_estimate_ = 2.0 * sparse_inf_norm(drift_) + jump_norm;
    if (!(norm_estimate_ > 0.0)) norm_estimate_ = 1.0;
}

void LindbladGenerator::add_channel(const SparseOp& op, double rate) {
    channels_.push_back({op, rate});
    Cache c;
    c.rate = rate;
    for (int k = 0; k < op.outerSize(); ++k) {
        for (SparseOp::InnerIterator it(op, k); it; ++it) {
            c.row.push_back(int(it.row()));
            c.col.push_back(int(it.col()));
            c.val.push_back(it.value());
        }
    }
    cache_.push_back(std::move(c));
}

void LindbladGenerator::apply(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                              Eigen::Ref<Eigen::MatrixXcd> out) const {
    out.noalias() = drift_ * rho;
    out.noalias() += rho * drift_adj_;
    for (const auto& ch : cache_) {
        const std::size_t nnz = ch.row.size();
        for (std::size_t p = 0; p < nnz; ++p) {
            const Complex vp = ch.rate * ch.val[p];
            const int rp = ch.row[p];
            const int cp = ch.col[p];
            for (std::size_t q = 0; q < nnz; ++q)
                out(rp, ch.row[q]) += vp * std::conj(ch.val[q]) * rho(cp, ch.col[q]);
        }
    }
}

Eigen::MatrixXcd LindbladGenerator::apply(const Eigen::MatrixXcd& rho) const {
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    apply(rho, out);
    return out;
}

namespace {

struct Monitors {
    double herm = 0.0;
    double trace = 1.0;
    double min_diag = 0.0;
    double top_pop = 0.0;
};

Monitors inspect(const HilbertSpace& sp, const Eigen::MatrixXcd& rho) {
    Monitors m;
    m.herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    m.trace = rho.trace().real();
    m.min_diag = rho.diagonal().real().minCoeff();
    for (int s = -sp.f_total; s <= sp.f_total; ++s)
        m.top_pop += rho(sp.index(s, sp.n_max), sp.index(s, sp.n_max)).real();
    return m;
}

}  // namespace

CoolingTrajectory lindblad_evolve(const LindbladGenerator& gen, const DensityState& rho0,
                                  const EvolveOptions& opt) {
    require_same_space(gen.space(), rho0.space, "lindblad_evolve");
    if (!(opt.t_final > 0.0)) throw ConfigError("t_final must be positive");
    const HilbertSpace& sp = gen.space();
    const int dim = sp.dim();
    const bool boundary = gen.has_boundary();

    double krylov_tol = opt.krylov_tol;
    double sample_dt = opt.sample_interval > 0.0 ? opt.sample_interval : opt.t_final / 100.0;
    sample_dt = std::min(sample_dt, opt.t_final);
    // RK4 is stability-limited, so its default step follows the generator norm;
    // the exponential integrator is accuracy-controlled internally and can take
    // one step per sample, with the integrity monitors still checked there.
    double dt = opt.dt > 0.0 ? opt.dt
                : opt.method == EvolveOptions::Method::rk4 ? 0.1 / gen.norm_estimate()
                                                           : sample_dt;

    CoolingTrajectory traj;
    traj.method = opt.method == EvolveOptions::Method::rk4 ? "rk4" : "krylov";
    traj.min_eigenvalue = 1.0;

    Eigen::MatrixXcd rho = rho0.rho;
    Eigen::MatrixXcd k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), tmp(dim, dim);

    auto record = [&](double t, Eigen::MatrixXcd& r, const Monitors& m) {
        traj.times.push_back(t);
        traj.survival.push_back(m.trace);
        traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, m.herm);
        traj.max_boundary_population = std::max(traj.max_boundary_population, m.top_pop);
        if (!boundary && t > 0.0)
            traj.max_trace_error_per_ms = std::max(
                traj.max_trace_error_per_ms, std::abs(m.trace - 1.0) * 1e-3 / t);

        Eigen::MatrixXcd herm = 0.5 * (r + r.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
        traj.min_eigenvalue = std::min(traj.min_eigenvalue, es.eigenvalues().minCoeff());
        r = herm;  // shed accumulated asymmetry once it has been measured

        Eigen::MatrixXd pops(sp.spin_dim(), sp.fock_dim());
        double nsum = 0.0;
        for (int s = -sp.f_total; s <= sp.f_total; ++s) {
            for (int n = 0; n <= sp.n_max; ++n) {
                const double p = r(sp.index(s, n), sp.index(s, n)).real();
                pops(s + sp.f_total, n) = p;
                nsum += n * p;
            }
        }
        traj.mean_n.push_back(m.trace > 1e-12 ? nsum / m.trace : 0.0);
        if (opt.track_populations) traj.populations.push_back(std::move(pops));
        if (m.top_pop > 1e-3)
            throw TruncationOverflow("boundary-level population " +
                                     std::to_string(m.top_pop) + " at t = " +
                                     std::to_string(t));
    };

    Monitors m0 = inspect(sp, rho);
    record(0.0, rho, m0);

    const ApplyFn rhs_vec = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        y.resize(x.size());
        Eigen::Map<const Eigen::MatrixXcd> xm(x.data(), dim, dim);
        Eigen::Map<Eigen::MatrixXcd> ym(y.data(), dim, dim);
        gen.apply(xm, ym);
    };

    double t = 0.0;
    double last_trace = m0.trace;
    Eigen::MatrixXcd snapshot = rho;
    const double t_end = opt.t_final;
    while (t < t_end * (1.0 - 1e-12)) {
        const double t_next = std::min(t + sample_dt, t_end);
        bool accepted = false;
        while (!accepted) {
            if (opt.method == EvolveOptions::Method::rk4) {
                double tt = t;
                while (tt < t_next * (1.0 - 1e-12)) {
                    const double h = std::min(dt, t_next - tt);
                    gen.apply(rho, k1);
                    tmp.noalias() = rho + (0.5 * h) * k1;
                    gen.apply(tmp, k2);
                    tmp.noalias() = rho + (0.5 * h) * k2;
                    gen.apply(tmp, k3);
                    tmp.noalias() = rho + h * k3;
                    gen.apply(tmp, k4);
                    rho.noalias() += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    tt += h;
                }
            } else {
                Eigen::VectorXcd v = Eigen::Map<Eigen::VectorXcd>(rho.data(), dim * dim);
                v = expm_multiply(rhs_vec, v, t_next - t, krylov_tol, opt.krylov_dim);
                rho = Eigen::Map<Eigen::MatrixXcd>(v.data(), dim, dim);
            }

            const Monitors m = inspect(sp, rho);
            const double trace_budget =
                1e-8 * std::max(t_next / 1e-3, 1e-2);  // drift allowance per elapsed ms
            const bool finite = std::isfinite(m.herm) && std::isfinite(m.trace) &&
                                std::isfinite(m.min_diag) && std::isfinite(m.top_pop);
            const bool bad = !finite || m.herm > 1e-10 || m.min_diag < -1e-9 ||
                             (!boundary && std::abs(m.trace - 1.0) > trace_budget) ||
                             (boundary && m.trace > last_trace + 1e-10);
            if (!bad) {
                record(t_next, rho, m);
                accepted = true;
                last_trace = m.trace;
                snapshot = rho;
                t = t_next;
            } else {
                if (traj.halvings >= opt.max_halvings)
                    throw StepTooLarge("integrity monitors still violated after " +
                                       std::to_string(traj.halvings) + " halvings");
                ++traj.halvings;
                dt *= 0.5;
                krylov_tol *= 0.01;
                rho = snapshot;
            }
        }
    }

    traj.dt_used = dt;
    traj.final_state = DensityState{sp, rho};
    return traj;
}

}  // namespace drc

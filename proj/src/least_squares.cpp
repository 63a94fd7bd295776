#include "drc/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include "drc/errors.hpp"

namespace drc {

namespace {

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const LeastSquaresOptions& opt) {
    for (int i = 0; i < x.size(); ++i) {
        if (i < int(opt.lower.size())) x[i] = std::max(x[i], opt.lower[i]);
        if (i < int(opt.upper.size())) x[i] = std::min(x[i], opt.upper[i]);
    }
    return x;
}

Eigen::MatrixXd central_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 int m, const LeastSquaresOptions& opt) {
    const int n = int(x.size());
    Eigen::MatrixXd jac(m, n);
    for (int j = 0; j < n; ++j) {
        const double h = opt.finite_diff_rel * std::max(std::abs(x[j]), 1.0);
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

}  // namespace

LeastSquaresResult fit_least_squares(const ResidualFn& residual, Eigen::VectorXd x0,
                                     const LeastSquaresOptions& opt) {
    Eigen::VectorXd x = clamp_to_box(std::move(x0), opt);
    Eigen::VectorXd r = residual(x);
    if (!r.allFinite()) throw FitDiverged("residual not finite at the starting point");
    const int m = int(r.size());
    const int n = int(x.size());

    double chi2 = r.squaredNorm();
    double lambda = opt.lambda0;
    int chi2_stalls = 0;
    LeastSquaresResult out;
    Eigen::MatrixXd jac;

    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        jac = central_jacobian(residual, x, m, opt);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;

        const double gscale = 1.0 + chi2;
        if (g.cwiseAbs().maxCoeff() < opt.gradient_tol * gscale) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        for (int damp = 0; damp < 40; ++damp) {
            Eigen::MatrixXd a = jtj;
            for (int i = 0; i < n; ++i)
                a(i, i) += lambda * std::max(jtj(i, i), 1e-30);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            const Eigen::VectorXd trial = clamp_to_box(x + step, opt);
            const Eigen::VectorXd rt = residual(trial);
            if (rt.allFinite() && rt.squaredNorm() < chi2) {
                const double rel_step =
                    (trial - x).cwiseAbs().maxCoeff() /
                    (1.0 + x.cwiseAbs().maxCoeff());
                const double drop = chi2 - rt.squaredNorm();
                x = trial;
                r = rt;
                chi2 = rt.squaredNorm();
                lambda = std::max(lambda * 0.2, 1e-14);
                accepted = true;
                if (opt.on_accept) opt.on_accept(it, chi2);
                if (rel_step < opt.step_tol) {
                    out.converged = true;
                    it = opt.max_iterations;  // stop outer loop
                }
                if (opt.chi2_rel_tol > 0.0 &&
                    drop <= opt.chi2_rel_tol * (chi2 + 1e-300)) {
                    if (++chi2_stalls >= 2) {
                        out.converged = true;
                        it = opt.max_iterations;  // stop outer loop
                    }
                } else {
                    chi2_stalls = 0;
                }
                break;
            }
            lambda *= 8.0;
            if (lambda > 1e14) break;
        }
        if (!accepted) {
            // No downhill direction left: either we're at the optimum within
            // numerical resolution (small gradient) or the fit diverged.
            if (g.cwiseAbs().maxCoeff() < 1e-6 * gscale || chi2 < 1e-28) {
                out.converged = true;
                break;
            }
            throw FitDiverged("no acceptable damped step found");
        }
    }

    out.parameters = x;
    out.chi2 = chi2;
    jac = central_jacobian(residual, x, m, opt);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof_scale = m > n ? chi2 / double(m - n) : 1.0;
    out.covariance = dof_scale *
                     jtj.completeOrthogonalDecomposition().pseudoInverse();
    return out;
}

}  // namespace drc

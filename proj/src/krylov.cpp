#include "drc/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

#include "drc/errors.hpp"

namespace drc {

Eigen::VectorXcd expm_multiply(const ApplyFn& apply, const Eigen::VectorXcd& v, double t,
                               double tol, int krylov_dim) {
    const Eigen::Index n = v.size();
    const int m = int(std::min<Eigen::Index>(krylov_dim, n));
    if (v.norm() == 0.0 || t == 0.0) return v;

    Eigen::VectorXcd w = v;
    Eigen::MatrixXcd basis(n, m + 1);
    Eigen::VectorXcd av(n);

    // One-shot norm estimate of A for the initial step guess.
    apply(w, av);
    double anorm = av.norm() / w.norm();
    if (!(anorm > 0.0)) anorm = 1.0;
    double tau = std::min(t, double(m) / (2.0 * anorm));

    double done = 0.0;
    int rejections = 0;
    while (done < t) {
        tau = std::min(tau, t - done);
        const double beta = w.norm();
        if (beta == 0.0) return w;

        // Arnoldi factorization A V_m = V_m H_m + h_{m+1,m} v_{m+1} e_m^T, with a
        // second Gram-Schmidt sweep to keep the basis orthogonal in long runs.
        Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(m + 2, m + 2);
        basis.col(0) = w / beta;
        int k = m;
        bool happy = false;
        double avnorm = 0.0;
        for (int j = 0; j < m; ++j) {
            apply(basis.col(j), av);
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    const std::complex<double> h = basis.col(i).dot(av);
                    hess(i, j) += h;
                    av -= h * basis.col(i);
                }
            }
            const double resid = av.norm();
            if (resid < 1e-12 * anorm + 1e-300) {
                k = j + 1;
                happy = true;
                break;
            }
            hess(j + 1, j) = resid;
            basis.col(j + 1) = av / resid;
            if (j == m - 1) {
                apply(basis.col(m), av);
                avnorm = av.norm();
            }
        }

        while (true) {
            if (happy) {  // exact invariant subspace: no local error, finish the interval
                tau = t - done;
                const Eigen::MatrixXcd f = (tau * hess.topLeftCorner(k, k)).exp();
                w = beta * (basis.leftCols(k) * f.col(0));
                done = t;
                break;
            }
            // Augmented exponential exposes the two correction magnitudes used for
            // the local error estimate of the corrected Krylov approximation.
            hess(m + 1, m) = 1.0;
            const Eigen::MatrixXcd f = (tau * hess).exp();
            const double phi1 = std::abs(beta * f(m, 0));
            const double phi2 = std::abs(beta * f(m + 1, 0)) * avnorm;
            double err;
            if (phi1 > 10.0 * phi2)
                err = phi2;
            else if (phi2 > phi1)
                err = phi1;
            else
                err = phi1 * phi2 / (phi1 - phi2 + 1e-300);

            const double budget = tol * beta * std::max(tau / t, 1e-16);
            if (err <= budget || tau <= 1e-18 * t) {
                w = beta * (basis.leftCols(m + 1) * f.col(0).head(m + 1));
                done += tau;
                const double grow =
                    0.9 * std::pow(budget / (err + 1e-300), 1.0 / double(m));
                tau *= std::clamp(grow, 0.3, 4.0);
                break;
            }
            tau *= std::clamp(0.9 * std::pow(budget / err, 1.0 / double(m)), 0.1, 0.9);
            if (++rejections > 2000)
                throw NoConvergence("Krylov propagator step size underflow");
        }
    }
    return w;
}

}  // namespace drc

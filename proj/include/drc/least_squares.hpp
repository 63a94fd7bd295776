#ifndef DRC_LEAST_SQUARES_HPP
#define DRC_LEAST_SQUARES_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace drc {

// Residual vector r(x); the fit minimizes |r|^2.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LeastSquaresOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-10;  // max |J^T r| relative to scale
    double step_tol = 1e-12;      // relative parameter step
    // Declare convergence after two consecutive accepted steps whose chi2
    // improvement is below chi2_rel_tol * chi2.  Useful on noisy objectives
    // whose gradient never reaches gradient_tol; 0 disables the criterion.
    double chi2_rel_tol = 0.0;
    double lambda0 = 1e-3;        // initial Marquardt damping
    double finite_diff_rel = 1e-6;
    std::vector<double> lower, upper;  // optional per-parameter box (clamped)
    // Called after every accepted step with (iteration, chi2); accepted chi2
    // values never increase.
    std::function<void(int, double)> on_accept;
};

struct LeastSquaresResult {
    Eigen::VectorXd parameters;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    // chi2/dof * (J^T J)^{-1}; parameter standard errors are sqrt(diagonal).
    Eigen::MatrixXd covariance;
};

// Damped Gauss-Newton (Levenberg-Marquardt) with central-difference Jacobians.
// Throws FitDiverged when the residual is not finite at the start or the
// damping loop cannot find any acceptable step.
LeastSquaresResult fit_least_squares(const ResidualFn& residual, Eigen::VectorXd x0,
                                     const LeastSquaresOptions& opt = {});

}  // namespace drc

#endif

#ifndef DRC_KRYLOV_HPP
#define DRC_KRYLOV_HPP

#include <functional>

#include <Eigen/Dense>

namespace drc {

using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

// w ~ exp(t A) v for a matrix-free linear operator, via Arnoldi projection with
// adaptive sub-stepping (a posteriori error estimate on the Hessenberg corner).
// tol is the target relative l2 error over the whole interval.
Eigen::VectorXcd expm_multiply(const ApplyFn& apply, const Eigen::VectorXcd& v, double t,
                               double tol = 1e-9, int krylov_dim = 30);

}  // namespace drc

#endif

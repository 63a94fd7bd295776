#include "drc/hilbert.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "drc/errors.hpp"

namespace drc {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseOp from_triplets(const HilbertSpace& space, const std::vector<Triplet>& trips) {
    SparseOp m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

// sqrt(F(F+1) - m(m+1)) = matrix element <m+1|F_+|m>
double ladder_element(int f, int m) {
    return std::sqrt(static_cast<double>(f * (f + 1) - m * (m + 1)));
}

}  // namespace

int HilbertSpace::index(int m_f, int n) const {
    if (m_f < -f_total || m_f > f_total)
        throw DimensionMismatch("m_f = " + std::to_string(m_f) + " outside |m| <= " +
                                std::to_string(f_total));
    if (n < 0 || n > n_max)
        throw DimensionMismatch("n = " + std::to_string(n) + " outside [0, " +
                                std::to_string(n_max) + "]");
    return (m_f + f_total) * fock_dim() + n;
}

std::pair<int, int> HilbertSpace::unindex(int idx) const {
    if (idx < 0 || idx >= dim())
        throw DimensionMismatch("index " + std::to_string(idx) + " outside space of dim " +
                                std::to_string(dim()));
    return {idx / fock_dim() - f_total, idx % fock_dim()};
}

Operator Operator::adjoint() const {
    Operator out{space, SparseOp(mat.adjoint())};
    out.mat.makeCompressed();
    return out;
}

void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* what) {
    if (!(a == b)) throw DimensionMismatch(std::string(what) + ": operand spaces differ");
}

Operator fock_annihilation(const HilbertSpace& space) {
    std::vector<Triplet> trips;
    for (int m = -space.f_total; m <= space.f_total; ++m)
        for (int n = 1; n <= space.n_max; ++n)
            trips.emplace_back(space.index(m, n - 1), space.index(m, n), std::sqrt(n));
    return {space, from_triplets(space, trips)};
}

Operator fock_creation(const HilbertSpace& space) { return fock_annihilation(space).adjoint(); }

Operator fock_number(const HilbertSpace& space) {
    std::vector<Triplet> trips;
    for (int m = -space.f_total; m <= space.f_total; ++m)
        for (int n = 1; n <= space.n_max; ++n)
            trips.emplace_back(space.index(m, n), space.index(m, n), double(n));
    return {space, from_triplets(space, trips)};
}

Operator spin_fy(const HilbertSpace& space) {
    // Quantization axis along the offset field: F_y is diagonal in m_F.
    std::vector<Triplet> trips;
    for (int m = -space.f_total; m <= space.f_total; ++m)
        for (int n = 0; n <= space.n_max; ++n)
            trips.emplace_back(space.index(m, n), space.index(m, n), double(m));
    return {space, from_triplets(space, trips)};
}

Operator spin_raising(const HilbertSpace& space) {
    std::vector<Triplet> trips;
    for (int m = -space.f_total; m < space.f_total; ++m) {
        const double elem = ladder_element(space.f_total, m);
        for (int n = 0; n <= space.n_max; ++n)
            trips.emplace_back(space.index(m + 1, n), space.index(m, n), elem);
    }
    return {space, from_triplets(space, trips)};
}

Operator spin_lowering(const HilbertSpace& space) { return spin_raising(space).adjoint(); }

Operator spin_transfer(const HilbertSpace& space, int m_from, int m_to) {
    std::vector<Triplet> trips;
    for (int n = 0; n <= space.n_max; ++n)
        trips.emplace_back(space.index(m_to, n), space.index(m_from, n), 1.0);
    return {space, from_triplets(space, trips)};
}

Operator fock_level_projector(const HilbertSpace& space, int n) {
    std::vector<Triplet> trips;
    for (int m = -space.f_total; m <= space.f_total; ++m)
        trips.emplace_back(space.index(m, n), space.index(m, n), 1.0);
    return {space, from_triplets(space, trips)};
}

Operator build_axis_hamiltonian(const HilbertSpace& space, double omega, double delta_off,
                                double coupling, double stark_per_mf) {
    std::vector<Triplet> trips;
    const int f = space.f_total;
    for (int m = -f; m <= f; ++m) {
        for (int n = 0; n <= space.n_max; ++n) {
            const int i = space.index(m, n);
            trips.emplace_back(i, i, omega * n + (delta_off + stark_per_mf) * m);
        }
    }
    // coupling (a + a^dag)(F_+ + F_-): emit both Hermitian partners explicitly so the
    // assembled matrix is Hermitian to the last bit.
    for (int m = -f; m < f; ++m) {
        const double elem = ladder_element(f, m);
        for (int n = 0; n < space.n_max; ++n) {
            const double amp = coupling * elem * std::sqrt(n + 1.0);
            // |m+1, n><m, n+1| + h.c.   (a F_+ term)
            trips.emplace_back(space.index(m + 1, n), space.index(m, n + 1), amp);
            trips.emplace_back(space.index(m, n + 1), space.index(m + 1, n), amp);
            // |m+1, n+1><m, n| + h.c.   (a^dag F_+ term)
            trips.emplace_back(space.index(m + 1, n + 1), space.index(m, n), amp);
            trips.emplace_back(space.index(m, n), space.index(m + 1, n + 1), amp);
        }
    }
    return {space, from_triplets(space, trips)};
}

Operator build_hamiltonian(const TrapConfig& trap, const FieldConfig& field,
                           const HilbertSpace& space, double stark_per_mf) {
    return build_axis_hamiltonian(space, trap.omega[axis_index(Axis::y)],
                                  zeeman_splitting(field), spin_motion_coupling(trap, field),
                                  stark_per_mf);
}

void dump_triplets(std::ostream& os, const Operator& op) {
    char line[128];
    std::snprintf(line, sizeof line,
                  "# spin-major basis: index = (m_f + f) * (n_max + 1) + n\n");
    os << line;
    std::snprintf(line, sizeof line, "# f_total=%d n_max=%d dim=%d\n", op.space.f_total,
                  op.space.n_max, op.space.dim());
    os << line;
    os << "# row col re im\n";
    for (int k = 0; k < op.mat.outerSize(); ++k) {
        for (SparseOp::InnerIterator it(op.mat, k); it; ++it) {
            std::snprintf(line, sizeof line, "%d %d %.17g %.17g\n", int(it.row()),
                          int(it.col()), it.value().real(), it.value().imag());
            os << line;
        }
    }
}

double DensityState::trace_real() const { return rho.trace().real(); }

double DensityState::hermiticity_error() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityState::min_eigenvalue() const {
    Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::VectorXd DensityState::fock_populations() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(space.fock_dim());
    for (int m = -space.f_total; m <= space.f_total; ++m)
        for (int n = 0; n <= space.n_max; ++n)
            p[n] += rho(space.index(m, n), space.index(m, n)).real();
    return p;
}

Eigen::VectorXd DensityState::spin_populations() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(space.spin_dim());
    for (int m = -space.f_total; m <= space.f_total; ++m)
        for (int n = 0; n <= space.n_max; ++n)
            p[m + space.f_total] += rho(space.index(m, n), space.index(m, n)).real();
    return p;
}

double DensityState::mean_n() const {
    const Eigen::VectorXd p = fock_populations();
    const double norm = p.sum();
    if (norm <= 0.0) return 0.0;
    double acc = 0.0;
    for (int n = 0; n < p.size(); ++n) acc += n * p[n];
    return acc / norm;
}

void DensityState::validate(double trace_tol, double herm_tol, double eig_tol) const {
    if (rho.rows() != space.dim() || rho.cols() != space.dim())
        throw DimensionMismatch("density matrix shape does not match space");
    if (std::abs(trace_real() - 1.0) > trace_tol)
        throw TruncationOverflow("trace deviates from 1 by " +
                                 std::to_string(trace_real() - 1.0));
    if (hermiticity_error() > herm_tol)
        throw TruncationOverflow("hermiticity error " + std::to_string(hermiticity_error()));
    if (min_eigenvalue() < -eig_tol)
        throw TruncationOverflow("negative eigenvalue " + std::to_string(min_eigenvalue()));
}

DensityState pure_state(const HilbertSpace& space, int m_f, int n) {
    DensityState st{space, Eigen::MatrixXcd::Zero(space.dim(), space.dim())};
    const int i = space.index(m_f, n);
    st.rho(i, i) = 1.0;
    return st;
}

DensityState thermal_state(const HilbertSpace& space, int m_f, double mean_n,
                           double tail_tol) {
    if (mean_n < 0.0) throw ConfigError("thermal mean_n must be non-negative");
    DensityState st{space, Eigen::MatrixXcd::Zero(space.dim(), space.dim())};
    if (mean_n == 0.0) {
        st.rho(space.index(m_f, 0), space.index(m_f, 0)) = 1.0;
        return st;
    }
    const double r = mean_n / (mean_n + 1.0);
    const double tail = std::pow(r, space.n_max + 1);  // discarded mass
    if (tail > tail_tol)
        throw TruncationOverflow("thermal tail beyond n_max carries " + std::to_string(tail));
    double norm = 0.0;
    for (int n = 0; n <= space.n_max; ++n) norm += std::pow(r, n) / (mean_n + 1.0);
    for (int n = 0; n <= space.n_max; ++n) {
        const int i = space.index(m_f, n);
        st.rho(i, i) = std::pow(r, n) / (mean_n + 1.0) / norm;
    }
    return st;
}

}  // namespace drc

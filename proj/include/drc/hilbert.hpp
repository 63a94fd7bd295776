#ifndef DRC_HILBERT_HPP
#define DRC_HILBERT_HPP

#include <complex>
#include <iosfwd>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "drc/trap.hpp"

namespace drc {

using Complex = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<Complex>;

// Truncated product space |m_F> (x) |n> with spin-major ordering:
// index(m_F, n) = (m_F + F) * (n_max + 1) + n.
struct HilbertSpace {
    int f_total = 4;
    int n_max = 0;

    int spin_dim() const { return 2 * f_total + 1; }
    int fock_dim() const { return n_max + 1; }
    int dim() const { return spin_dim() * fock_dim(); }

    int index(int m_f, int n) const;              // bounds-checked
    std::pair<int, int> unindex(int idx) const;   // -> {m_f, n}

    bool operator==(const HilbertSpace&) const = default;
};

// Operator tied to its space so compositions can check compatibility.
struct Operator {
    HilbertSpace space;
    SparseOp mat;

    Operator adjoint() const;
};

void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* what);

// Fock-space ladder operators, extended over the spin index with the identity.
Operator fock_annihilation(const HilbertSpace& space);
Operator fock_creation(const HilbertSpace& space);
Operator fock_number(const HilbertSpace& space);

// Spin projection F_y and ladder operators F_+ / F_-, extended over motion.
Operator spin_fy(const HilbertSpace& space);
Operator spin_raising(const HilbertSpace& space);
Operator spin_lowering(const HilbertSpace& space);

// |m_to><m_from| on the spin factor, identity on motion.
Operator spin_transfer(const HilbertSpace& space, int m_from, int m_to);

// Projector onto one Fock level, identity on spin.
Operator fock_level_projector(const HilbertSpace& space, int n);

// H/hbar = omega a^dag a + delta_off F_y + coupling (a + a^dag)(F_+ + F_-)
//        [+ stark_per_mf * F_y], all rates in rad/s.  Exactly Hermitian by assembly.
Operator build_axis_hamiltonian(const HilbertSpace& space, double omega, double delta_off,
                                double coupling, double stark_per_mf = 0.0);

// Convenience wrapper using the y-axis trap frequency and the configured fields.
Operator build_hamiltonian(const TrapConfig& trap, const FieldConfig& field,
                           const HilbertSpace& space, double stark_per_mf = 0.0);

// Text dump, one "row col re im" triplet per line after a basis-ordering header.
void dump_triplets(std::ostream& os, const Operator& op);

// Density matrix with its physicality checks.
struct DensityState {
    HilbertSpace space;
    Eigen::MatrixXcd rho;

    double trace_real() const;
    double hermiticity_error() const;   // max |rho - rho^dag| entry
    double min_eigenvalue() const;      // of the Hermitian part
    // Marginal occupation P(n), summed over spin; not renormalized.
    Eigen::VectorXd fock_populations() const;
    // Marginal occupation P(m_F), summed over motion; not renormalized.
    Eigen::VectorXd spin_populations() const;
    double mean_n() const;              // Fock expectation / trace
    // Throws DimensionMismatch / TruncationOverflow when outside tolerances:
    // |tr - 1| <= trace_tol, hermiticity <= herm_tol, min eig >= -eig_tol.
    void validate(double trace_tol = 1e-9, double herm_tol = 1e-10,
                  double eig_tol = 1e-9) const;
};

// |m_f, n><m_f, n| as a density matrix.
DensityState pure_state(const HilbertSpace& space, int m_f, int n);

// Thermal Fock distribution at mean_n in spin level m_f, truncated to the space and
// renormalized.  Throws TruncationOverflow when the discarded tail exceeds tail_tol.
DensityState thermal_state(const HilbertSpace& space, int m_f, double mean_n,
                           double tail_tol = 1e-4);

}  // namespace drc

#endif

#include "doctest.h"

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "drc/errors.hpp"
#include "drc/hilbert.hpp"

using namespace drc;
using doctest::Approx;

namespace {

Eigen::MatrixXcd dense(const Operator& op) { return Eigen::MatrixXcd(op.mat); }

// Textbook assembly with explicit loops, kept deliberately independent of the
// library's triplet-based construction.
Eigen::MatrixXcd dense_reference_hamiltonian(const HilbertSpace& sp, double omega,
                                             double delta, double coupling, double stark) {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(sp.dim(), sp.dim());
    const int f = sp.f_total;
    for (int m = -f; m <= f; ++m)
        for (int n = 0; n <= sp.n_max; ++n)
            h(sp.index(m, n), sp.index(m, n)) = omega * n + (delta + stark) * m;
    for (int m = -f; m <= f; ++m) {
        for (int mp = -f; mp <= f; ++mp) {
            double spin = 0.0;  // <mp| F_+ + F_- |m>
            if (mp == m + 1) spin += std::sqrt(double(f * (f + 1) - m * (m + 1)));
            if (mp == m - 1) spin += std::sqrt(double(f * (f + 1) - m * (m - 1)));
            if (spin == 0.0) continue;
            for (int n = 0; n <= sp.n_max; ++n) {
                if (n + 1 <= sp.n_max)
                    h(sp.index(mp, n + 1), sp.index(m, n)) +=
                        coupling * spin * std::sqrt(n + 1.0);
                if (n - 1 >= 0)
                    h(sp.index(mp, n - 1), sp.index(m, n)) += coupling * spin * std::sqrt(double(n));
            }
        }
    }
    return h;
}

}  // namespace

TEST_SUITE("hilbert") {

TEST_CASE("spin-major indexing round trips") {
    const HilbertSpace sp{4, 6};
    CHECK(sp.dim() == 63);
    CHECK(sp.index(-4, 0) == 0);
    CHECK(sp.index(-4, 6) == 6);
    CHECK(sp.index(-3, 0) == 7);
    CHECK(sp.index(4, 6) == 62);
    for (int m = -4; m <= 4; ++m) {
        for (int n = 0; n <= 6; ++n) {
            const auto [mm, nn] = sp.unindex(sp.index(m, n));
            CHECK(mm == m);
            CHECK(nn == n);
        }
    }
    CHECK_THROWS_AS(sp.index(5, 0), DimensionMismatch);
    CHECK_THROWS_AS(sp.index(0, 7), DimensionMismatch);
    CHECK_THROWS_AS(sp.unindex(63), DimensionMismatch);
}

TEST_CASE("ladder operators act canonically") {
    const HilbertSpace sp{4, 8};
    const auto a = fock_annihilation(sp);
    const auto ad = fock_creation(sp);
    const auto num = fock_number(sp);

    CHECK(Eigen::MatrixXcd(ad.mat * a.mat - num.mat).norm() < 1e-12);

    // [a, a^dag] = 1 on the interior; the top level shows the truncation artifact.
    const Eigen::MatrixXcd comm = dense(a) * dense(ad) - dense(ad) * dense(a);
    for (int m = -4; m <= 4; ++m) {
        for (int n = 0; n < sp.n_max; ++n)
            CHECK(comm(sp.index(m, n), sp.index(m, n)).real() == Approx(1.0).epsilon(1e-15));
        CHECK(comm(sp.index(m, sp.n_max), sp.index(m, sp.n_max)).real() ==
              Approx(double(-sp.n_max)).epsilon(1e-15));
    }

    // a |m, n> = sqrt(n) |m, n-1>
    CHECK(std::abs(dense(a)(sp.index(2, 4), sp.index(2, 5))) == Approx(std::sqrt(5.0)));
}

TEST_CASE("spin operators satisfy the angular momentum algebra") {
    const HilbertSpace sp{4, 2};
    const auto fy = dense(spin_fy(sp));
    const auto fp = dense(spin_raising(sp));
    const auto fm = dense(spin_lowering(sp));

    CHECK((fp * fm - fm * fp - 2.0 * fy).norm() < 1e-12);

    // Casimir: F_y^2 + (F_+ F_- + F_- F_+)/2 = F(F+1)
    const Eigen::MatrixXcd casimir = fy * fy + 0.5 * (fp * fm + fm * fp);
    const Eigen::MatrixXcd expected =
        20.0 * Eigen::MatrixXcd::Identity(sp.dim(), sp.dim());
    CHECK((casimir - expected).norm() < 1e-12);

    // Stretched state is annihilated downward.
    Eigen::VectorXcd stretched = Eigen::VectorXcd::Zero(sp.dim());
    stretched[sp.index(-4, 1)] = 1.0;
    CHECK((fm * stretched).norm() == 0.0);
}

TEST_CASE("spin transfer moves population between Zeeman levels") {
    const HilbertSpace sp{4, 3};
    const auto t = spin_transfer(sp, -3, -4);
    CHECK(std::abs(dense(t)(sp.index(-4, 2), sp.index(-3, 2))) == Approx(1.0));
    CHECK(Eigen::MatrixXcd(t.mat).cwiseAbs().sum() == Approx(double(sp.fock_dim())));
}

TEST_CASE("Hamiltonian matches an independent dense assembly") {
    const HilbertSpace sp{4, 5};
    const double omega = 5.2e5, delta = 5.5e5, coupling = 3.7e4, stark = 1.1e4;
    const auto h = build_axis_hamiltonian(sp, omega, delta, coupling, stark);
    const Eigen::MatrixXcd ref = dense_reference_hamiltonian(sp, omega, delta, coupling, stark);
    CHECK((dense(h) - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Hamiltonian is Hermitian to the last bit") {
    const HilbertSpace sp{4, 10};
    const auto h = build_axis_hamiltonian(sp, 5.2e5, 5.5e5, 3.7e4, 0.0);
    CHECK((dense(h) - dense(h).adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate pair splits by twice the coupling matrix element") {
    // At delta = omega the pair |-4, 1>, |-3, 0> is degenerate and the gradient
    // term lifts it by 2 * coupling * sqrt(8) to first order.
    const HilbertSpace sp{4, 6};
    const double omega = 2.0 * M_PI * 83e3;
    const double coupling = 1e-4 * omega;  // weak drive so first order dominates
    const auto h = build_axis_hamiltonian(sp, omega, omega, coupling, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(h), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    // Collect the two eigenvalues nearest the unperturbed crossing at -4 omega + omega.
    const double target = -4.0 * omega + omega;
    std::vector<double> near;
    for (int i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i] - target) < 10.0 * coupling * std::sqrt(8.0)) near.push_back(ev[i]);
    REQUIRE(near.size() == 2);
    CHECK(near[1] - near[0] == Approx(2.0 * coupling * std::sqrt(8.0)).epsilon(1e-4));
}

TEST_CASE("zero coupling leaves spin and motion unmixed") {
    const HilbertSpace sp{4, 4};
    const auto h = build_axis_hamiltonian(sp, 5.2e5, 3.3e5, 0.0, 0.0);
    const Eigen::MatrixXcd hd = dense(h);
    CHECK((hd - Eigen::MatrixXcd(hd.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("triplet dump round trips through text") {
    const HilbertSpace sp{4, 3};
    const auto h = build_axis_hamiltonian(sp, 5.2e5, 5.5e5, 3.7e4, 0.0);
    std::ostringstream os;
    dump_triplets(os, h);
    std::istringstream is(os.str());

    Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(sp.dim(), sp.dim());
    std::string line;
    int header_lines = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            ++header_lines;
            continue;
        }
        std::istringstream row(line);
        int r, c;
        double re, im;
        row >> r >> c >> re >> im;
        rebuilt(r, c) = Complex(re, im);
    }
    CHECK(header_lines >= 2);
    CHECK(os.str().find("spin-major") != std::string::npos);
    CHECK((rebuilt - dense(h)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure states validate and report their labels") {
    const HilbertSpace sp{4, 5};
    const auto st = pure_state(sp, -4, 0);
    CHECK_NOTHROW(st.validate());
    CHECK(st.trace_real() == Approx(1.0));
    CHECK(st.mean_n() == Approx(0.0));
    CHECK(st.spin_populations()[0] == Approx(1.0));
}

TEST_CASE("thermal state reproduces the geometric distribution") {
    const HilbertSpace sp{4, 40};
    const double nbar = 0.78;
    const auto st = thermal_state(sp, -4, nbar);
    CHECK_NOTHROW(st.validate());
    CHECK(st.trace_real() == Approx(1.0).epsilon(1e-12));
    CHECK(st.mean_n() == Approx(nbar).epsilon(1e-9));  // tail below 1e-10 at n_max = 40
    const Eigen::VectorXd p = st.fock_populations();
    for (int n = 0; n + 1 < 20; ++n)
        CHECK(p[n + 1] / p[n] == Approx(nbar / (nbar + 1.0)).epsilon(1e-12));
}

TEST_CASE("thermal state with an excessive tail is rejected") {
    const HilbertSpace sp{4, 5};
    CHECK_THROWS_AS(thermal_state(sp, -4, 5.0, 1e-4), TruncationOverflow);
    CHECK_NOTHROW(thermal_state(sp, -4, 5.0, 0.5));  // explicit loose tolerance
}

TEST_CASE("ground thermal state is the pure ground state") {
    const HilbertSpace sp{4, 5};
    const auto st = thermal_state(sp, -2, 0.0);
    CHECK(st.rho(sp.index(-2, 0), sp.index(-2, 0)).real() == Approx(1.0));
    CHECK(st.mean_n() == 0.0);
}

TEST_CASE("physicality checks flag broken density matrices") {
    const HilbertSpace sp{4, 2};
    auto st = pure_state(sp, 0, 0);
    st.rho *= 1.5;  // trace off
    CHECK_THROWS_AS(st.validate(), TruncationOverflow);

    st = pure_state(sp, 0, 0);
    st.rho(0, 1) = 0.5;  // non-Hermitian
    CHECK_THROWS_AS(st.validate(), TruncationOverflow);

    st = pure_state(sp, 0, 0);
    st.rho(1, 1) = -0.2;  // negative population
    st.rho(0, 0) = 1.2;
    CHECK_THROWS_AS(st.validate(), TruncationOverflow);

    auto wrong = pure_state(HilbertSpace{4, 3}, 0, 0);
    wrong.space = sp;
    CHECK_THROWS_AS(wrong.validate(), DimensionMismatch);
}

}  // TEST_SUITE

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sshdyn/ground_state.hpp"
#include "sshdyn/observables.hpp"

using namespace sshdyn;

namespace {

ChainParams chain(int n) {
    ChainParams p;
    p.n_sites = n;
    p.n_electrons = n;
    return p;
}

Eigen::MatrixXcd random_orbitals(int n, std::uint64_t seed) {
    const auto cols = oracle::random_unitary(n, seed);
    Eigen::MatrixXcd m(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) m(r, c) = cols[c][r];
    return m;
}

} // namespace

TEST(Observables, AlternationOfIdealDimerPattern) {
    const int n = 10;
    LatticeState l = LatticeState::at_rest(n);
    const double d = 0.03;
    for (int i = 0; i < n; ++i) l.u[i] = ((i + 1) % 2 == 0 ? 1.0 : -1.0) * d;   // u_n = (-1)^n d
    const Eigen::VectorXd r = bond_length_alternation(l);
    ASSERT_EQ(r.size(), n - 2);
    for (int j = 0; j < r.size(); ++j) EXPECT_NEAR(r[j], 2.0 * d, 1e-15);
    EXPECT_NEAR(mean_bla(l), 2.0 * d, 1e-15);
    EXPECT_NEAR(central_bla(l), 2.0 * d, 1e-15);
    // rigid translation and uniform stretch carry no alternation
    for (int i = 0; i < n; ++i) l.u[i] = 0.2 + 0.01 * i;
    EXPECT_LT(bond_length_alternation(l).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Observables, AlternationHandFormula) {
    LatticeState l = LatticeState::at_rest(5);
    l.u << 0.0, 0.1, -0.05, 0.02, 0.0;
    const Eigen::VectorXd r = bond_length_alternation(l);
    // 1-based n = 2, 3, 4
    EXPECT_NEAR(r[0], (2 * 0.1 - 0.0 + 0.05) / 2.0, 1e-15);
    EXPECT_NEAR(r[1], -(2 * -0.05 - 0.1 - 0.02) / 2.0, 1e-15);
    EXPECT_NEAR(r[2], (2 * 0.02 + 0.05 - 0.0) / 2.0, 1e-15);
}

TEST(Observables, GroundStateHasNoDipoleAndHalfFilledSites) {
    const ChainParams p = chain(20);
    const LatticeState l = optimize_geometry(p);
    const auto s = diagonalize(build_tridiagonal(p, l, 0.0));
    const OrbitalSet set = make_orbital_set(s.vectors, 20, InitialElectronicState::ground_determinant);
    const Eigen::MatrixXcd rho = build_rdm(set);
    EXPECT_LT((rho.diagonal().real().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_NEAR(polarization(p, l, rho), 0.0, 1e-10);
    EXPECT_NEAR(purity(rho, 20), 1.0, 1e-12);
}

TEST(Observables, DipoleHandContraction) {
    ChainParams p = chain(4);
    LatticeState l = LatticeState::at_rest(4);
    l.u << 0.0, 0.05, -0.03, 0.0;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(4, 4);
    rho.diagonal() << 1.2, 0.9, 0.7, 1.2;
    const double a = 1.22;
    const double expect = a * (1 - 1.2) + (2 * a + 0.05) * (1 - 0.9) + (3 * a - 0.03) * (1 - 0.7) +
                          4 * a * (1 - 1.2);
    EXPECT_NEAR(polarization(p, l, rho), expect, 1e-14);
}

TEST(Observables, CumulativeDipoleOfSimpleSignals) {
    std::vector<double> t, zero, constant, wave;
    const double w = 2.0;
    for (int i = 0; i <= 20000; ++i) {
        t.push_back(0.001 * i);
        zero.push_back(0.0);
        constant.push_back(0.5);
        wave.push_back(std::sin(w * t.back()));
    }
    const double l = 23.18, tw = 10.0;
    const auto c0 = cumulative_dipole(t, zero, l, tw);
    const auto c1 = cumulative_dipole(t, constant, l, tw);
    const auto c2 = cumulative_dipole(t, wave, l, tw);
    EXPECT_EQ(c0.back(), 0.0);
    EXPECT_EQ(c1.front(), 0.0);
    EXPECT_NEAR(c1.back(), 0.5 * 20.0 / (l * tw), 1e-12);
    EXPECT_NEAR(c2.back(), (1.0 - std::cos(w * 20.0)) / (w * l * tw), 1e-8);
    // streaming form agrees
    CumulativeDipole running(l, tw);
    for (std::size_t i = 0; i < t.size(); ++i) running.add(t[i], wave[i]);
    EXPECT_NEAR(running.value(), c2.back(), 1e-14);
    EXPECT_NEAR(tail_mean(t, constant, 5.0), 0.5, 1e-15);
    EXPECT_THROW(cumulative_dipole(t, std::vector<double>(3, 0.0), l, tw), ConfigError);
}

TEST(Observables, TailMeanUsesFinalWindow) {
    std::vector<double> t{0, 1, 2, 3, 4}, v{10, 10, 1, 2, 3};
    EXPECT_NEAR(tail_mean(t, v, 2.0), 2.0, 1e-15);
}

TEST(Observables, InstantaneousOccupationsAtPreparation) {
    const ChainParams p = chain(12);
    const LatticeState l = optimize_geometry(p);
    const auto s = diagonalize(build_tridiagonal(p, l, 0.0));
    const auto gs = instantaneous_spectrum(
        p, l, make_orbital_set(s.vectors, 12, InitialElectronicState::ground_determinant), 0.0);
    for (int g = 0; g < 12; ++g) EXPECT_NEAR(gs.occupations[g], g < 6 ? 2.0 : 0.0, 1e-12);
    const auto sp = instantaneous_spectrum(
        p, l, make_orbital_set(s.vectors, 12, InitialElectronicState::homo_lumo_superposition), 0.0);
    EXPECT_NEAR(sp.occupations[5], 1.5, 1e-12);
    EXPECT_NEAR(sp.occupations[6], 0.5, 1e-12);
    EXPECT_NEAR(sp.occupations.sum(), 12.0, 1e-12);
}

TEST(Observables, InstantaneousOccupationsOfRandomOrbitals) {
    const int n = 6;
    const ChainParams p = chain(n);
    LatticeState l = LatticeState::at_rest(n);
    l.u << 0.0, 0.03, -0.02, 0.01, 0.04, 0.0;
    const double field = 0.02;
    const OrbitalSet set{random_orbitals(n, 13), superposition_gamma(n, n)};
    const auto out = instantaneous_spectrum(p, l, set, field);

    oracle::Matrix h(n, std::vector<double>(n, 0.0)), vecs;
    const Eigen::MatrixXd dense = build_electronic_hamiltonian(p, l, field);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) h[a][b] = dense(a, b);
    const auto e = oracle::jacobi_eigen(h, &vecs);
    for (int g = 0; g < n; ++g) {
        // n_g = sum_{e,e'} conj(<g|e>) gamma(e,e') <g|e'>
        std::vector<complex> proj(n, 0.0);
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < n; ++r) proj[k] += vecs[r][g] * set.orbitals(r, k);
        complex occ = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) occ += std::conj(proj[a]) * set.gamma0(a, b) * proj[b];
        EXPECT_NEAR(out.energies[g], e[g], 1e-12);
        EXPECT_NEAR(out.occupations[g], occ.real(), 1e-12);
        EXPECT_NEAR(occ.imag(), 0.0, 1e-12);
    }
}

TEST(Observables, PurityOfMixedEnsembleDrops) {
    const ChainParams p = chain(8);
    const LatticeState l = optimize_geometry(p);
    const auto s = diagonalize(build_tridiagonal(p, l, 0.0));
    const OrbitalSet a = make_orbital_set(s.vectors, 8, InitialElectronicState::ground_determinant);
    OrbitalSet b = a;
    b.orbitals = random_orbitals(8, 2).leftCols(4);
    const Eigen::MatrixXcd mixed = 0.5 * (build_rdm(a) + build_rdm(b));
    EXPECT_NEAR(purity(build_rdm(b), 8), 1.0, 1e-12);
    EXPECT_LT(purity(mixed, 8), 0.99);
}

TEST(Observables, FrameLayoutMatchesColumnHelpers) {
    const int n = 6;
    const auto cols = frame_columns(n);
    ASSERT_EQ(static_cast<int>(cols.size()), column::count(n));
    EXPECT_EQ(cols[column::mu], "mu");
    EXPECT_EQ(cols[column::cum_dipole], "cum_dipole");
    EXPECT_EQ(cols[column::r(2)], "r_2");
    EXPECT_EQ(cols[column::r(5)], "r_5");
    EXPECT_EQ(cols[column::eps(n, 1)], "eps_1");
    EXPECT_EQ(cols[column::occ(n, 6)], "occ_6");
}

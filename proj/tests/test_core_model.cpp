#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sshdyn/hamiltonian.hpp"

using namespace sshdyn;

namespace {

ChainParams chain(int n) {
    ChainParams p;
    p.n_sites = n;
    p.n_electrons = n;
    return p;
}

LatticeState random_lattice(int n, std::uint64_t seed, double scale = 0.05) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-scale, scale);
    LatticeState s = LatticeState::at_rest(n);
    for (int i = 1; i + 1 < n; ++i) s.u[i] = d(rng);
    return s;
}

Eigen::MatrixXcd to_eigen(const std::vector<std::vector<oracle::cplx>>& cols) {
    const int n = static_cast<int>(cols.size());
    Eigen::MatrixXcd m(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) m(r, c) = cols[c][r];
    return m;
}

} // namespace

TEST(CoreModel, TwoSiteLevelsAreMinusPlusT0) {
    const auto s = diagonalize(build_tridiagonal(chain(2), LatticeState::at_rest(2), 0.0));
    EXPECT_NEAR(s.energies[0], -2.5, 1e-14);
    EXPECT_NEAR(s.energies[1], 2.5, 1e-14);
}

TEST(CoreModel, FourSiteSpectrumMatchesJacobi) {
    LatticeState l = LatticeState::at_rest(4);
    l.u << 0.0, 0.02, -0.02, 0.0;
    const ChainParams p = chain(4);
    const auto s = diagonalize(build_tridiagonal(p, l, 0.0));
    oracle::Matrix vecs;
    const auto ref = oracle::jacobi_eigen(oracle::ssh_matrix({0.0, 0.02, -0.02, 0.0}, 2.5, 4.1), &vecs);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.energies[i], ref[i], 1e-12);
    for (int c = 0; c < 4; ++c) {
        double overlap = 0.0;
        for (int r = 0; r < 4; ++r) overlap += s.vectors(r, c) * vecs[r][c];
        EXPECT_NEAR(std::abs(overlap), 1.0, 1e-10);
    }
}

TEST(CoreModel, HamiltonianIsSymmetricTridiagonalWithDipoleDiagonal) {
    const ChainParams p = chain(10);
    const LatticeState l = random_lattice(10, 3);
    const double field = 0.07;
    const Eigen::MatrixXd h = build_electronic_hamiltonian(p, l, field);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            EXPECT_EQ(h(i, j), h(j, i));
            if (std::abs(i - j) > 1) EXPECT_EQ(h(i, j), 0.0);
        }
    for (int i = 0; i + 1 < 10; ++i)
        EXPECT_NEAR(h(i, i + 1), -2.5 + 4.1 * (l.u[i + 1] - l.u[i]), 1e-15);
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(h(i, i), ((i + 1) * 1.22 + l.u[i]) * field, 1e-15);
}

TEST(CoreModel, FieldFreeSpectrumIsElectronHoleSymmetric) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const int n = 8 + 2 * static_cast<int>(seed);
        const auto s = diagonalize(build_tridiagonal(chain(n), random_lattice(n, seed, 0.1), 0.0), false);
        for (int k = 0; k < n; ++k) EXPECT_NEAR(s.energies[k], -s.energies[n - 1 - k], 1e-11);
    }
}

TEST(CoreModel, RdmOfDeterminantHasTraceHermiticityAndIdempotency) {
    const ChainParams p = chain(12);
    const auto s = diagonalize(build_tridiagonal(p, random_lattice(12, 9), 0.0));
    const OrbitalSet set = make_orbital_set(s.vectors, 12, InitialElectronicState::ground_determinant);
    const Eigen::MatrixXcd rho = build_rdm(set);
    EXPECT_NEAR(rho.trace().real(), 12.0, 1e-12);
    EXPECT_LT((rho - rho.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR((rho * rho).trace().real(), 24.0, 1e-11);   // rho^2 = 2 rho
    EXPECT_EQ(set.n_orbitals(), 6);                         // compact: occupied only
}

TEST(CoreModel, SuperpositionRdmMatchesFockSpace) {
    const int n = 4;
    const auto u = oracle::random_unitary(n, 17);
    const Eigen::MatrixXcd psi = to_eigen(u);
    const OrbitalSet set{psi, superposition_gamma(n, 4)};
    set.validate(n, 4);
    const Eigen::MatrixXcd rho = build_rdm(set);

    oracle::FockState vacuum{{0u, 1.0}};
    oracle::FockState ground = vacuum;
    for (int e = 0; e < 2; ++e)
        for (int spin = 0; spin < 2; ++spin) ground = oracle::apply_orbital(ground, u[e], spin, true);
    const oracle::FockState excited =
        oracle::apply_orbital(oracle::apply_orbital(ground, u[1], 0, false), u[2], 0, true);
    const double r = 1.0 / std::sqrt(2.0);
    const oracle::FockState state = oracle::add(ground, excited, r, r);
    ASSERT_NEAR(oracle::inner(state, state).real(), 1.0, 1e-12);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const auto ref = oracle::one_body(state, a, b);
            EXPECT_NEAR(rho(a, b).real(), ref.real(), 1e-12) << a << "," << b;
            EXPECT_NEAR(rho(a, b).imag(), ref.imag(), 1e-12) << a << "," << b;
        }
}

TEST(CoreModel, EnergyPartitionMatchesDenseTrace) {
    const int n = 10;
    ChainParams p = chain(n);
    const LatticeState l = random_lattice(n, 21);
    const OrbitalSet set{to_eigen(oracle::random_unitary(n, 5)), superposition_gamma(n, n)};
    const Eigen::MatrixXcd rho = build_rdm(set);
    const double field = -0.03;
    const Eigen::MatrixXd h_hop = build_electronic_hamiltonian(p, l, 0.0);
    double hop = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) hop += h_hop(a, b) * rho(a, b).real();
    double mu = 0.0;
    for (int i = 0; i < n; ++i) mu += ((i + 1) * p.lattice_a + l.u[i]) * (1.0 - rho(i, i).real());
    double spring = 0.0;
    for (int i = 0; i + 1 < n; ++i) spring += 0.5 * p.spring_k * std::pow(l.u[i + 1] - l.u[i], 2);

    const EnergyPartition e = energy_partition(p, l, set, field);
    EXPECT_NEAR(e.e_elec, hop, 1e-11);
    EXPECT_NEAR(e.e_ph, spring, 1e-13);
    EXPECT_NEAR(e.e_field, -mu * field, 1e-11);
    EXPECT_NEAR(e.e_total, hop + spring - mu * field, 1e-11);
}

TEST(CoreModel, CenteredCoordinatesShiftOnlyByConstant) {
    ChainParams p = chain(8);
    const LatticeState l = random_lattice(8, 4);
    const Eigen::MatrixXd a = build_electronic_hamiltonian(p, l, 0.05);
    p.center_coordinates = true;
    const Eigen::MatrixXd b = build_electronic_hamiltonian(p, l, 0.05);
    const Eigen::VectorXd diff = (a - b).diagonal();
    EXPECT_LT((diff.array() - diff[0]).abs().maxCoeff(), 1e-14);
    EXPECT_NEAR(diff[0], 4.5 * 1.22 * 0.05, 1e-14);
}

TEST(CoreModel, InvalidChainsAreRejected) {
    ChainParams p = chain(7);
    EXPECT_THROW(p.validate(), ConfigError);
    p = chain(8);
    p.alpha = -1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(superposition_gamma(4, 3), ConfigError);
    EXPECT_THROW(aufbau_occupations(3, 7), ConfigError);
}

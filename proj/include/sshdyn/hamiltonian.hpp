#ifndef SSHDYN_HAMILTONIAN_HPP
#define SSHDYN_HAMILTONIAN_HPP

// Single-particle electronic Hamiltonian of the SSH chain in a uniform field,
// the one-particle reduced density matrix and the energy bookkeeping.

#include <Eigen/Dense>

#include <cmath>

#include "sshdyn/chain.hpp"

namespace sshdyn {

/// Real symmetric tridiagonal matrix: `diagonal` has N entries, `off` has
/// N-1 entries with off[i] = h(i, i+1) = h(i+1, i).
struct Tridiagonal {
    Eigen::VectorXd diagonal;
    Eigen::VectorXd off;

    Eigen::MatrixXd dense() const {
        const auto n = diagonal.size();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        h.diagonal() = diagonal;
        for (Eigen::Index i = 0; i + 1 < n; ++i) h(i, i + 1) = h(i + 1, i) = off[i];
        return h;
    }
};

/// Eigenvalues ascending; eigenvectors (if requested) as columns.
struct Spectrum {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
};

/// Hopping -t0 + alpha (u_{i+1} - u_i) on each bond and the dipole coupling
/// x_i E on the diagonal, x_i = reference position + u_i.
inline Tridiagonal build_tridiagonal(const ChainParams& params, const LatticeState& lattice,
                                     double field) {
    lattice.check_size(params.n_sites);
    const int n = params.n_sites;
    Tridiagonal h{Eigen::VectorXd::Zero(n), Eigen::VectorXd(n - 1)};
    for (int i = 0; i + 1 < n; ++i)
        h.off[i] = -params.t0 + params.alpha * (lattice.u[i + 1] - lattice.u[i]);
    if (field != 0.0)
        for (int i = 0; i < n; ++i)
            h.diagonal[i] = (params.reference_position(i) + lattice.u[i]) * field;
    return h;
}

inline Eigen::MatrixXd build_electronic_hamiltonian(const ChainParams& params,
                                                    const LatticeState& lattice, double field) {
    return build_tridiagonal(params, lattice, field).dense();
}

inline Spectrum diagonalize(const Tridiagonal& h, bool with_vectors = true) {
    if (h.diagonal.size() == 1) {
        return {h.diagonal, Eigen::MatrixXd::Identity(1, 1)};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(h.diagonal, h.off,
                              with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("tridiagonal eigensolver did not converge", 0.0);
    Spectrum s{es.eigenvalues(), {}};
    if (with_vectors) {
        s.vectors = es.eigenvectors();
        // fixed gauge: first non-negligible amplitude positive, so that
        // coherences built from different geometries share a sign convention
        for (Eigen::Index j = 0; j < s.vectors.cols(); ++j) {
            Eigen::Index i = 0;
            while (i + 1 < s.vectors.rows() && std::abs(s.vectors(i, j)) < 1e-8) ++i;
            if (s.vectors(i, j) < 0.0) s.vectors.col(j) *= -1.0;
        }
    }
    return s;
}

/// rho(n, m) = sum_{e,e'} <e|n><m|e'> gamma0(e, e'), i.e. conj(Psi) gamma0 Psi^T.
inline Eigen::MatrixXcd build_rdm(const OrbitalSet& set) {
    return set.orbitals.conjugate() * set.gamma0 * set.orbitals.transpose();
}

/// The parts of rho that enter forces and energies: the real part of the
/// bond elements rho(i, i+1) and the site populations rho(i, i).
struct BondDensity {
    Eigen::VectorXd bond;   // N-1 entries, Re rho(i, i+1)
    Eigen::VectorXd site;   // N entries, rho(i, i)
};

/// Columns of Psi gamma0^T, so that rho(n, m) = sum_e conj(Psi(n, e)) W(m, e).
template <typename Orbitals>
Eigen::MatrixXcd weighted_orbitals(const Orbitals& psi, const Eigen::MatrixXcd& gamma0,
                                   bool diagonal_gamma) {
    if (diagonal_gamma) return psi * gamma0.diagonal().asDiagonal();
    return psi * gamma0.transpose();
}

template <typename Orbitals>
BondDensity bond_density(const Orbitals& psi, const Eigen::MatrixXcd& weighted) {
    const auto n = psi.rows();
    BondDensity d;
    d.site = psi.conjugate().cwiseProduct(weighted).rowwise().sum().real();
    d.bond = psi.topRows(n - 1)
                 .conjugate()
                 .cwiseProduct(weighted.bottomRows(n - 1))
                 .rowwise()
                 .sum()
                 .real();
    return d;
}

inline BondDensity bond_density(const OrbitalSet& set) {
    return bond_density(set.orbitals,
                        weighted_orbitals(set.orbitals, set.gamma0, set.has_diagonal_gamma()));
}

/// Chain dipole |e| sum_i x_i (1 - rho_ii): ions at +1, electrons at -1.
inline double dipole_moment(const ChainParams& params, const LatticeState& lattice,
                            const Eigen::VectorXd& site_density) {
    double mu = 0.0;
    for (int i = 0; i < params.n_sites; ++i)
        mu += (params.reference_position(i) + lattice.u[i]) * (1.0 - site_density[i]);
    return mu;
}

struct EnergyPartition {
    double e_elec = 0.0;   // <H_pi + H_pi-ph>
    double e_ph = 0.0;     // nuclear kinetic + spring energy
    double e_field = 0.0;  // -(mu_e + mu_i) E
    double e_total = 0.0;
};

inline double lattice_energy(const ChainParams& params, const LatticeState& lattice) {
    const int n = params.n_sites;
    double kinetic = 0.0;
    for (int i = 0; i < n; ++i) kinetic += lattice.p[i] * lattice.p[i];
    kinetic /= 2.0 * params.effective_mass();
    double spring = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const double y = lattice.u[i + 1] - lattice.u[i];
        spring += y * y;
    }
    return kinetic + 0.5 * params.spring_k * spring;
}

inline EnergyPartition energy_partition(const ChainParams& params, const LatticeState& lattice,
                                        const BondDensity& density, double field) {
    lattice.check_size(params.n_sites);
    EnergyPartition e;
    for (int i = 0; i + 1 < params.n_sites; ++i)
        e.e_elec += (-params.t0 + params.alpha * (lattice.u[i + 1] - lattice.u[i])) * 2.0 *
                    density.bond[i];
    e.e_ph = lattice_energy(params, lattice);
    if (field != 0.0) e.e_field = -dipole_moment(params, lattice, density.site) * field;
    e.e_total = e.e_elec + e.e_ph + e.e_field;
    return e;
}

inline EnergyPartition energy_partition(const ChainParams& params, const LatticeState& lattice,
                                        const OrbitalSet& orbitals, double field) {
    if (orbitals.n_sites() != params.n_sites)
        throw ConfigError("orbital set does not match the chain size");
    return energy_partition(params, lattice, bond_density(orbitals), field);
}

} // namespace sshdyn

#endif // SSHDYN_HAMILTONIAN_HPP

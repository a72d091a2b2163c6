#ifndef SSHDYN_CHAIN_HPP
#define SSHDYN_CHAIN_HPP

// Domain types for an SSH chain: parameters, nuclear configuration and the
// single-particle orbital description of the electrons.
//
// Units throughout: eV, Angstrom, fs. The elementary charge is 1 so that a
// field in V/A times a length in A is an energy in eV.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "sshdyn/errors.hpp"

namespace sshdyn {

using complex = std::complex<double>;

inline constexpr double hbar_ev_fs = 0.6582119569;

/// Physical constants and size of an SSH chain.
///
/// Sites are 0-based internally; site `i` sits at the reference position
/// `(i + 1) * lattice_a`, which is the 1-based `n * a` of the usual
/// formulas. Defaults are the standard trans-polyacetylene set.
struct ChainParams {
    int n_sites = 20;
    int n_electrons = 20;
    double t0 = 2.5;           // eV
    double alpha = 4.1;        // eV/A
    double spring_k = 21.0;    // eV/A^2
    double mass = 1349.14;     // eV fs^2/A^2
    double lattice_a = 1.22;   // A
    double mass_multiplier = 1.0;
    double hbar = hbar_ev_fs;  // eV fs
    // Measure site positions from the chain centre instead of from the
    // origin. Shifts energies by a field-dependent constant only.
    bool center_coordinates = false;

    double effective_mass() const { return mass * mass_multiplier; }

    /// End-to-end length of the undistorted chain.
    double chain_length() const { return (n_sites - 1) * lattice_a; }

    /// Reference position of site i (0-based), without displacement.
    double reference_position(int i) const {
        const double origin = center_coordinates ? 0.5 * (n_sites + 1) : 0.0;
        return (i + 1 - origin) * lattice_a;
    }

    int n_interior() const { return n_sites - 2; }

    void validate() const {
        if (n_sites < 2 || n_sites % 2 != 0)
            throw ConfigError("n_sites must be even and >= 2, got " + std::to_string(n_sites));
        if (n_electrons <= 0 || n_electrons > 2 * n_sites)
            throw ConfigError("n_electrons must lie in (0, 2*n_sites], got " +
                              std::to_string(n_electrons));
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError(std::string(name) + " must be strictly positive");
        };
        positive(t0, "t0");
        positive(alpha, "alpha");
        positive(spring_k, "spring_k");
        positive(mass, "mass");
        positive(lattice_a, "lattice_a");
        positive(mass_multiplier, "mass_multiplier");
        positive(hbar, "hbar");
    }
};

/// Site displacements u and conjugate momenta p. The end sites are clamped.
struct LatticeState {
    Eigen::VectorXd u;
    Eigen::VectorXd p;

    static LatticeState at_rest(int n_sites) {
        return {Eigen::VectorXd::Zero(n_sites), Eigen::VectorXd::Zero(n_sites)};
    }

    int size() const { return static_cast<int>(u.size()); }

    void check_size(int n_sites) const {
        if (u.size() != n_sites || p.size() != n_sites)
            throw ConfigError("lattice has " + std::to_string(u.size()) + " sites, chain has " +
                              std::to_string(n_sites));
    }

    void clamp_ends() {
        const auto n = u.size();
        u[0] = u[n - 1] = 0.0;
        p[0] = p[n - 1] = 0.0;
    }
};

/// Time-dependent single-particle orbitals together with the spin-summed
/// initial one-particle coefficient matrix
/// gamma0(e, e') = <Psi(0)| c+_e c_e' |Psi(0)>.
///
/// Column j of `orbitals` holds the site amplitudes <n|e_j(t)>. The set may
/// be compact: orbitals whose row and column of gamma0 vanish carry no
/// weight in any observable and can be dropped, so `orbitals` is N x k with
/// k <= N.
struct OrbitalSet {
    Eigen::MatrixXcd orbitals;
    Eigen::MatrixXcd gamma0;

    int n_sites() const { return static_cast<int>(orbitals.rows()); }
    int n_orbitals() const { return static_cast<int>(orbitals.cols()); }

    bool has_diagonal_gamma() const {
        const auto k = gamma0.rows();
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b)
                if (a != b && gamma0(a, b) != complex(0.0)) return false;
        return true;
    }

    /// Largest deviation of orbitals^H orbitals from the identity.
    double orthonormality_error() const {
        const Eigen::MatrixXcd overlap = orbitals.adjoint() * orbitals;
        return (overlap - Eigen::MatrixXcd::Identity(overlap.rows(), overlap.cols()))
            .cwiseAbs()
            .maxCoeff();
    }

    void validate(int n_sites, int n_electrons, double tol = 1e-8) const {
        if (orbitals.rows() != n_sites)
            throw ConfigError("orbital columns must have one amplitude per site");
        if (gamma0.rows() != orbitals.cols() || gamma0.cols() != orbitals.cols())
            throw ConfigError("gamma0 must be square with one row per orbital");
        if ((gamma0 - gamma0.adjoint()).cwiseAbs().maxCoeff() > tol)
            throw ConfigError("gamma0 must be Hermitian");
        if (std::abs(gamma0.trace().real() - n_electrons) > tol)
            throw ConfigError("trace of gamma0 must equal the electron count");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma0, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol || es.eigenvalues().maxCoeff() > 2.0 + tol)
            throw ConfigError("gamma0 eigenvalues must lie in [0, 2]");
        if (orthonormality_error() > tol) throw ConfigError("orbitals are not orthonormal");
    }
};

/// Aufbau filling of `n_levels` spin-degenerate levels: 2 per level from the
/// bottom, a single electron in the last one for odd counts.
inline Eigen::VectorXd aufbau_occupations(int n_levels, int n_electrons) {
    if (n_electrons < 0 || n_electrons > 2 * n_levels)
        throw ConfigError("cannot place " + std::to_string(n_electrons) + " electrons in " +
                          std::to_string(n_levels) + " levels");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n_levels);
    int left = n_electrons;
    for (int i = 0; i < n_levels && left > 0; ++i) {
        f[i] = left >= 2 ? 2.0 : 1.0;
        left -= static_cast<int>(f[i]);
    }
    return f;
}

/// Initial electronic state to build from a set of eigenorbitals.
enum class InitialElectronicState { ground_determinant, homo_lumo_superposition };

/// One-particle coefficients of (|G> + |E>)/sqrt(2), |E> = c+_{L,s} c_{H,s}|G>,
/// for a closed-shell |G>. Only the HOMO/LUMO block differs from the
/// ground filling:
///
///   <c+_H c_H> = 1 + 1/2,   <c+_L c_L> = 1/2,
///   <c+_H c_L> = <c+_L c_H> = (1/2) <G| c+_{H,s} c_{L,s} |E> = 1/2,
///
/// using c+_H c_L c+_L c_H |G> = |G> for the promoted spin.
inline Eigen::MatrixXcd superposition_gamma(int n_levels, int n_electrons) {
    if (n_electrons % 2 != 0 || n_electrons / 2 >= n_levels)
        throw ConfigError("HOMO-LUMO superposition needs a closed shell with an empty LUMO");
    Eigen::MatrixXcd g = aufbau_occupations(n_levels, n_electrons).cast<complex>().asDiagonal();
    const int homo = n_electrons / 2 - 1;
    const int lumo = homo + 1;
    g(homo, homo) = 1.5;
    g(lumo, lumo) = 0.5;
    g(homo, lumo) = 0.5;
    g(lumo, homo) = 0.5;
    return g;
}

/// Builds an OrbitalSet from real eigenvectors (columns ascending in energy).
/// With `compact`, only the leading orbitals that carry weight are kept.
inline OrbitalSet make_orbital_set(const Eigen::MatrixXd& eigenvectors, int n_electrons,
                                   InitialElectronicState kind, bool compact = true) {
    const int n = static_cast<int>(eigenvectors.cols());
    Eigen::MatrixXcd gamma = kind == InitialElectronicState::ground_determinant
                                 ? Eigen::MatrixXcd(aufbau_occupations(n, n_electrons)
                                                        .cast<complex>()
                                                        .asDiagonal())
                                 : superposition_gamma(n, n_electrons);
    int keep = n;
    if (compact) {
        keep = 0;
        for (int j = 0; j < n; ++j)
            if (gamma.row(j).cwiseAbs().maxCoeff() > 0.0 || gamma.col(j).cwiseAbs().maxCoeff() > 0.0)
                keep = j + 1;
    }
    return {eigenvectors.leftCols(keep).cast<complex>(), gamma.topLeftCorner(keep, keep)};
}

} // namespace sshdyn

#endif // SSHDYN_CHAIN_HPP

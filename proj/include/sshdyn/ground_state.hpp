#ifndef SSHDYN_GROUND_STATE_HPP
#define SSHDYN_GROUND_STATE_HPP

// Ground-state nuclear problem: self-consistent optimal geometry, harmonic
// normal modes on the ground Born-Oppenheimer surface and Monte Carlo samples
// of the corresponding nuclear Wigner distribution.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sshdyn/chain.hpp"
#include "sshdyn/hamiltonian.hpp"

namespace sshdyn {

/// Field-free ground-determinant quantities at a fixed geometry.
struct BornOppenheimerPoint {
    double energy = 0.0;      // electronic band energy + spring energy
    Eigen::VectorXd force;    // -dE/du, zero at the clamped ends
    Eigen::VectorXd bond;     // Re rho(i, i+1)
    Spectrum spectrum;
};

inline BornOppenheimerPoint born_oppenheimer(const ChainParams& params, const Eigen::VectorXd& u) {
    const int n = params.n_sites;
    LatticeState lattice{u, Eigen::VectorXd::Zero(n)};
    BornOppenheimerPoint bo;
    bo.spectrum = diagonalize(build_tridiagonal(params, lattice, 0.0));
    const Eigen::VectorXd f = aufbau_occupations(n, params.n_electrons);
    const auto& c = bo.spectrum.vectors;
    // rho(i, j) = sum_e f_e c(i, e) c(j, e), real for a field-free chain
    bo.bond = Eigen::VectorXd(n - 1);
    for (int i = 0; i + 1 < n; ++i)
        bo.bond[i] = (c.row(i).transpose().cwiseProduct(c.row(i + 1).transpose())).dot(f);
    bo.energy = f.dot(bo.spectrum.energies) + lattice_energy(params, lattice);
    bo.force = Eigen::VectorXd::Zero(n);
    for (int i = 1; i + 1 < n; ++i)
        bo.force[i] = -params.spring_k * (2.0 * u[i] - u[i + 1] - u[i - 1]) +
                      2.0 * params.alpha * (bo.bond[i] - bo.bond[i - 1]);
    return bo;
}

struct GeometryOptions {
    double mixing = 0.5;
    double bond_tolerance = 1e-10;   // A, on max |delta y|
    int max_iterations = 10000;
    double initial_dimerization = 0.1;  // A, starting bond alternation
};

struct GeometryReport {
    LatticeState lattice;
    int iterations = 0;
    double energy = 0.0;
    double max_force = 0.0;
    std::vector<double> energy_history;
};

/// Fixed-point iteration on the bond variables y_i = u_{i+1} - u_i. At a
/// stationary point alpha * 2 Re rho(i, i+1) + K y_i is the same on every bond
/// (the common value is the Lagrange multiplier of sum_i y_i = 0), so the
/// update is y <- -(2 alpha / K) Re rho + c with c restoring sum_i y_i = 0,
/// linearly mixed with the previous iterate. The start pattern has short
/// (double) bonds at both ends.
inline GeometryReport optimize_geometry_report(const ChainParams& params,
                                               const GeometryOptions& opt = {}) {
    params.validate();
    const int n = params.n_sites;
    const int nb = n - 1;
    Eigen::VectorXd y(nb);
    for (int i = 0; i < nb; ++i) y[i] = (i % 2 == 0 ? -1.0 : 1.0) * opt.initial_dimerization;
    y.array() -= y.mean();

    auto to_sites = [n](const Eigen::VectorXd& bonds) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        for (int i = 0; i + 1 < n; ++i) u[i + 1] = u[i] + bonds[i];
        u[n - 1] = 0.0;
        return u;
    };

    GeometryReport report;
    double change = 0.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const auto bo = born_oppenheimer(params, to_sites(y));
        report.energy_history.push_back(bo.energy);
        Eigen::VectorXd target = -(2.0 * params.alpha / params.spring_k) * bo.bond;
        target.array() -= target.mean();
        const Eigen::VectorXd next = (1.0 - opt.mixing) * y + opt.mixing * target;
        change = (next - y).cwiseAbs().maxCoeff();
        y = next;
        if (change < opt.bond_tolerance) {
            report.iterations = it;
            report.lattice = {to_sites(y), Eigen::VectorXd::Zero(n)};
            const auto final_point = born_oppenheimer(params, report.lattice.u);
            report.energy = final_point.energy;
            report.max_force = final_point.force.cwiseAbs().maxCoeff();
            return report;
        }
    }
    throw ConvergenceError("geometry optimisation did not converge in " +
                               std::to_string(opt.max_iterations) + " iterations",
                           change);
}

inline LatticeState optimize_geometry(const ChainParams& params, const GeometryOptions& opt = {}) {
    return optimize_geometry_report(params, opt).lattice;
}

/// Harmonic modes over the N-2 interior sites. `modes` columns are
/// orthonormal displacement patterns; with equal site masses the
/// mass-weighted and plain patterns coincide.
struct NormalModeBasis {
    Eigen::VectorXd frequencies;   // omega_j, 1/fs, ascending
    Eigen::MatrixXd modes;         // (N-2) x (N-2)
    Eigen::VectorXd reference_u;   // optimal geometry, N entries
    double mass = 0.0;             // effective site mass used for the modes
    double hbar = hbar_ev_fs;

    int n_modes() const { return static_cast<int>(frequencies.size()); }

    double zero_point_energy() const { return 0.5 * hbar * frequencies.sum(); }

    /// Hessian of the BO surface reconstructed from the modes, eV/A^2.
    Eigen::MatrixXd hessian() const {
        return mass * modes * frequencies.array().square().matrix().asDiagonal() *
               modes.transpose();
    }
};

/// Central finite differences of the BO force over the interior coordinates.
inline Eigen::MatrixXd born_oppenheimer_hessian(const ChainParams& params, const Eigen::VectorXd& u,
                                                double step = 1e-4) {
    const int m = params.n_interior();
    Eigen::MatrixXd h(m, m);
    Eigen::VectorXd displaced = u;
    for (int j = 0; j < m; ++j) {
        displaced[j + 1] = u[j + 1] + step;
        const Eigen::VectorXd plus = born_oppenheimer(params, displaced).force;
        displaced[j + 1] = u[j + 1] - step;
        const Eigen::VectorXd minus = born_oppenheimer(params, displaced).force;
        displaced[j + 1] = u[j + 1];
        h.col(j) = -(plus.segment(1, m) - minus.segment(1, m)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

inline NormalModeBasis normal_modes(const ChainParams& params, const LatticeState& optimal,
                                    double step = 1e-4) {
    params.validate();
    optimal.check_size(params.n_sites);
    if (params.n_sites < 3) throw ConfigError("normal modes need at least one interior site");
    const double mass = params.effective_mass();
    const Eigen::MatrixXd dynamical = born_oppenheimer_hessian(params, optimal.u, step) / mass;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dynamical);
    const double lowest = es.eigenvalues().minCoeff();
    if (!(lowest > 0.0))
        throw ConvergenceError("Hessian has a non-positive eigenvalue; the geometry is not a "
                               "minimum",
                               lowest);
    NormalModeBasis basis;
    basis.frequencies = es.eigenvalues().cwiseSqrt();
    basis.modes = es.eigenvectors();
    basis.reference_u = optimal.u;
    basis.mass = mass;
    basis.hbar = params.hbar;
    return basis;
}

/// Independent generator for trajectory `index`: the seed sequence mixes the
/// ensemble seed with the index, so sample i does not depend on how many
/// samples precede it or which worker draws it.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32), 0x5348u};
    return std::mt19937_64(seq);
}

/// One draw of the ground-state Wigner distribution: per mode
/// Q_j ~ N(0, hbar / (2 M w_j)), P_j ~ N(0, hbar M w_j / 2).
inline LatticeState sample_wigner_one(const NormalModeBasis& basis, std::uint64_t seed,
                                      std::uint64_t index) {
    auto rng = substream(seed, index);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int m = basis.n_modes();
    Eigen::VectorXd q(m), p(m);
    for (int j = 0; j < m; ++j) {
        const double w = basis.frequencies[j];
        q[j] = gauss(rng) * std::sqrt(basis.hbar / (2.0 * basis.mass * w));
        p[j] = gauss(rng) * std::sqrt(basis.hbar * basis.mass * w / 2.0);
    }
    LatticeState s = LatticeState::at_rest(m + 2);
    s.u = basis.reference_u;
    s.u.segment(1, m) += basis.modes * q;
    s.p.segment(1, m) = basis.modes * p;
    s.clamp_ends();
    return s;
}

inline std::vector<LatticeState> sample_wigner(const NormalModeBasis& basis, int count,
                                               std::uint64_t seed, std::uint64_t first_index = 0) {
    if (count < 1) throw ConfigError("sample count must be >= 1");
    std::vector<LatticeState> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(sample_wigner_one(basis, seed, first_index + i));
    return out;
}

/// Normal-mode coordinates of a configuration relative to the reference.
inline Eigen::VectorXd mode_coordinates(const NormalModeBasis& basis, const Eigen::VectorXd& u) {
    return basis.modes.transpose() * (u - basis.reference_u).segment(1, basis.n_modes());
}

inline void write_geometry_csv(std::ostream& os, const ChainParams& params,
                               const LatticeState& lattice) {
    os << "site,x,u,bond_length,r\n";
    os.precision(17);
    const int n = params.n_sites;
    for (int i = 0; i < n; ++i) {
        os << i + 1 << ',' << params.reference_position(i) + lattice.u[i] << ',' << lattice.u[i]
           << ',';
        if (i + 1 < n) os << params.lattice_a + lattice.u[i + 1] - lattice.u[i];
        os << ',';
        if (i > 0 && i + 1 < n) {
            const double sign = (i + 1) % 2 == 0 ? 1.0 : -1.0;
            os << sign * (2.0 * lattice.u[i] - lattice.u[i - 1] - lattice.u[i + 1]) / 2.0;
        }
        os << '\n';
    }
}

inline void write_modes_csv(std::ostream& os, const NormalModeBasis& basis) {
    const int m = basis.n_modes();
    os << "mode,omega,period_fs,energy_ev";
    for (int i = 0; i < m; ++i) os << ",site" << i + 2;
    os << '\n';
    os.precision(17);
    for (int j = 0; j < m; ++j) {
        const double w = basis.frequencies[j];
        os << j + 1 << ',' << w << ',' << 2.0 * std::numbers::pi / w << ',' << basis.hbar * w;
        for (int i = 0; i < m; ++i) os << ',' << basis.modes(i, j);
        os << '\n';
    }
}

} // namespace sshdyn

#endif // SSHDYN_GROUND_STATE_HPP

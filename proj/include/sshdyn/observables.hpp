#ifndef SSHDYN_OBSERVABLES_HPP
#define SSHDYN_OBSERVABLES_HPP

// Geometric, spectroscopic and coherence observables of a trajectory.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sshdyn/chain.hpp"
#include "sshdyn/hamiltonian.hpp"
#include "sshdyn/laser.hpp"
#include "sshdyn/propagator.hpp"

namespace sshdyn {

/// r_n = (-1)^n (2 u_n - u_{n-1} - u_{n+1}) / 2 for the interior sites
/// n = 2..N-1 (1-based); entry j of the result is site n = j + 2.
inline Eigen::VectorXd bond_length_alternation(const LatticeState& lattice) {
    const int n = lattice.size();
    Eigen::VectorXd r(std::max(n - 2, 0));
    for (int i = 1; i + 1 < n; ++i) {
        const double sign = (i + 1) % 2 == 0 ? 1.0 : -1.0;
        r[i - 1] = sign * (2.0 * lattice.u[i] - lattice.u[i - 1] - lattice.u[i + 1]) / 2.0;
    }
    return r;
}

/// Mean of r_n over the interior sites.
inline double mean_bla(const LatticeState& lattice) {
    const Eigen::VectorXd r = bond_length_alternation(lattice);
    return r.size() > 0 ? r.mean() : 0.0;
}

/// Mean of r_n over the central half of the chain, away from the stiffer
/// end regions.
inline double central_bla(const LatticeState& lattice) {
    const int n = lattice.size();
    const int first = n / 4;           // 0-based site index
    const int last = n - 1 - n / 4;
    const Eigen::VectorXd r = bond_length_alternation(lattice);
    double sum = 0.0;
    int count = 0;
    for (int i = std::max(first, 1); i <= std::min(last, n - 2); ++i) {
        sum += r[i - 1];
        ++count;
    }
    return count > 0 ? sum / count : 0.0;
}

/// mu = |e| sum_n x_n (1 - rho_nn).
inline double polarization(const ChainParams& params, const LatticeState& lattice,
                           const Eigen::MatrixXcd& rdm) {
    return dipole_moment(params, lattice, rdm.diagonal().real());
}

/// C(t) = 1/(L T_W) int_0^t mu dt', trapezoidal on the given grid. The first
/// entry is zero.
inline std::vector<double> cumulative_dipole(std::span<const double> times,
                                             std::span<const double> mu, double chain_length,
                                             double pulse_width) {
    if (times.size() != mu.size()) throw ConfigError("time and dipole series differ in length");
    std::vector<double> c(times.size(), 0.0);
    const double norm = 1.0 / (chain_length * pulse_width);
    for (std::size_t i = 1; i < times.size(); ++i)
        c[i] = c[i - 1] + 0.5 * (mu[i] + mu[i - 1]) * (times[i] - times[i - 1]) * norm;
    return c;
}

/// Running form of cumulative_dipole for streaming snapshots.
class CumulativeDipole {
public:
    CumulativeDipole(double chain_length, double pulse_width)
        : norm_(1.0 / (chain_length * pulse_width)) {}

    double add(double t, double mu) {
        if (started_) value_ += 0.5 * (mu + last_mu_) * (t - last_t_) * norm_;
        started_ = true;
        last_t_ = t;
        last_mu_ = mu;
        return value_;
    }

    double value() const { return value_; }

private:
    double norm_;
    bool started_ = false;
    double last_t_ = 0.0;
    double last_mu_ = 0.0;
    double value_ = 0.0;
};

/// Mean of `values` over samples with time >= times.back() - window.
inline double tail_mean(std::span<const double> times, std::span<const double> values,
                        double window) {
    if (times.empty()) return 0.0;
    const double start = times.back() - window;
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= start - 1e-9) {
            sum += values[i];
            ++count;
        }
    return sum / count;
}

struct InstantaneousSpectrum {
    Eigen::VectorXd energies;     // ascending
    Eigen::VectorXd occupations;  // n_gamma in [0, 2]
};

/// Eigenstates |g> of the instantaneous Hamiltonian and their populations
/// n_g = sum_{e,e'} conj(<g|e>) gamma0(e, e') <g|e'>.
inline InstantaneousSpectrum instantaneous_spectrum(const ChainParams& params,
                                                    const LatticeState& lattice,
                                                    const OrbitalSet& orbitals, double field) {
    const Spectrum s = diagonalize(build_tridiagonal(params, lattice, field));
    const Eigen::MatrixXcd overlap = s.vectors.transpose().cast<complex>() * orbitals.orbitals;
    InstantaneousSpectrum out;
    out.energies = s.energies;
    if (orbitals.has_diagonal_gamma()) {
        out.occupations = overlap.cwiseAbs2() * orbitals.gamma0.diagonal().real();
    } else {
        out.occupations = (overlap.conjugate() * orbitals.gamma0)
                              .cwiseProduct(overlap)
                              .rowwise()
                              .sum()
                              .real();
    }
    return out;
}

/// Tr(rho^2) / (2 n_electrons) of an (ensemble-averaged) density matrix.
inline double purity(const Eigen::MatrixXcd& mean_rdm, int n_electrons) {
    return mean_rdm.cwiseAbs2().sum() / (2.0 * n_electrons);
}

/// Everything recorded for one trajectory at one instant.
struct ObservableFrame {
    double t = 0.0;
    EnergyPartition energies;
    double mu = 0.0;
    double cum_dipole = 0.0;
    double bla_mean = 0.0;
    double bla_central = 0.0;
    double gap = 0.0;            // LUMO - HOMO of the instantaneous spectrum
    Eigen::VectorXd bla;         // r_n, n = 2..N-1
    Eigen::VectorXd inst_energies;
    Eigen::VectorXd inst_occupations;
};

inline ObservableFrame make_frame(const ChainParams& params, const std::optional<PulseSpec>& pulse,
                                  const TrajectoryState& state) {
    const double field = field_at(pulse, state.t);
    const BondDensity density = bond_density(state.orbitals);
    ObservableFrame f;
    f.t = state.t;
    f.energies = energy_partition(params, state.lattice, density, field);
    f.mu = dipole_moment(params, state.lattice, density.site);
    f.bla = bond_length_alternation(state.lattice);
    f.bla_mean = f.bla.size() > 0 ? f.bla.mean() : 0.0;
    f.bla_central = central_bla(state.lattice);
    const auto spectrum = instantaneous_spectrum(params, state.lattice, state.orbitals, field);
    f.inst_energies = spectrum.energies;
    f.inst_occupations = spectrum.occupations;
    const int homo = (params.n_electrons + 1) / 2 - 1;
    if (homo >= 0 && homo + 1 < params.n_sites)
        f.gap = spectrum.energies[homo + 1] - spectrum.energies[homo];
    return f;
}

/// Flat column layout of a frame, shared by per-trajectory and aggregate CSV.
inline std::vector<std::string> frame_columns(int n_sites) {
    std::vector<std::string> cols{"e_elec", "e_ph",     "e_field",  "e_total",     "mu",
                                  "cum_dipole", "bla_mean", "bla_central", "gap"};
    for (int n = 2; n < n_sites; ++n) cols.push_back("r_" + std::to_string(n));
    for (int g = 1; g <= n_sites; ++g) cols.push_back("eps_" + std::to_string(g));
    for (int g = 1; g <= n_sites; ++g) cols.push_back("occ_" + std::to_string(g));
    return cols;
}

inline std::vector<double> frame_values(const ObservableFrame& f) {
    std::vector<double> v{f.energies.e_elec, f.energies.e_ph, f.energies.e_field,
                          f.energies.e_total, f.mu, f.cum_dipole, f.bla_mean, f.bla_central, f.gap};
    v.insert(v.end(), f.bla.data(), f.bla.data() + f.bla.size());
    v.insert(v.end(), f.inst_energies.data(), f.inst_energies.data() + f.inst_energies.size());
    v.insert(v.end(), f.inst_occupations.data(),
             f.inst_occupations.data() + f.inst_occupations.size());
    return v;
}

/// Column index helpers for the layout above.
namespace column {
inline constexpr int e_elec = 0;
inline constexpr int e_ph = 1;
inline constexpr int e_field = 2;
inline constexpr int e_total = 3;
inline constexpr int mu = 4;
inline constexpr int cum_dipole = 5;
inline constexpr int bla_mean = 6;
inline constexpr int bla_central = 7;
inline constexpr int gap = 8;
inline constexpr int first_bla = 9;
inline int r(int n) { return first_bla + n - 2; }                    // 1-based site n
inline int eps(int n_sites, int g) { return first_bla + n_sites - 2 + g - 1; }
inline int occ(int n_sites, int g) { return first_bla + 2 * n_sites - 2 + g - 1; }
inline int count(int n_sites) { return first_bla + 3 * n_sites - 2; }
} // namespace column

} // namespace sshdyn

#endif // SSHDYN_OBSERVABLES_HPP

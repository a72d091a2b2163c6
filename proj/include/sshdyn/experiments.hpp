#ifndef SSHDYN_EXPERIMENTS_HPP
#define SSHDYN_EXPERIMENTS_HPP

// Experiment drivers built on run_ensemble: band statistics of the sampled
// ground state, polarization dephasing of superposition states and
// one-dimensional control scans of C(infinity).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sshdyn/ensemble.hpp"
#include "sshdyn/ground_state.hpp"
#include "sshdyn/stats.hpp"

namespace sshdyn {

/// Mean and spread of each field-free single-particle level over Wigner
/// samples.
struct BandStatistics {
    Eigen::VectorXd reference;   // spectrum at the optimal geometry
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    // kinetic + Born-Oppenheimer energy of each sample above the optimum;
    // harmonic expectation is the zero-point energy
    Moments classical_excess;
    int count = 0;
};

inline BandStatistics band_statistics(const ChainParams& params, const NormalModeBasis& basis,
                                      int count, std::uint64_t seed) {
    BandStatistics out;
    LatticeState optimal = LatticeState::at_rest(params.n_sites);
    optimal.u = basis.reference_u;
    out.reference = diagonalize(build_tridiagonal(params, optimal, 0.0), false).energies;
    const double e_opt = born_oppenheimer(params, optimal.u).energy;
    std::vector<Moments> bands(params.n_sites);
    for (int i = 0; i < count; ++i) {
        const LatticeState s = sample_wigner_one(basis, seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd e = diagonalize(build_tridiagonal(params, s, 0.0), false).energies;
        for (int g = 0; g < params.n_sites; ++g) bands[g].add(e[g]);
        const double kinetic = s.p.squaredNorm() / (2.0 * params.effective_mass());
        out.classical_excess.add(born_oppenheimer(params, s.u).energy + kinetic - e_opt);
    }
    out.mean.resize(params.n_sites);
    out.stddev.resize(params.n_sites);
    for (int g = 0; g < params.n_sites; ++g) {
        out.mean[g] = bands[g].mean();
        out.stddev[g] = bands[g].stddev();
    }
    out.count = count;
    return out;
}

/// Local maxima of |values| (strict on the left, non-strict on the right).
inline std::vector<std::size_t> peak_indices(const std::vector<double>& values) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        const double a = std::abs(values[i - 1]), b = std::abs(values[i]), c = std::abs(values[i + 1]);
        if (b > a && b >= c) out.push_back(i);
    }
    return out;
}

struct DephasingResult {
    int n_sites = 0;
    std::vector<double> times;
    std::vector<double> ratio;            // <mu(t)> / <mu(0)>
    std::vector<double> ratio_error;
    std::vector<double> envelope_times;   // peaks of |ratio|
    std::vector<double> envelope;
    double decay_time = 0.0;              // fitted exponential time constant
    double one_over_e_time = 0.0;         // first envelope crossing of 1/e, or -1
    double recurrence_spacing = 0.0;      // mean spacing of envelope maxima, or 0
    int completed = 0;
};

struct DephasingOptions {
    int size = 1000;
    std::uint64_t seed = 1;
    double t_end = 100.0;
    double snapshot_dt = 0.05;
    double fit_window = 10.0;       // initial-decay window for the exponential fit
    double recurrence_window = 10.0;  // fs, half-width of the recurrence search
    InitialLattice lattice = InitialLattice::wigner;
    IntegratorOptions integrator;
    int workers = 1;
};

/// Exponential fit ln|peak| = a - t/tau to the monotonically decaying
/// envelope peaks within the first `window` fs, the 1/e crossing of the envelope, and the spacing of
/// envelope maxima (recurrences) after the initial decay.
inline void analyse_dephasing(DephasingResult& r, double window, double smoothing) {
    r.envelope_times.clear();
    r.envelope.clear();
    for (std::size_t i : peak_indices(r.ratio)) {
        r.envelope_times.push_back(r.times[i]);
        r.envelope.push_back(std::abs(r.ratio[i]));
    }
    std::vector<double> ft, fl;
    ft.push_back(0.0);
    fl.push_back(0.0);   // |ratio(0)| = 1
    // initial decay: peaks up to the first envelope minimum
    for (std::size_t i = 0; i < r.envelope.size() && r.envelope_times[i] <= window; ++i) {
        ft.push_back(r.envelope_times[i]);
        fl.push_back(std::log(r.envelope[i]));
        if (i + 1 < r.envelope.size() && r.envelope[i + 1] > r.envelope[i]) break;
    }
    r.decay_time = 0.0;
    if (ft.size() >= 2) {
        const auto [a, b] = linear_fit(ft, fl);
        (void)a;
        r.decay_time = b < 0.0 ? -1.0 / b : 0.0;
    }
    r.one_over_e_time = -1.0;
    double prev_t = 0.0, prev_v = 1.0;
    for (std::size_t i = 0; i < r.envelope.size(); ++i) {
        const double v = r.envelope[i];
        if (v < std::exp(-1.0)) {
            const double target = std::exp(-1.0);
            r.one_over_e_time =
                prev_t + (prev_v - target) / (prev_v - v) * (r.envelope_times[i] - prev_t);
            break;
        }
        prev_t = r.envelope_times[i];
        prev_v = v;
    }
    // recurrences: envelope peaks that dominate a +-smoothing neighbourhood
    // and stand out against its median
    std::vector<double> maxima;
    for (std::size_t i = 0; i < r.envelope.size(); ++i) {
        const double t = r.envelope_times[i];
        if (t < smoothing || t + smoothing > r.times.back()) continue;
        bool dominant = true;
        std::vector<double> neighbourhood;
        for (std::size_t j = 0; j < r.envelope.size(); ++j)
            if (std::abs(r.envelope_times[j] - t) <= smoothing) {
                neighbourhood.push_back(r.envelope[j]);
                if (r.envelope[j] > r.envelope[i]) dominant = false;
            }
        if (!dominant) continue;
        auto mid = neighbourhood.begin() + static_cast<std::ptrdiff_t>(neighbourhood.size() / 2);
        std::nth_element(neighbourhood.begin(), mid, neighbourhood.end());
        if (r.envelope[i] >= 2.0 * *mid) maxima.push_back(t);
    }
    r.recurrence_spacing = 0.0;
    if (maxima.size() >= 2)
        r.recurrence_spacing = (maxima.back() - maxima.front()) / double(maxima.size() - 1);
}

/// Field-free evolution of HOMO-LUMO superposition states for one chain
/// length. `chain` supplies everything but the size; the chain is neutral.
inline DephasingResult dephasing_experiment(ChainParams chain, int n_sites,
                                            const DephasingOptions& opt) {
    chain.n_sites = n_sites;
    chain.n_electrons = n_sites;
    EnsembleSpec spec;
    spec.size = opt.size;
    spec.seed = opt.seed;
    spec.electronic = InitialElectronicState::homo_lumo_superposition;
    spec.lattice = opt.lattice;
    spec.chain = chain;
    spec.t_end = opt.t_end;
    spec.snapshot_dt = opt.snapshot_dt;
    spec.rdm_dt = std::max(spec.snapshot_dt, std::round(1.0 / spec.snapshot_dt) * spec.snapshot_dt);
    spec.asymptotic_window = std::min(opt.t_end, 100.0);
    spec.integrator = opt.integrator;
    RunOptions run;
    run.workers = opt.workers;
    const EnsembleStats st = run_ensemble(spec, run);
    DephasingResult r;
    r.n_sites = n_sites;
    r.times = st.times;
    r.completed = st.completed;
    const auto mu = st.series(column::mu);
    const auto se = st.error_series(column::mu);
    r.ratio.resize(mu.size());
    r.ratio_error.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        r.ratio[i] = mu[i] / mu[0];
        r.ratio_error[i] = se[i] / std::abs(mu[0]);
    }
    analyse_dephasing(r, opt.fit_window, opt.recurrence_window);
    return r;
}

enum class ScanAxis { photon_energy, relative_phase };

struct ScanPoint {
    double value = 0.0;
    double c_infinity = 0.0;
    double c_infinity_error = 0.0;
    double absorbed = 0.0;
    double absorbed_error = 0.0;
    int completed = 0;
};

/// One ensemble per grid value of `axis`, all other settings from `base`.
inline std::vector<ScanPoint> scan(const EnsembleSpec& base, ScanAxis axis,
                                   const std::vector<double>& grid, const RunOptions& run = {},
                                   const std::function<void(const ScanPoint&)>& progress = {}) {
    if (!base.pulse) throw ConfigError("a control scan needs a pulse");
    std::vector<ScanPoint> out;
    for (double value : grid) {
        EnsembleSpec spec = base;
        if (axis == ScanAxis::photon_energy)
            spec.pulse->set_photon_energy(value, spec.chain.hbar);
        else
            spec.pulse->set_relative_phase(value);
        RunOptions r = run;
        r.directory.reset();
        const EnsembleStats st = run_ensemble(spec, r);
        ScanPoint p{value,
                    st.c_infinity.mean(),
                    st.c_infinity.standard_error(),
                    st.absorbed_energy.mean(),
                    st.absorbed_energy.standard_error(),
                    st.completed};
        if (progress) progress(p);
        out.push_back(p);
    }
    return out;
}

inline void write_scan_csv(std::ostream& os, ScanAxis axis, const std::vector<ScanPoint>& points) {
    CsvWriter csv(os);
    csv.header(std::vector<std::string>{axis == ScanAxis::photon_energy ? "photon_ev" : "relative_phase",
                                        "c_infinity", "c_infinity_se", "absorbed_ev",
                                        "absorbed_se", "completed"});
    for (const auto& p : points)
        csv.row(std::vector<double>{p.value, p.c_infinity, p.c_infinity_error, p.absorbed,
                                    p.absorbed_error, double(p.completed)});
}

inline void write_dephasing_csv(std::ostream& os, const DephasingResult& r) {
    CsvWriter csv(os);
    csv.header(std::vector<std::string>{"t", "mu_ratio", "mu_ratio_se"});
    for (std::size_t i = 0; i < r.times.size(); ++i)
        csv.row(std::vector<double>{r.times[i], r.ratio[i], r.ratio_error[i]});
}

} // namespace sshdyn

#endif // SSHDYN_EXPERIMENTS_HPP

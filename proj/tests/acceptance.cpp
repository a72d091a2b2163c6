// End-to-end acceptance run. Prints the measured value of every sub-check
// and one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//
//   acceptance                 run everything
//   acceptance geometry modes  run the named criteria only

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "sshdyn/ensemble.hpp"
#include "sshdyn/experiments.hpp"
#include "sshdyn/ground_state.hpp"
#include "sshdyn/observables.hpp"
#include "sshdyn/propagator.hpp"

using namespace sshdyn;

namespace {

// initial single-particle spectrum of the neutral 20-site chain: energy at
// the optimal geometry, ensemble mean and ensemble spread, levels 1..10
// (levels 11..20 follow by electron-hole symmetry)
constexpr double table_eps0[10] = {-4.893, -4.735, -4.479, -4.131, -3.701,
                                   -3.199, -2.640, -2.045, -1.445, -0.914};
constexpr double table_mean[10] = {-4.930, -4.755, -4.491, -4.141, -3.708,
                                   -3.206, -2.646, -2.049, -1.444, -0.883};
constexpr double table_sigma[10] = {0.034, 0.039, 0.046, 0.053, 0.061,
                                    0.068, 0.079, 0.091, 0.107, 0.130};

double eps0(int i) { return i < 10 ? table_eps0[i] : -table_eps0[19 - i]; }
double band_mean(int i) { return i < 10 ? table_mean[i] : -table_mean[19 - i]; }
double band_sigma(int i) { return i < 10 ? table_sigma[i] : table_sigma[19 - i]; }

struct Criterion {
    std::string name;
    bool ok = true;

    void check(const std::string& what, double value, double lo, double hi) {
        const bool pass = value >= lo && value <= hi;
        ok = ok && pass;
        std::printf("    %-58s %14.6g   [%g, %g]  %s\n", what.c_str(), value, lo, hi,
                    pass ? "ok" : "MISS");
        std::fflush(stdout);
    }
    void near(const std::string& what, double value, double target, double tol) {
        check(what, value, target - tol, target + tol);
    }
    void below(const std::string& what, double value, double limit) {
        check(what, value, -std::numeric_limits<double>::infinity(), limit);
    }
    void note(const std::string& text) const {
        std::printf("    %s\n", text.c_str());
        std::fflush(stdout);
    }
};

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

ChainParams chain20() { return ChainParams{}; }

const LatticeState& optimal20() {
    static const LatticeState l = optimize_geometry(chain20());
    return l;
}

const NormalModeBasis& modes20() {
    static const NormalModeBasis b = normal_modes(chain20(), optimal20());
    return b;
}

EnsembleStats run(const EnsembleSpec& spec) {
    RunOptions o;
    o.workers = workers();
    return run_ensemble(spec, o);
}

/// Mean of `col` over snapshots with t >= from.
double window_mean(const EnsembleStats& st, int col, double from) {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < st.times.size(); ++i)
        if (st.times[i] >= from - 1e-9) {
            s += st.mean(static_cast<Eigen::Index>(i), col);
            ++n;
        }
    return s / n;
}

EnsembleSpec f4_spec(bool rigid, int size, double t_end) {
    EnsembleSpec s;
    s.size = size;
    s.seed = 1;
    s.chain = chain20();
    if (rigid) s.chain.mass_multiplier = 1e6;
    s.lattice = rigid ? InitialLattice::optimal : InitialLattice::wigner;
    s.pulse = make_pulse("f4", 1.3, 0.0);
    s.t_end = t_end;
    s.chunk_size = 10;
    return s;
}

// Flexible f4 ensemble shared by the energetics and symmetry criteria.
const EnsembleStats& flexible_f4() {
    static const EnsembleStats st = [] {
        EnsembleSpec s = f4_spec(false, 1000, 500.0);
        s.asymptotic_window = 100.0;
        return run(s);
    }();
    return st;
}

void geometry(Criterion& c) {
    const ChainParams p = chain20();
    const LatticeState& l = optimal20();
    const Eigen::VectorXd r = bond_length_alternation(l);
    // r_n grows towards the chain ends; the bulk value is the central half
    double lo = 1e9, hi = -1e9;
    for (int i = p.n_sites / 4; i <= p.n_sites - 1 - p.n_sites / 4; ++i) {
        lo = std::min(lo, std::abs(r[i - 1]));
        hi = std::max(hi, std::abs(r[i - 1]));
    }
    c.note("central |r_n| range " + std::to_string(lo) + " .. " + std::to_string(hi) + " A, ends " +
           std::to_string(std::abs(r[0])) + " A");
    c.near("mean central |r_n| (A)", std::abs(central_bla(l)), 0.080, 0.005);
    const Eigen::VectorXd e = diagonalize(build_tridiagonal(p, l, 0.0), false).energies;
    c.near("HOMO-LUMO gap (eV)", e[10] - e[9], 1.80, 0.02);
    c.near("total band width (eV)", e[19] - e[0], 10.00, 0.05);
    c.near("lowest level (eV)", e[0], -4.893, 0.005);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) worst = std::max(worst, std::abs(e[i] - eps0(i)));
    c.below("max |eps_i - tabulated eps_i| over all 20 levels (eV)", worst, 0.005);
}

void modes(Criterion& c) {
    const NormalModeBasis& b = modes20();
    c.near("zero-point energy (eV)", b.zero_point_energy(), 0.83, 0.02);
    int cluster = 0;
    std::string periods;
    for (int j = 0; j < b.n_modes(); ++j) {
        const double period = 2.0 * std::numbers::pi / b.frequencies[j];
        if (period >= 32.0 && period <= 40.0) ++cluster;
        char buf[16];
        std::snprintf(buf, sizeof buf, " %.1f", period);
        periods += buf;
    }
    c.note("mode periods (fs):" + periods);
    c.check("modes with period in 32-40 fs", cluster, 2, 1e9);
}

void wigner(Criterion& c) {
    const int m = 2000;
    const BandStatistics s = band_statistics(chain20(), modes20(), m, 1);
    double worst_mean = 0.0, worst_sigma = 0.0;
    for (int i = 0; i < 20; ++i) {
        worst_mean = std::max(worst_mean, std::abs(s.mean[i] - band_mean(i)) /
                                              (3.0 * band_sigma(i) / std::sqrt(double(m))));
        worst_sigma = std::max(worst_sigma, std::abs(s.stddev[i] / band_sigma(i) - 1.0));
    }
    c.below("max |<eps_i> - tabulated| / (3 sigma_i / sqrt(M))", worst_mean, 1.0);
    c.below("max |sigma_i / tabulated sigma_i - 1|", worst_sigma, 0.10);
    c.near("sigma_1 (eV)", s.stddev[0], 0.034, 0.0034);
    c.near("sigma_10 (eV)", s.stddev[9], 0.130, 0.013);
    const double zpe = modes20().zero_point_energy();
    c.note("classical lattice energy above the optimum: " + std::to_string(s.classical_excess.mean()) +
           " +- " + std::to_string(s.classical_excess.standard_error()) + " eV");
    c.below("|classical energy - ZPE| / standard error", std::abs(s.classical_excess.mean() - zpe) /
                                                          s.classical_excess.standard_error(),
            3.0);
}

void conservation(Criterion& c) {
    const ChainParams p = chain20();
    IntegratorOptions tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const Propagator prop(p, std::nullopt, tight);
    double drift = 0.0, ortho = 0.0, reversal = 0.0;
    const auto grid = time_grid(0.0, 1000.0, 10.0);
    for (int i = 0; i < 10; ++i) {
        TrajectoryState start;
        start.lattice = sample_wigner_one(modes20(), 1, i);
        const auto sp = diagonalize(build_tridiagonal(p, start.lattice, 0.0));
        start.orbitals = make_orbital_set(sp.vectors, p.n_electrons,
                                          InitialElectronicState::ground_determinant);
        const double e0 = energy_partition(p, start.lattice, start.orbitals, 0.0).e_total;
        const TrajectoryState end = prop.run(start, 1000.0, grid, [&](const TrajectoryState& s) {
            drift = std::max(drift, std::abs(energy_partition(p, s.lattice, s.orbitals, 0.0).e_total - e0));
            ortho = std::max(ortho, s.orbitals.orthonormality_error());
        });
        const TrajectoryState back = prop.run(end, 0.0, {}, {});
        reversal = std::max({reversal, (back.lattice.u - start.lattice.u).cwiseAbs().maxCoeff(),
                             (back.lattice.p - start.lattice.p).cwiseAbs().maxCoeff(),
                             (back.orbitals.orbitals - start.orbitals.orbitals).cwiseAbs().maxCoeff()});
    }
    c.below("max |e_total(t) - e_total(0)| over 10 x 1000 fs (eV)", drift, 1e-6);
    c.below("max orbital orthonormality deviation", ortho, 1e-8);
    c.below("forward-backward error, all coordinates", reversal, 1e-6);
}

void symmetry(Criterion& c) {
    const ChainParams p = chain20();
    const Eigen::VectorXd e = diagonalize(build_tridiagonal(p, optimal20(), 0.0), false).energies;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) worst = std::max(worst, std::abs(e[k] + e[19 - k]));
    c.below("max |eps_k + eps_(N+1-k)| at the optimum (eV)", worst, 1e-10);

    const EnsembleStats& st = flexible_f4();
    const auto last = static_cast<Eigen::Index>(st.times.size() - 1);
    double worst_z = 0.0;
    for (int g = 1; g <= 10; ++g) {
        const int a = column::occ(20, g), b = column::occ(20, 21 - g);
        const double sum = st.mean(last, a) + st.mean(last, b);
        const double se = std::hypot(st.standard_error(last, a), st.standard_error(last, b));
        worst_z = std::max(worst_z, std::abs(sum - 2.0) / se);
    }
    c.below("max |n_g + n_(N+1-g) - 2| / SE after the pulse", worst_z, 3.0);
}

void rigid_control(Criterion& c) {
    // frequency scan with the long weak pulse
    EnsembleSpec base = f4_spec(true, 1, 0.0);
    base.pulse = make_pulse("f1", 1.0, 0.0);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.8 + 0.02 * i);
    RunOptions o;
    o.workers = 1;
    const auto pts = scan(base, ScanAxis::photon_energy, grid, o);
    std::vector<double> values;
    for (const auto& q : pts) values.push_back(q.c_infinity);
    std::string maxima;
    std::vector<double> at;
    for (std::size_t i : peak_indices(values)) {
        at.push_back(grid[i]);
        maxima += " " + std::to_string(grid[i]).substr(0, 4);
    }
    c.note("|C(inf)| local maxima at (eV):" + maxima);
    for (double target : {0.90, 1.18, 1.42}) {
        double best = 1e9;
        for (double x : at) best = std::min(best, std::abs(x - target));
        c.below("distance of nearest maximum to " + std::to_string(target).substr(0, 4) + " eV", best,
                0.02 + 1e-9);
    }

    // phase scan
    EnsembleSpec phase = f4_spec(true, 1, 0.0);
    const int n = 12;
    std::vector<double> phases;
    for (int i = 0; i < n; ++i) phases.push_back(2.0 * std::numbers::pi * i / n);
    const auto ph = scan(phase, ScanAxis::relative_phase, phases, o);
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        a(i, 0) = std::cos(phases[i]);
        a(i, 1) = -std::sin(phases[i]);
        y[i] = ph[i].c_infinity;
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);   // A cos(dphi + delta)
    const double amp = coef.norm();
    const double residual = (a * coef - y).cwiseAbs().maxCoeff();
    double antisym = 0.0;
    for (int i = 0; i < n / 2; ++i) antisym = std::max(antisym, std::abs(y[i] + y[i + n / 2]));
    c.note("fit amplitude A = " + std::to_string(amp) + ", phase delta = " +
           std::to_string(std::atan2(coef[1], coef[0])) + " rad");
    c.below("max fit residual / A", residual / amp, 0.10);
    c.below("max |C(dphi + pi) + C(dphi)| / A", antisym / amp, 0.05);
}

void energetics(Criterion& c) {
    const EnsembleStats rigid = run(f4_spec(true, 1, 500.0));
    c.near("rigid absorbed energy (eV)", rigid.absorbed_energy.mean(), 1.85, 0.10);
    const EnsembleStats& st = flexible_f4();
    c.note("flexible ensemble: " + std::to_string(st.completed) + "/" + std::to_string(st.requested) +
           " trajectories completed");
    c.check("flexible trajectories completed", st.completed, 0.99 * st.requested, st.requested);
    c.near("flexible mean absorbed energy (eV)", st.absorbed_energy.mean(), 3.9, 0.4);
    c.near("purity at t = 0", st.purity.front(), 0.997, 0.002);
    c.near("purity plateau, t >= 400 fs", st.purity_plateau(), 0.89, 0.03);
}

void breathing(Criterion& c) {
    // single flexible trajectory from the optimal geometry
    EnsembleSpec one = f4_spec(false, 1, 400.0);
    one.lattice = InitialLattice::optimal;
    const EnsembleStats tr = run(one);
    const auto bla = tr.series(column::bla_central);
    const auto gap = tr.series(column::gap);
    double reversal = -1.0;
    for (std::size_t i = 1; i < bla.size(); ++i)
        if (bla[i] * bla[0] <= 0.0) {
            reversal = tr.times[i - 1] + bla[i - 1] / (bla[i - 1] - bla[i]) * (tr.times[i] - tr.times[i - 1]);
            break;
        }
    c.near("first sign change of the central BLA (fs)", reversal, 67.0, 10.0);
    // gap minima that dominate +-10 fs after the pulse
    std::vector<double> minima;
    const double off = one.pulse->switch_off_time();
    for (std::size_t i = 0; i < gap.size(); ++i) {
        const double t = tr.times[i];
        if (t < off || t + 10.0 > tr.times.back()) continue;
        bool lowest = true;
        for (std::size_t j = 0; j < gap.size() && lowest; ++j)
            if (std::abs(tr.times[j] - t) <= 10.0 && gap[j] < gap[i]) lowest = false;
        if (lowest) minima.push_back(t);
    }
    const double period =
        minima.size() >= 2 ? (minima.back() - minima.front()) / double(minima.size() - 1) : 0.0;
    c.check("mean spacing of post-pulse gap minima (fs)", period, 30.0, 40.0);

    // long weak pulse ensemble
    EnsembleSpec f1;
    f1.size = 500;
    f1.seed = 1;
    f1.chain = chain20();
    f1.lattice = InitialLattice::wigner;
    f1.pulse = make_pulse("f1", 1.18, 0.0);
    f1.asymptotic_window = 100.0;
    const EnsembleStats st = run(f1);
    const double from = st.times.back() - 100.0;
    const double sign = st.mean(0, column::bla_central) < 0.0 ? -1.0 : 1.0;
    c.note("f1 ensemble: " + std::to_string(st.completed) + "/" + std::to_string(st.requested) +
           " trajectories completed");
    c.near("post-pulse central BLA, ground-state sense (A)", sign * window_mean(st, column::bla_central, from),
           0.03, 0.01);
    c.near("gap red shift (eV)", st.mean(0, column::gap) - window_mean(st, column::gap, from), 0.7, 0.2);
    c.near("purity plateau", st.purity_plateau(), 0.88, 0.03);
}

void dephasing(Criterion& c) {
    DephasingOptions o;
    o.size = 1000;
    o.seed = 1;
    o.workers = workers();
    o.t_end = 150.0;
    const DephasingResult short_chain = dephasing_experiment(chain20(), 4, o);
    c.near("N=4 recurrence spacing (fs)", short_chain.recurrence_spacing, 30.0, 5.0);
    o.t_end = 100.0;
    o.snapshot_dt = 0.02;
    const DephasingResult long_chain = dephasing_experiment(chain20(), 20, o);
    c.check("N=20 envelope 1/e time (fs)", long_chain.one_over_e_time, 0.0, 10.0);
    c.near("N=20 fitted decay time (fs)", long_chain.decay_time, 2.5, 1.0);
}

void flexible_phase(Criterion& c) {
    EnsembleSpec base = f4_spec(false, 500, 0.0);
    std::vector<double> phases;
    for (int i = 0; i < 8; ++i) phases.push_back(2.0 * std::numbers::pi * i / 8);
    RunOptions o;
    o.workers = workers();
    const auto pts = scan(base, ScanAxis::relative_phase, phases, o);
    for (const auto& q : pts)
        c.note("dphi = " + std::to_string(q.value).substr(0, 5) + "  C(inf) = " +
               std::to_string(q.c_infinity) + " +- " + std::to_string(q.c_infinity_error));
    const ScanPoint& zero = pts[0];
    const ScanPoint& pi = pts[4];
    c.check("sign(C(0)) * sign(C(pi))", zero.c_infinity * pi.c_infinity < 0.0 ? -1.0 : 1.0, -1.0, -1.0);
    c.check("|C(0)| / SE", std::abs(zero.c_infinity) / zero.c_infinity_error, 2.0, 1e9);
    c.check("|C(pi)| / SE", std::abs(pi.c_infinity) / pi.c_infinity_error, 2.0, 1e9);
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> all{
        {"geometry", geometry},
        {"modes", modes},
        {"wigner-statistics", wigner},
        {"conservation", conservation},
        {"electron-hole-symmetry", symmetry},
        {"rigid-control-map", rigid_control},
        {"energetics", energetics},
        {"breathing-relaxation", breathing},
        {"dephasing", dephasing},
        {"flexible-phase-scan", flexible_phase},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    std::vector<std::pair<std::string, bool>> results;
    for (const auto& [name, body] : all) {
        if (!only.empty() && !only.count(name)) continue;
        Criterion c{name};
        std::printf("%s\n", name.c_str());
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.note(std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s (%.0f s)\n", c.ok ? "PASS" : "FAIL", name.c_str(), secs);
        std::fflush(stdout);
        results.emplace_back(name, c.ok);
    }
    int failed = 0;
    std::printf("\nsummary\n");
    for (const auto& [name, ok] : results) {
        std::printf("  %s %s\n", ok ? "PASS" : "FAIL", name.c_str());
        failed += !ok;
    }
    return failed == 0 ? 0 : 1;
}

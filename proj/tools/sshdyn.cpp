// sshdyn: command-line driver for SSH chain ground states, Ehrenfest
// trajectories, ensembles and control scans.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "sshdyn/config.hpp"
#include "sshdyn/ensemble.hpp"
#include "sshdyn/experiments.hpp"
#include "sshdyn/ground_state.hpp"

namespace fs = std::filesystem;
using namespace sshdyn;

namespace {

/// Flag values; unset options leave the configuration untouched.
struct Overrides {
    std::string config_path;
    std::optional<std::string> output;
    std::optional<int> sites, electrons, size, chunk_size, workers, phase_points;
    std::optional<double> t0, alpha, spring_k, mass, lattice_a, mass_multiplier;
    std::optional<std::string> preset, electronic, lattice;
    std::optional<double> photon_ev, phase, t_center, t_width, eps_w, eps_2w;
    std::optional<std::uint64_t> seed;
    std::optional<double> t_end, snapshot_dt, rdm_dt, window, rel_tol, abs_tol;
    std::optional<double> scan_start, scan_stop, scan_step;
    std::optional<double> dephasing_t_end, dephasing_dt, fit_window;
    std::vector<int> dephasing_sizes;
    bool rigid = false, flexible = false, no_traj_csv = false, center = false, quiet = false;
};

void add_options(CLI::App& app, Overrides& o) {
    app.add_option("-c,--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("-o,--output", o.output, "Output directory");
    app.add_option("--sites", o.sites, "Number of sites N");
    app.add_option("--electrons", o.electrons, "Number of pi electrons (default N)");
    app.add_option("--t0", o.t0, "Hopping integral [eV]");
    app.add_option("--alpha", o.alpha, "Electron-lattice coupling [eV/A]");
    app.add_option("--spring-k", o.spring_k, "Spring constant [eV/A^2]");
    app.add_option("--mass", o.mass, "CH-group mass [eV fs^2/A^2]");
    app.add_option("--lattice-a", o.lattice_a, "Lattice constant [A]");
    app.add_option("--mass-multiplier", o.mass_multiplier, "Mass multiplier");
    app.add_flag("--rigid", o.rigid, "Rigid chain (mass x 1e6)");
    app.add_flag("--flexible", o.flexible, "Flexible chain (undo a rigid config)");
    app.add_flag("--center-coordinates", o.center, "Measure positions from the chain centre");
    app.add_option("--pulse", o.preset, "Pulse preset f1..f4 or none");
    app.add_option("--photon-ev", o.photon_ev, "Photon energy [eV]");
    app.add_option("--phase", o.phase, "Relative phase phi_2w - 2 phi_w [rad]");
    app.add_option("--t-center", o.t_center, "Pulse centre [fs]");
    app.add_option("--t-width", o.t_width, "Pulse width [fs]");
    app.add_option("--eps-w", o.eps_w, "Amplitude at omega [V/A]");
    app.add_option("--eps-2w", o.eps_2w, "Amplitude at 2 omega [V/A]");
    app.add_option("-M,--size", o.size, "Ensemble size");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--electronic", o.electronic, "ground_determinant | homo_lumo_superposition");
    app.add_option("--lattice", o.lattice, "wigner | optimal | auto");
    app.add_option("--t-end", o.t_end, "Run length [fs] (<= 0: pulse end + window)");
    app.add_option("--snapshot-dt", o.snapshot_dt, "Snapshot spacing [fs]");
    app.add_option("--rdm-dt", o.rdm_dt, "Density-matrix spacing [fs]");
    app.add_option("--window", o.window, "Asymptotic averaging window [fs]");
    app.add_option("--chunk-size", o.chunk_size, "Trajectories per checkpoint chunk");
    app.add_option("--rel-tol", o.rel_tol, "Integrator relative tolerance");
    app.add_option("--abs-tol", o.abs_tol, "Integrator absolute tolerance");
    app.add_option("-j,--workers", o.workers, "Worker threads");
    app.add_flag("--no-trajectory-csv", o.no_traj_csv, "Do not write traj_<i>.csv");
    app.add_option("--scan-start", o.scan_start, "First photon energy [eV]");
    app.add_option("--scan-stop", o.scan_stop, "Last photon energy [eV]");
    app.add_option("--scan-step", o.scan_step, "Photon energy step [eV]");
    app.add_option("--phase-points", o.phase_points, "Number of phases in [0, 2 pi)");
    app.add_option("--sizes", o.dephasing_sizes, "Chain lengths for dephasing");
    app.add_option("--dephasing-t-end", o.dephasing_t_end, "Dephasing run length [fs]");
    app.add_option("--dephasing-dt", o.dephasing_dt, "Dephasing snapshot spacing [fs]");
    app.add_option("--fit-window", o.fit_window, "Initial-decay fit window [fs]");
    app.add_flag("-q,--quiet", o.quiet, "No progress output");
}

template <typename T>
void apply(const std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

RunConfig resolve(const Overrides& o, const std::string& command) {
    RunConfig c;
    if (!o.config_path.empty()) c = load_config_file(o.config_path);
    if (command != "run") c.command = command;
    apply(o.output, c.output);
    if (o.sites) {
        c.chain.n_sites = *o.sites;
        if (!o.electrons) c.chain.n_electrons = *o.sites;
    }
    apply(o.electrons, c.chain.n_electrons);
    apply(o.t0, c.chain.t0);
    apply(o.alpha, c.chain.alpha);
    apply(o.spring_k, c.chain.spring_k);
    apply(o.mass, c.chain.mass);
    apply(o.lattice_a, c.chain.lattice_a);
    apply(o.mass_multiplier, c.chain.mass_multiplier);
    if (o.rigid) c.rigid = true;
    if (o.flexible) c.rigid = false;
    if (o.center) c.chain.center_coordinates = true;
    apply(o.preset, c.pulse.preset);
    apply(o.photon_ev, c.pulse.photon_ev);
    apply(o.phase, c.pulse.relative_phase);
    if (o.t_center) c.pulse.t_center = o.t_center;
    if (o.t_width) c.pulse.t_width = o.t_width;
    if (o.eps_w) c.pulse.eps_w = o.eps_w;
    if (o.eps_2w) c.pulse.eps_2w = o.eps_2w;
    apply(o.size, c.size);
    apply(o.seed, c.seed);
    apply(o.electronic, c.electronic);
    apply(o.lattice, c.lattice);
    apply(o.t_end, c.t_end);
    apply(o.snapshot_dt, c.snapshot_dt);
    apply(o.rdm_dt, c.rdm_dt);
    apply(o.window, c.asymptotic_window);
    apply(o.chunk_size, c.chunk_size);
    apply(o.rel_tol, c.integrator.rel_tol);
    apply(o.abs_tol, c.integrator.abs_tol);
    apply(o.workers, c.workers);
    if (o.no_traj_csv) c.write_trajectories = false;
    apply(o.scan_start, c.scan_start);
    apply(o.scan_stop, c.scan_stop);
    apply(o.scan_step, c.scan_step);
    apply(o.phase_points, c.phase_points);
    if (!o.dephasing_sizes.empty()) c.dephasing_sizes = o.dephasing_sizes;
    apply(o.dephasing_t_end, c.dephasing_t_end);
    apply(o.dephasing_dt, c.dephasing_dt);
    apply(o.fit_window, c.fit_window);
    // flag values go through the same checks as file values; anything
    // rejected here came from the command line
    ConfigDocument doc = parse_config_text(manifest_json(c).dump(2), "command line");
    doc.lines.clear();
    c = read_config(doc, c);
    validate_config(c);
    return c;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

void write_manifest(const RunConfig& c) {
    fs::create_directories(c.output);
    write_text(fs::path(c.output) / "manifest.json", manifest_json(c).dump(2) + "\n");
}

int run_optimize(const RunConfig& c, bool with_modes) {
    const ChainParams chain = c.resolved_chain();
    const GeometryReport report = optimize_geometry_report(chain);
    const Spectrum spectrum = diagonalize(build_tridiagonal(chain, report.lattice, 0.0), false);
    const fs::path dir(c.output);
    {
        std::ostringstream os;
        write_geometry_csv(os, chain, report.lattice);
        write_text(dir / "geometry.csv", os.str());
    }
    {
        std::ostringstream os;
        CsvWriter csv(os);
        csv.header(std::vector<std::string>{"level", "energy_ev", "occupation"});
        const Eigen::VectorXd f = aufbau_occupations(chain.n_sites, chain.n_electrons);
        for (int g = 0; g < chain.n_sites; ++g)
            csv.row(std::vector<double>{double(g + 1), spectrum.energies[g], f[g]});
        write_text(dir / "spectrum.csv", os.str());
    }
    const int homo = (chain.n_electrons + 1) / 2 - 1;
    json summary{{"schema_version", 1},
                 {"iterations", report.iterations},
                 {"energy_ev", report.energy},
                 {"max_force", report.max_force},
                 {"central_bla", central_bla(report.lattice)},
                 {"gap_ev", homo + 1 < chain.n_sites
                                ? spectrum.energies[homo + 1] - spectrum.energies[homo]
                                : 0.0},
                 {"band_width_ev", spectrum.energies.maxCoeff() - spectrum.energies.minCoeff()}};
    if (with_modes) {
        const NormalModeBasis basis = normal_modes(chain, report.lattice);
        std::ostringstream os;
        write_modes_csv(os, basis);
        write_text(dir / "modes.csv", os.str());
        summary["zero_point_energy_ev"] = basis.zero_point_energy();
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_sample(const RunConfig& c) {
    const ChainParams chain = c.resolved_chain();
    const LatticeState optimal = optimize_geometry(chain);
    const NormalModeBasis basis = normal_modes(chain, optimal);
    const fs::path dir(c.output);
    {
        std::ostringstream os;
        CsvWriter csv(os);
        std::vector<std::string> header{"sample"};
        for (int n = 1; n <= chain.n_sites; ++n) header.push_back("u_" + std::to_string(n));
        for (int n = 1; n <= chain.n_sites; ++n) header.push_back("p_" + std::to_string(n));
        csv.header(header);
        std::vector<double> row(1 + 2 * chain.n_sites);
        for (int i = 0; i < c.size; ++i) {
            const LatticeState s = sample_wigner_one(basis, c.seed, static_cast<std::uint64_t>(i));
            row[0] = i;
            for (int n = 0; n < chain.n_sites; ++n) {
                row[1 + n] = s.u[n];
                row[1 + chain.n_sites + n] = s.p[n];
            }
            csv.row(row);
        }
        write_text(dir / "samples.csv", os.str());
    }
    const BandStatistics bands = band_statistics(chain, basis, c.size, c.seed);
    {
        std::ostringstream os;
        CsvWriter csv(os);
        csv.header(std::vector<std::string>{"level", "reference_ev", "mean_ev", "std_ev"});
        for (int g = 0; g < chain.n_sites; ++g)
            csv.row(std::vector<double>{double(g + 1), bands.reference[g], bands.mean[g],
                                        bands.stddev[g]});
        write_text(dir / "bands.csv", os.str());
    }
    json summary{{"schema_version", 1},
                 {"count", c.size},
                 {"zero_point_energy_ev", basis.zero_point_energy()},
                 {"classical_excess_mean_ev", bands.classical_excess.mean()},
                 {"classical_excess_se_ev", bands.classical_excess.standard_error()}};
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_ensemble_command(const RunConfig& c, bool quiet) {
    const EnsembleSpec spec = c.ensemble_spec();
    RunOptions run;
    run.workers = c.workers;
    run.directory = fs::path(c.output);
    run.write_trajectories = c.write_trajectories;
    if (!quiet)
        run.progress = [](int done, int total) {
            std::cerr << "\r" << done << "/" << total << " trajectories" << std::flush;
            if (done == total) std::cerr << "\n";
        };
    const EnsembleStats st = run_ensemble(spec, run);
    const json summary = summary_json(spec, st);
    std::cout << summary.dump(2) << "\n";
    if (!st.healthy()) {
        std::cerr << "error: unhealthy ensemble, " << st.failed() << " of " << st.requested
                  << " trajectories failed\n";
        return 3;
    }
    return 0;
}

int run_scan(const RunConfig& c, ScanAxis axis, bool quiet) {
    const EnsembleSpec spec = c.ensemble_spec();
    const std::vector<double> grid =
        axis == ScanAxis::photon_energy ? c.frequency_grid() : c.phase_grid();
    RunOptions run;
    run.workers = c.workers;
    const auto points = scan(spec, axis, grid, run, [&](const ScanPoint& p) {
        if (!quiet) std::cerr << p.value << "  C(inf) = " << p.c_infinity << "\n";
    });
    std::ostringstream os;
    write_scan_csv(os, axis, points);
    write_text(fs::path(c.output) / "scan.csv", os.str());
    std::cout << os.str();
    return 0;
}

int run_dephasing(const RunConfig& c) {
    json summary{{"schema_version", 1}, {"chains", json::array()}};
    for (int n : c.dephasing_sizes) {
        const DephasingResult r = dephasing_experiment(c.resolved_chain(), n, c.dephasing_options());
        std::ostringstream os;
        write_dephasing_csv(os, r);
        write_text(fs::path(c.output) / ("dephasing_N" + std::to_string(n) + ".csv"), os.str());
        summary["chains"].push_back({{"n_sites", n},
                                     {"completed", r.completed},
                                     {"decay_time_fs", r.decay_time},
                                     {"one_over_e_time_fs", r.one_over_e_time},
                                     {"recurrence_spacing_fs", r.recurrence_spacing}});
    }
    write_text(fs::path(c.output) / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int dispatch(const RunConfig& c, bool quiet) {
    write_manifest(c);
    if (c.command == "optimize") return run_optimize(c, false);
    if (c.command == "modes") return run_optimize(c, true);
    if (c.command == "sample") return run_sample(c);
    if (c.command == "trajectory" || c.command == "ensemble") return run_ensemble_command(c, quiet);
    if (c.command == "scan-frequency") return run_scan(c, ScanAxis::photon_energy, quiet);
    if (c.command == "scan-phase") return run_scan(c, ScanAxis::relative_phase, quiet);
    if (c.command == "dephasing") return run_dephasing(c);
    throw ConfigError("unknown command \"" + c.command + "\"");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ehrenfest dynamics of SSH chains in two-color laser pulses"};
    app.set_version_flag("--version", std::string(code_version));
    app.require_subcommand(1);
    Overrides overrides;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"optimize", "Optimal geometry and single-particle spectrum"},
        {"modes", "Optimal geometry plus normal modes"},
        {"sample", "Wigner samples and band statistics"},
        {"trajectory", "One trajectory (optimal geometry unless --lattice wigner)"},
        {"ensemble", "Ensemble of trajectories with checkpointing"},
        {"scan-frequency", "C(infinity) over a photon-energy grid"},
        {"scan-phase", "C(infinity) over relative phases"},
        {"dephasing", "Polarization decay of superposition states"},
        {"run", "Run the command named in the configuration file"}};
    for (const auto& [name, help] : commands) add_options(*app.add_subcommand(name, help), overrides);
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig config = resolve(overrides, command);
        return dispatch(config, overrides.quiet);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

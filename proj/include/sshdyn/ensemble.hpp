#ifndef SSHDYN_ENSEMBLE_HPP
#define SSHDYN_ENSEMBLE_HPP

// Ensembles of quantum-classical trajectories: initial conditions from the
// ground-state Wigner distribution, parallel propagation in fixed index
// chunks, order-stable aggregation and checkpoint/resume on disk.
//
// Checkpoint directory layout:
//   spec.json            canonical spec and its hash
//   chunks/chunk_<lo>_<hi>.bin
//                        partial sums of one completed index range
//   traj_<i>.csv         frames of trajectory i (optional)
//   aggregate.csv        per-snapshot ensemble means and standard errors
//   purity.csv           purity of the ensemble-averaged density matrix
//   rdm_initial.csv, rdm_final.csv
//   summary.json

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sshdyn/chain.hpp"
#include "sshdyn/ground_state.hpp"
#include "sshdyn/hamiltonian.hpp"
#include "sshdyn/io.hpp"
#include "sshdyn/laser.hpp"
#include "sshdyn/observables.hpp"
#include "sshdyn/propagator.hpp"
#include "sshdyn/stats.hpp"

namespace sshdyn {

enum class InitialLattice { wigner, optimal };

struct EnsembleSpec {
    int size = 1;
    std::uint64_t seed = 1;
    InitialElectronicState electronic = InitialElectronicState::ground_determinant;
    InitialLattice lattice = InitialLattice::wigner;
    ChainParams chain;
    std::optional<PulseSpec> pulse;
    double t_end = 0.0;              // fs; <= 0 selects the default horizon
    double snapshot_dt = 0.25;       // fs
    double rdm_dt = 1.0;             // fs, multiple of snapshot_dt
    double asymptotic_window = 100.0;  // fs, tail used for C(infinity)
    IntegratorOptions integrator;
    int chunk_size = 10;
    bool compact_orbitals = true;

    /// Pulse switch-off plus the asymptotic window, or 1000 fs field-free.
    double horizon() const {
        if (t_end > 0.0) return t_end;
        return pulse ? pulse->switch_off_time() + asymptotic_window : 1000.0;
    }

    int rdm_stride() const { return static_cast<int>(std::lround(rdm_dt / snapshot_dt)); }

    /// Normalisation width for C(t); 1 fs when there is no pulse.
    double pulse_width() const { return pulse ? pulse->t_width : 1.0; }

    void validate() const {
        chain.validate();
        if (pulse) pulse->validate();
        if (size < 1) throw ConfigError("ensemble size must be >= 1");
        if (!(snapshot_dt > 0.0)) throw ConfigError("snapshot_dt must be positive");
        if (rdm_stride() < 1 || std::abs(rdm_stride() * snapshot_dt - rdm_dt) > 1e-9 * rdm_dt)
            throw ConfigError("rdm_dt must be a positive multiple of snapshot_dt");
        if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
        if (!(asymptotic_window > 0.0)) throw ConfigError("asymptotic_window must be positive");
        if (!(horizon() > 0.0)) throw ConfigError("t_end must be positive");
        if (electronic == InitialElectronicState::homo_lumo_superposition &&
            (chain.n_electrons % 2 != 0 || chain.n_electrons >= 2 * chain.n_sites))
            throw ConfigError("superposition start needs a closed shell with an empty LUMO");
    }
};

inline std::string to_string(InitialElectronicState s) {
    return s == InitialElectronicState::ground_determinant ? "ground_determinant"
                                                           : "homo_lumo_superposition";
}

inline InitialElectronicState electronic_state_from_string(const std::string& s) {
    if (s == "ground_determinant") return InitialElectronicState::ground_determinant;
    if (s == "homo_lumo_superposition") return InitialElectronicState::homo_lumo_superposition;
    throw ConfigError("unknown initial electronic state \"" + s +
                      "\"; valid: ground_determinant, homo_lumo_superposition");
}

inline std::string to_string(InitialLattice s) {
    return s == InitialLattice::wigner ? "wigner" : "optimal";
}

inline InitialLattice lattice_from_string(const std::string& s) {
    if (s == "wigner") return InitialLattice::wigner;
    if (s == "optimal") return InitialLattice::optimal;
    throw ConfigError("unknown initial lattice \"" + s + "\"; valid: wigner, optimal");
}

inline json to_json(const EnsembleSpec& s) {
    return {{"size", s.size},
            {"seed", s.seed},
            {"electronic", to_string(s.electronic)},
            {"lattice", to_string(s.lattice)},
            {"chain", to_json(s.chain)},
            {"pulse", s.pulse ? to_json(*s.pulse) : json(nullptr)},
            {"t_end", s.horizon()},
            {"snapshot_dt", s.snapshot_dt},
            {"rdm_dt", s.rdm_dt},
            {"asymptotic_window", s.asymptotic_window},
            {"integrator", to_json(s.integrator)},
            {"chunk_size", s.chunk_size},
            {"compact_orbitals", s.compact_orbitals}};
}

inline EnsembleSpec ensemble_spec_from_json(const json& j) {
    EnsembleSpec s;
    s.size = j.at("size").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.electronic = electronic_state_from_string(j.at("electronic").get<std::string>());
    s.lattice = lattice_from_string(j.at("lattice").get<std::string>());
    s.chain = chain_from_json(j.at("chain"));
    if (!j.at("pulse").is_null()) s.pulse = pulse_from_json(j.at("pulse"));
    s.t_end = j.at("t_end").get<double>();
    s.snapshot_dt = j.at("snapshot_dt").get<double>();
    s.rdm_dt = j.at("rdm_dt").get<double>();
    s.asymptotic_window = j.at("asymptotic_window").get<double>();
    s.integrator = integrator_from_json(j.at("integrator"));
    s.chunk_size = j.at("chunk_size").get<int>();
    s.compact_orbitals = j.at("compact_orbitals").get<bool>();
    return s;
}

/// Hash of the canonical (sorted-key) JSON form; keys checkpoint directories.
inline std::string spec_hash(const EnsembleSpec& s) { return fnv1a_hex(to_json(s).dump()); }

/// Optimal geometry and, for Wigner starts, the normal modes.
struct GroundStateData {
    LatticeState optimal;
    std::optional<NormalModeBasis> modes;
};

inline GroundStateData prepare_ground_state(const EnsembleSpec& spec) {
    GroundStateData g;
    g.optimal = optimize_geometry(spec.chain);
    if (spec.lattice == InitialLattice::wigner) g.modes = normal_modes(spec.chain, g.optimal);
    return g;
}

/// Trajectory `index`: Wigner sample `index` (or the optimal geometry) with
/// the field-free eigenorbitals of that geometry as initial orbitals.
inline TrajectoryState initial_condition(const EnsembleSpec& spec, const GroundStateData& ground,
                                         int index) {
    TrajectoryState s;
    s.t = 0.0;
    s.lattice = spec.lattice == InitialLattice::wigner
                    ? sample_wigner_one(*ground.modes, spec.seed, static_cast<std::uint64_t>(index))
                    : ground.optimal;
    // orbitals diagonalise H_elec at preparation time
    const double field = field_at(spec.pulse, s.t);
    const Spectrum sp = diagonalize(build_tridiagonal(spec.chain, s.lattice, field));
    s.orbitals = make_orbital_set(sp.vectors, spec.chain.n_electrons, spec.electronic,
                                  spec.compact_orbitals);
    return s;
}

inline std::vector<TrajectoryState> build_initial_conditions(const EnsembleSpec& spec) {
    spec.validate();
    const GroundStateData ground = prepare_ground_state(spec);
    std::vector<TrajectoryState> out;
    out.reserve(spec.size);
    for (int i = 0; i < spec.size; ++i) out.push_back(initial_condition(spec, ground, i));
    return out;
}

struct TrajectorySummary {
    int index = 0;
    bool ok = true;
    double fail_time = 0.0;
    std::string message;
    double initial_energy = 0.0;
    double absorbed_energy = 0.0;   // e_total(end) - e_total(0)
    double c_infinity = 0.0;        // mean C(t) over the final window
};

/// Frames (snapshot-major, frame_columns layout) and density matrices of one
/// trajectory.
struct TrajectoryOutput {
    std::vector<double> times;
    std::vector<double> frames;
    std::vector<Eigen::MatrixXcd> rdms;   // every rdm_stride-th snapshot
    TrajectorySummary summary;
};

inline TrajectoryOutput run_trajectory(const EnsembleSpec& spec, const TrajectoryState& initial,
                                       int index = 0, bool keep_rdms = true) {
    const ChainParams& chain = spec.chain;
    const double t_end = spec.horizon();
    TrajectoryOutput out;
    out.times = time_grid(initial.t, t_end, spec.snapshot_dt);
    const int ncol = column::count(chain.n_sites);
    out.frames.reserve(out.times.size() * ncol);
    out.summary.index = index;
    CumulativeDipole cumulative(chain.chain_length(), spec.pulse_width());
    const int stride = spec.rdm_stride();
    std::size_t snapshot = 0;
    Propagator propagator(chain, spec.pulse, spec.integrator);
    try {
        propagator.run(initial, t_end, out.times, [&](const TrajectoryState& s) {
            ObservableFrame f = make_frame(chain, spec.pulse, s);
            f.cum_dipole = cumulative.add(s.t, f.mu);
            const auto values = frame_values(f);
            out.frames.insert(out.frames.end(), values.begin(), values.end());
            if (keep_rdms && snapshot % stride == 0) out.rdms.push_back(build_rdm(s.orbitals));
            ++snapshot;
        });
    } catch (const PropagationError& e) {
        out.summary.ok = false;
        out.summary.fail_time = e.time();
        out.summary.message = e.what();
        return out;
    }
    const auto at = [&](std::size_t snap, int col) { return out.frames[snap * ncol + col]; };
    const std::size_t last = out.times.size() - 1;
    out.summary.initial_energy = at(0, column::e_total);
    out.summary.absorbed_energy = at(last, column::e_total) - at(0, column::e_total);
    std::vector<double> c(out.times.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = at(i, column::cum_dipole);
    out.summary.c_infinity = tail_mean(out.times, c, spec.asymptotic_window);
    return out;
}

/// Order-stable partial sums over one index range [lo, hi).
struct ChunkAccumulator {
    int lo = 0;
    int hi = 0;
    int n_snapshots = 0;
    int n_columns = 0;
    int n_sites = 0;
    std::vector<Moments> frames;                // snapshot-major
    std::vector<Eigen::MatrixXcd> rdm_sum;
    long rdm_count = 0;
    std::vector<TrajectorySummary> summaries;

    ChunkAccumulator() = default;
    ChunkAccumulator(int lo_, int hi_, int snapshots, int columns, int sites, int rdm_snapshots)
        : lo(lo_), hi(hi_), n_snapshots(snapshots), n_columns(columns), n_sites(sites),
          frames(static_cast<std::size_t>(snapshots) * columns),
          rdm_sum(rdm_snapshots, Eigen::MatrixXcd::Zero(sites, sites)) {}

    void add(const TrajectoryOutput& t) {
        summaries.push_back(t.summary);
        if (!t.summary.ok) return;
        for (std::size_t i = 0; i < frames.size(); ++i) frames[i].add(t.frames[i]);
        for (std::size_t i = 0; i < rdm_sum.size(); ++i) rdm_sum[i] += t.rdms[i];
        ++rdm_count;
    }

    void merge(const ChunkAccumulator& other) {
        for (std::size_t i = 0; i < frames.size(); ++i) frames[i].merge(other.frames[i]);
        for (std::size_t i = 0; i < rdm_sum.size(); ++i) rdm_sum[i] += other.rdm_sum[i];
        rdm_count += other.rdm_count;
        summaries.insert(summaries.end(), other.summaries.begin(), other.summaries.end());
        hi = other.hi;
    }
};

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("truncated checkpoint file");
    return v;
}

inline constexpr std::uint32_t chunk_magic = 0x53534843;  // "SSHC"

inline void put_sum(std::ostream& os, const CompensatedSum& s) {
    put(os, s.sum);
    put(os, s.compensation);
}

inline CompensatedSum get_sum(std::istream& is) {
    CompensatedSum s;
    s.sum = get<double>(is);
    s.compensation = get<double>(is);
    return s;
}

} // namespace detail

inline std::string serialize_chunk(const ChunkAccumulator& c) {
    std::ostringstream os(std::ios::binary);
    using detail::put;
    put(os, detail::chunk_magic);
    put<std::int32_t>(os, c.lo);
    put<std::int32_t>(os, c.hi);
    put<std::int32_t>(os, c.n_snapshots);
    put<std::int32_t>(os, c.n_columns);
    put<std::int32_t>(os, c.n_sites);
    put<std::int64_t>(os, static_cast<std::int64_t>(c.rdm_sum.size()));
    for (const auto& m : c.frames) {
        put<std::int64_t>(os, m.count);
        detail::put_sum(os, m.first);
        detail::put_sum(os, m.second);
    }
    put<std::int64_t>(os, c.rdm_count);
    for (const auto& r : c.rdm_sum)
        os.write(reinterpret_cast<const char*>(r.data()),
                 static_cast<std::streamsize>(r.size() * sizeof(complex)));
    put<std::int64_t>(os, static_cast<std::int64_t>(c.summaries.size()));
    for (const auto& s : c.summaries) {
        put<std::int32_t>(os, s.index);
        put<std::int32_t>(os, s.ok ? 1 : 0);
        put(os, s.fail_time);
        put(os, s.initial_energy);
        put(os, s.absorbed_energy);
        put(os, s.c_infinity);
        put<std::int64_t>(os, static_cast<std::int64_t>(s.message.size()));
        os.write(s.message.data(), static_cast<std::streamsize>(s.message.size()));
    }
    return os.str();
}

inline ChunkAccumulator deserialize_chunk(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    using detail::get;
    if (get<std::uint32_t>(is) != detail::chunk_magic) throw ConfigError("not a chunk file");
    ChunkAccumulator c;
    c.lo = get<std::int32_t>(is);
    c.hi = get<std::int32_t>(is);
    c.n_snapshots = get<std::int32_t>(is);
    c.n_columns = get<std::int32_t>(is);
    c.n_sites = get<std::int32_t>(is);
    const auto n_rdm = get<std::int64_t>(is);
    c.frames.resize(static_cast<std::size_t>(c.n_snapshots) * c.n_columns);
    for (auto& m : c.frames) {
        m.count = get<std::int64_t>(is);
        m.first = detail::get_sum(is);
        m.second = detail::get_sum(is);
    }
    c.rdm_count = get<std::int64_t>(is);
    c.rdm_sum.assign(n_rdm, Eigen::MatrixXcd(c.n_sites, c.n_sites));
    for (auto& r : c.rdm_sum) {
        is.read(reinterpret_cast<char*>(r.data()),
                static_cast<std::streamsize>(r.size() * sizeof(complex)));
        if (!is) throw ConfigError("truncated checkpoint file");
    }
    const auto n_sum = get<std::int64_t>(is);
    for (std::int64_t i = 0; i < n_sum; ++i) {
        TrajectorySummary s;
        s.index = get<std::int32_t>(is);
        s.ok = get<std::int32_t>(is) != 0;
        s.fail_time = get<double>(is);
        s.initial_energy = get<double>(is);
        s.absorbed_energy = get<double>(is);
        s.c_infinity = get<double>(is);
        s.message.resize(get<std::int64_t>(is));
        is.read(s.message.data(), static_cast<std::streamsize>(s.message.size()));
        c.summaries.push_back(std::move(s));
    }
    return c;
}

/// Ensemble means and standard errors of every frame column plus the
/// purity of the mean density matrix.
struct EnsembleStats {
    std::vector<double> times;
    std::vector<std::string> columns;
    Eigen::MatrixXd mean;             // snapshots x columns
    Eigen::MatrixXd standard_error;   // sample std / sqrt(completed)
    std::vector<double> rdm_times;
    std::vector<double> purity;
    Eigen::MatrixXcd initial_rdm;
    Eigen::MatrixXcd final_rdm;
    int requested = 0;
    int completed = 0;
    std::vector<TrajectorySummary> trajectories;   // in index order
    Moments absorbed_energy;
    Moments c_infinity;
    double asymptotic_window = 100.0;

    int failed() const { return requested - completed; }
    bool healthy() const { return failed() <= 0.01 * requested; }

    std::vector<double> series(int col) const {
        std::vector<double> s(times.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = mean(static_cast<Eigen::Index>(i), col);
        return s;
    }

    std::vector<double> error_series(int col) const {
        std::vector<double> s(times.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] = standard_error(static_cast<Eigen::Index>(i), col);
        return s;
    }

    /// Mean purity over the final asymptotic window.
    double purity_plateau() const { return tail_mean(rdm_times, purity, asymptotic_window); }
};

inline EnsembleStats finalize(const EnsembleSpec& spec, const ChunkAccumulator& all) {
    EnsembleStats st;
    st.times = time_grid(0.0, spec.horizon(), spec.snapshot_dt);
    st.columns = frame_columns(spec.chain.n_sites);
    st.requested = spec.size;
    st.asymptotic_window = spec.asymptotic_window;
    st.trajectories = all.summaries;
    std::sort(st.trajectories.begin(), st.trajectories.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    for (const auto& s : st.trajectories)
        if (s.ok) {
            ++st.completed;
            st.absorbed_energy.add(s.absorbed_energy);
            st.c_infinity.add(s.c_infinity);
        }
    const int ns = all.n_snapshots, nc = all.n_columns;
    st.mean.resize(ns, nc);
    st.standard_error.resize(ns, nc);
    for (int i = 0; i < ns; ++i)
        for (int c = 0; c < nc; ++c) {
            const auto& m = all.frames[static_cast<std::size_t>(i) * nc + c];
            st.mean(i, c) = m.mean();
            st.standard_error(i, c) = m.standard_error();
        }
    const int stride = spec.rdm_stride();
    for (std::size_t k = 0; k < all.rdm_sum.size(); ++k) {
        st.rdm_times.push_back(st.times[k * stride]);
        const Eigen::MatrixXcd mean_rdm =
            all.rdm_count > 0 ? Eigen::MatrixXcd(all.rdm_sum[k] / double(all.rdm_count))
                              : Eigen::MatrixXcd(all.rdm_sum[k]);
        st.purity.push_back(purity(mean_rdm, spec.chain.n_electrons));
        if (k == 0) st.initial_rdm = mean_rdm;
        if (k + 1 == all.rdm_sum.size()) st.final_rdm = mean_rdm;
    }
    return st;
}

struct RunOptions {
    int workers = 1;
    std::optional<std::filesystem::path> directory;
    bool write_trajectories = true;
    // Stop with RunInterrupted after this many freshly computed chunks.
    std::optional<int> stop_after_chunks;
    std::function<void(int done, int total)> progress;
};

class RunInterrupted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_trajectory_csv(const std::filesystem::path& path, const EnsembleSpec& spec,
                                 const TrajectoryOutput& t) {
    std::ostringstream os;
    CsvWriter csv(os);
    std::vector<std::string> header{"t"};
    const auto cols = frame_columns(spec.chain.n_sites);
    header.insert(header.end(), cols.begin(), cols.end());
    csv.header(header);
    const std::size_t nc = cols.size();
    std::vector<double> row(nc + 1);
    for (std::size_t i = 0; i * nc < t.frames.size(); ++i) {
        row[0] = t.times[i];
        std::copy_n(t.frames.begin() + static_cast<std::ptrdiff_t>(i * nc), nc, row.begin() + 1);
        csv.row(row);
    }
    write_file_atomic(path, os.str());
}

inline void write_rdm_csv(const std::filesystem::path& path, const Eigen::MatrixXcd& rdm) {
    std::ostringstream os;
    os.precision(12);
    os << "n,m,re,im\n";
    for (Eigen::Index n = 0; n < rdm.rows(); ++n)
        for (Eigen::Index m = 0; m < rdm.cols(); ++m)
            os << n + 1 << ',' << m + 1 << ',' << rdm(n, m).real() << ',' << rdm(n, m).imag()
               << '\n';
    write_file_atomic(path, os.str());
}

} // namespace detail

inline json summary_json(const EnsembleSpec& spec, const EnsembleStats& st) {
    json failures = json::array();
    for (const auto& s : st.trajectories)
        if (!s.ok) failures.push_back({{"index", s.index}, {"time", s.fail_time}, {"message", s.message}});
    return {{"schema_version", 1},
            {"spec_hash", spec_hash(spec)},
            {"requested", st.requested},
            {"completed", st.completed},
            {"failed", st.failed()},
            {"healthy", st.healthy()},
            {"absorbed_energy", {{"mean", st.absorbed_energy.mean()},
                                 {"standard_error", st.absorbed_energy.standard_error()}}},
            {"c_infinity", {{"mean", st.c_infinity.mean()},
                            {"standard_error", st.c_infinity.standard_error()}}},
            {"purity_initial", st.purity.empty() ? 0.0 : st.purity.front()},
            {"purity_plateau", st.purity.empty() ? 0.0 : st.purity_plateau()},
            {"failures", failures}};
}

inline void write_ensemble_outputs(const std::filesystem::path& dir, const EnsembleSpec& spec,
                                   const EnsembleStats& st) {
    {
        std::ostringstream os;
        CsvWriter csv(os);
        std::vector<std::string> header{"t"};
        for (const auto& c : st.columns) {
            header.push_back(c + "_mean");
            header.push_back(c + "_se");
        }
        csv.header(header);
        std::vector<double> row(1 + 2 * st.columns.size());
        for (std::size_t i = 0; i < st.times.size(); ++i) {
            row[0] = st.times[i];
            for (std::size_t c = 0; c < st.columns.size(); ++c) {
                row[1 + 2 * c] = st.mean(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
                row[2 + 2 * c] =
                    st.standard_error(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            }
            csv.row(row);
        }
        write_file_atomic(dir / "aggregate.csv", os.str());
    }
    {
        std::ostringstream os;
        CsvWriter csv(os);
        csv.header(std::vector<std::string>{"t", "purity"});
        for (std::size_t i = 0; i < st.purity.size(); ++i)
            csv.row(std::vector<double>{st.rdm_times[i], st.purity[i]});
        write_file_atomic(dir / "purity.csv", os.str());
    }
    if (st.initial_rdm.size() > 0) detail::write_rdm_csv(dir / "rdm_initial.csv", st.initial_rdm);
    if (st.final_rdm.size() > 0) detail::write_rdm_csv(dir / "rdm_final.csv", st.final_rdm);
    write_file_atomic(dir / "summary.json", summary_json(spec, st).dump(2) + "\n");
}

/// Runs (or resumes) an ensemble. Chunks of `chunk_size` consecutive indices
/// are the unit of work and of persistence; they are merged strictly in index
/// order, so results do not depend on the number of workers.
inline EnsembleStats run_ensemble(const EnsembleSpec& spec, const RunOptions& options = {}) {
    spec.validate();
    namespace fs = std::filesystem;
    const std::string hash = spec_hash(spec);
    std::optional<fs::path> chunk_dir;
    if (options.directory) {
        fs::create_directories(*options.directory);
        const fs::path spec_file = *options.directory / "spec.json";
        if (fs::exists(spec_file)) {
            const json existing = json::parse(read_file(spec_file));
            if (existing.value("hash", std::string()) != hash)
                throw ConfigError("checkpoint directory " + options.directory->string() +
                                  " belongs to a different ensemble spec");
        } else {
            write_file_atomic(spec_file, json{{"hash", hash}, {"spec", to_json(spec)}}.dump(2) + "\n");
        }
        chunk_dir = *options.directory / "chunks";
        fs::create_directories(*chunk_dir);
    }

    const GroundStateData ground = prepare_ground_state(spec);
    const int n_snapshots = static_cast<int>(time_grid(0.0, spec.horizon(), spec.snapshot_dt).size());
    const int n_columns = column::count(spec.chain.n_sites);
    const int n_rdm = (n_snapshots - 1) / spec.rdm_stride() + 1;
    const int n_chunks = (spec.size + spec.chunk_size - 1) / spec.chunk_size;

    auto chunk_path = [&](int lo, int hi) {
        return *chunk_dir / ("chunk_" + std::to_string(lo) + "_" + std::to_string(hi) + ".bin");
    };

    std::mutex mutex;
    std::map<int, ChunkAccumulator> pending;
    std::optional<ChunkAccumulator> merged;
    int next_to_merge = 0;
    int done_trajectories = 0;
    std::atomic<int> next_chunk{0};
    std::atomic<int> fresh_chunks{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;

    auto work = [&] {
        while (!stop) {
            const int c = next_chunk++;
            if (c >= n_chunks) return;
            const int lo = c * spec.chunk_size;
            const int hi = std::min(spec.size, lo + spec.chunk_size);
            ChunkAccumulator acc;
            try {
                if (chunk_dir && fs::exists(chunk_path(lo, hi))) {
                    acc = deserialize_chunk(read_file(chunk_path(lo, hi)));
                } else {
                    if (options.stop_after_chunks && fresh_chunks++ >= *options.stop_after_chunks) {
                        stop = true;
                        return;
                    }
                    acc = ChunkAccumulator(lo, hi, n_snapshots, n_columns, spec.chain.n_sites, n_rdm);
                    for (int i = lo; i < hi; ++i) {
                        const TrajectoryOutput out =
                            run_trajectory(spec, initial_condition(spec, ground, i), i);
                        acc.add(out);
                        if (options.directory && options.write_trajectories && out.summary.ok)
                            detail::write_trajectory_csv(
                                *options.directory / ("traj_" + std::to_string(i) + ".csv"), spec,
                                out);
                    }
                    if (chunk_dir) write_file_atomic(chunk_path(lo, hi), serialize_chunk(acc));
                }
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!error) error = std::current_exception();
                stop = true;
                return;
            }
            std::lock_guard lock(mutex);
            done_trajectories += hi - lo;
            pending.emplace(c, std::move(acc));
            while (!pending.empty() && pending.begin()->first == next_to_merge) {
                auto node = pending.extract(pending.begin());
                if (merged)
                    merged->merge(node.mapped());
                else
                    merged = std::move(node.mapped());
                ++next_to_merge;
            }
            if (options.progress) options.progress(done_trajectories, spec.size);
        }
    };

    const int workers = std::max(1, std::min(options.workers, n_chunks));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    if (next_to_merge < n_chunks) throw RunInterrupted("ensemble run stopped before completion");

    EnsembleStats st = finalize(spec, *merged);
    if (options.directory) write_ensemble_outputs(*options.directory, spec, st);
    return st;
}

} // namespace sshdyn

#endif // SSHDYN_ENSEMBLE_HPP

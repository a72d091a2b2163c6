#ifndef SSHDYN_CONFIG_HPP
#define SSHDYN_CONFIG_HPP

// Run configuration: JSON file format, defaults, validation with source
// line numbers, and conversion to the simulation records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sshdyn/chain.hpp"
#include "sshdyn/ensemble.hpp"
#include "sshdyn/errors.hpp"
#include "sshdyn/experiments.hpp"
#include "sshdyn/io.hpp"
#include "sshdyn/laser.hpp"
#include "sshdyn/propagator.hpp"

#ifndef SSHDYN_VERSION
#define SSHDYN_VERSION "unknown"
#endif

namespace sshdyn {

inline constexpr const char* code_version = SSHDYN_VERSION;

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"optimize",       "modes",      "sample",
                                                "trajectory",     "ensemble",   "scan-frequency",
                                                "scan-phase",     "dephasing"};
    return names;
}

struct PulseConfig {
    std::string preset = "f4";      // f1..f4 or "none"
    double photon_ev = 1.3;
    double relative_phase = 0.0;    // rad, phi_2w - 2 phi_w
    std::optional<double> t_center;
    std::optional<double> t_width;
    std::optional<double> eps_w;
    std::optional<double> eps_2w;
};

struct RunConfig {
    std::string command = "ensemble";
    ChainParams chain;
    bool rigid = false;             // forces mass_multiplier = 1e6
    PulseConfig pulse;

    int size = 100;
    std::uint64_t seed = 1;
    std::string electronic = "ground_determinant";
    std::string lattice = "auto";   // wigner | optimal | auto
    double t_end = 0.0;             // <= 0: pulse switch-off + asymptotic window
    double snapshot_dt = 0.25;
    double rdm_dt = 1.0;
    double asymptotic_window = 100.0;
    int chunk_size = 10;
    bool compact_orbitals = true;
    bool write_trajectories = true;

    IntegratorOptions integrator;
    int workers = 1;
    std::string output = "run";

    double scan_start = 0.8;        // eV
    double scan_stop = 1.6;
    double scan_step = 0.02;
    int phase_points = 12;

    std::vector<int> dephasing_sizes{4, 20};
    double dephasing_t_end = 100.0;
    double dephasing_dt = 0.05;
    double fit_window = 10.0;
    double recurrence_window = 10.0;

    /// Chain with the rigid switch applied.
    ChainParams resolved_chain() const {
        ChainParams c = chain;
        if (rigid) c.mass_multiplier = 1e6;
        return c;
    }

    std::optional<PulseSpec> resolved_pulse() const {
        if (pulse.preset == "none") return std::nullopt;
        PulseSpec p = make_pulse(pulse.preset, pulse.photon_ev, pulse.relative_phase, chain.hbar);
        if (pulse.t_center) p.t_center = *pulse.t_center;
        if (pulse.t_width) p.t_width = *pulse.t_width;
        if (pulse.eps_w) p.eps_w = *pulse.eps_w;
        if (pulse.eps_2w) p.eps_2w = *pulse.eps_2w;
        return p;
    }

    /// "auto" picks the optimal geometry for single trajectories and rigid
    /// chains and Wigner sampling otherwise.
    InitialLattice resolved_lattice() const {
        if (lattice == "auto")
            return command == "trajectory" || rigid ? InitialLattice::optimal : InitialLattice::wigner;
        return lattice_from_string(lattice);
    }

    EnsembleSpec ensemble_spec() const {
        EnsembleSpec s;
        s.size = command == "trajectory" ? 1 : size;
        s.seed = seed;
        s.electronic = electronic_state_from_string(electronic);
        s.lattice = resolved_lattice();
        s.chain = resolved_chain();
        s.pulse = resolved_pulse();
        s.t_end = t_end;
        s.snapshot_dt = snapshot_dt;
        s.rdm_dt = rdm_dt;
        s.asymptotic_window = asymptotic_window;
        s.integrator = integrator;
        s.chunk_size = chunk_size;
        s.compact_orbitals = compact_orbitals;
        return s;
    }

    std::vector<double> frequency_grid() const {
        std::vector<double> g;
        const auto n = static_cast<long>(std::floor((scan_stop - scan_start) / scan_step + 1e-6));
        for (long i = 0; i <= n; ++i) g.push_back(scan_start + static_cast<double>(i) * scan_step);
        return g;
    }

    std::vector<double> phase_grid() const {
        std::vector<double> g;
        for (int i = 0; i < phase_points; ++i) g.push_back(2.0 * std::numbers::pi * i / phase_points);
        return g;
    }

    DephasingOptions dephasing_options() const {
        DephasingOptions o;
        o.size = size;
        o.seed = seed;
        o.t_end = dephasing_t_end;
        o.snapshot_dt = dephasing_dt;
        o.fit_window = fit_window;
        o.recurrence_window = recurrence_window;
        o.lattice = lattice == "auto" ? (rigid ? InitialLattice::optimal : InitialLattice::wigner)
                                      : lattice_from_string(lattice);
        o.integrator = integrator;
        o.workers = workers;
        return o;
    }
};

inline json to_json(const RunConfig& c) {
    json pulse{{"preset", c.pulse.preset},
               {"photon_ev", c.pulse.photon_ev},
               {"relative_phase", c.pulse.relative_phase}};
    if (c.pulse.t_center) pulse["t_center"] = *c.pulse.t_center;
    if (c.pulse.t_width) pulse["t_width"] = *c.pulse.t_width;
    if (c.pulse.eps_w) pulse["eps_w"] = *c.pulse.eps_w;
    if (c.pulse.eps_2w) pulse["eps_2w"] = *c.pulse.eps_2w;
    return {{"command", c.command},
            {"chain", to_json(c.chain)},
            {"rigid", c.rigid},
            {"pulse", pulse},
            {"ensemble",
             {{"size", c.size},
              {"seed", c.seed},
              {"electronic", c.electronic},
              {"lattice", c.lattice},
              {"t_end", c.t_end},
              {"snapshot_dt", c.snapshot_dt},
              {"rdm_dt", c.rdm_dt},
              {"asymptotic_window", c.asymptotic_window},
              {"chunk_size", c.chunk_size},
              {"compact_orbitals", c.compact_orbitals},
              {"write_trajectories", c.write_trajectories}}},
            {"integrator", to_json(c.integrator)},
            {"workers", c.workers},
            {"output", c.output},
            {"scan",
             {{"start", c.scan_start},
              {"stop", c.scan_stop},
              {"step", c.scan_step},
              {"phase_points", c.phase_points}}},
            {"dephasing",
             {{"sizes", c.dephasing_sizes},
              {"t_end", c.dephasing_t_end},
              {"snapshot_dt", c.dephasing_dt},
              {"fit_window", c.fit_window},
              {"recurrence_window", c.recurrence_window}}}};
}

/// Resolved configuration plus the code version; readable as a config.
inline json manifest_json(const RunConfig& c) {
    json j = to_json(c);
    j["code_version"] = code_version;
    return j;
}

namespace detail {

/// Character iterator that counts the newlines it has stepped over.
class LineCountingIterator {
public:
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    LineCountingIterator(const char* p, int* line) : p_(p), line_(line) {}
    reference operator*() const { return *p_; }
    LineCountingIterator& operator++() {
        if (*p_ == '\n') ++*line_;
        ++p_;
        return *this;
    }
    LineCountingIterator operator++(int) {
        auto old = *this;
        ++*this;
        return old;
    }
    bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_;
    int* line_;
};

/// SAX consumer that records the source line of every object key and
/// array element, keyed by JSON pointer.
class KeyLineRecorder : public nlohmann::json_sax<json> {
public:
    KeyLineRecorder(const int* line, std::map<std::string, int>& lines) : line_(line), lines_(lines) {}

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override {
        value();
        stack_.push_back({false, path(), -1});
        return true;
    }
    bool key(string_t& k) override {
        auto& top = stack_.back();
        pending_ = top.path + "/" + k;
        lines_[pending_] = *line_ + 1;
        return true;
    }
    bool end_object() override {
        stack_.pop_back();
        return true;
    }
    bool start_array(std::size_t) override {
        value();
        stack_.push_back({true, path(), -1});
        return true;
    }
    bool end_array() override {
        stack_.pop_back();
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
        return false;
    }

private:
    struct Frame {
        bool array;
        std::string path;
        int index;
    };

    std::string path() const { return pending_; }

    bool value() {
        if (!stack_.empty() && stack_.back().array) {
            auto& top = stack_.back();
            pending_ = top.path + "/" + std::to_string(++top.index);
            lines_.emplace(pending_, *line_ + 1);
        }
        return true;
    }

    const int* line_;
    std::map<std::string, int>& lines_;
    std::vector<Frame> stack_;
    std::string pending_;
};

} // namespace detail

/// Parsed JSON document with the line of each key.
struct ConfigDocument {
    std::string source;
    json root;
    std::map<std::string, int> lines;

    int line_of(const std::string& pointer) const {
        auto it = lines.find(pointer);
        return it == lines.end() ? 0 : it->second;
    }

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        const int line = line_of(pointer);
        throw ConfigError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                          message);
    }
};

inline ConfigDocument parse_config_text(const std::string& text, const std::string& source) {
    ConfigDocument doc;
    doc.source = source;
    try {
        doc.root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        const auto pos = what.find("] ");
        throw ConfigError(source + ": " + (pos == std::string::npos ? what : what.substr(pos + 2)));
    }
    int line = 0;
    detail::KeyLineRecorder recorder(&line, doc.lines);
    const char* begin = text.data();
    json::sax_parse(detail::LineCountingIterator(begin, &line),
                    detail::LineCountingIterator(begin + text.size(), &line), &recorder);
    if (!doc.root.is_object()) throw ConfigError(source + ":1: configuration must be a JSON object");
    return doc;
}

namespace detail {

/// Reads fields of one object, rejecting unknown keys and wrong types with
/// the offending line.
class SectionReader {
public:
    SectionReader(const ConfigDocument& doc, const json& obj, std::string pointer,
                  std::vector<std::string> allowed)
        : doc_(doc), obj_(obj), pointer_(std::move(pointer)) {
        if (!obj_.is_object()) doc_.fail(pointer_, name(pointer_) + " must be an object");
        for (const auto& [key, value] : obj_.items()) {
            (void)value;
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string valid;
                for (const auto& a : allowed) valid += (valid.empty() ? "" : ", ") + a;
                doc_.fail(pointer_ + "/" + key, "unknown key \"" + key + "\" in " +
                                                    name(pointer_) + "; valid keys: " + valid);
            }
        }
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& raw(const std::string& key) const { return obj_.at(key); }

    std::string pointer(const std::string& key) const { return pointer_ + "/" + key; }

    template <typename T, typename Check>
    void read(const std::string& key, T& out, Check check, const char* requirement) const {
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        T value{};
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) doc_.fail(pointer(key), label(key) + " must be true or false");
            value = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer())
                doc_.fail(pointer(key), label(key) + " must be an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned() || v.get<long long>() >= 0)
                    value = v.get<T>();
                else
                    doc_.fail(pointer(key), label(key) + " must be non-negative");
            } else {
                value = v.get<T>();
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) doc_.fail(pointer(key), label(key) + " must be a number");
            value = v.get<T>();
        } else {
            if (!v.is_string()) doc_.fail(pointer(key), label(key) + " must be a string");
            value = v.get<T>();
        }
        if (!check(value)) doc_.fail(pointer(key), label(key) + " " + requirement);
        out = value;
    }

    template <typename T>
    void read(const std::string& key, T& out) const {
        read(key, out, [](const T&) { return true; }, "");
    }

    std::string label(const std::string& key) const {
        const std::string section = name(pointer_);
        return section.empty() ? key : section + "." + key;
    }

private:
    static std::string name(const std::string& pointer) {
        std::string s = pointer;
        if (!s.empty() && s[0] == '/') s.erase(0, 1);
        for (auto& c : s)
            if (c == '/') c = '.';
        return s;
    }

    const ConfigDocument& doc_;
    const json& obj_;
    std::string pointer_;
};

inline bool is_positive(double v) { return v > 0.0 && std::isfinite(v); }

} // namespace detail

/// Applies the keys present in `doc` on top of `base`.
inline RunConfig read_config(const ConfigDocument& doc, RunConfig base = {}) {
    using detail::SectionReader;
    RunConfig c = std::move(base);
    const auto positive = [](double v) { return detail::is_positive(v); };
    const auto at_least_one = [](int v) { return v >= 1; };

    SectionReader top(doc, doc.root, "",
                      {"command", "chain", "rigid", "pulse", "ensemble", "integrator", "workers",
                       "output", "scan", "dephasing", "code_version"});
    top.read("command", c.command,
             [](const std::string& s) {
                 const auto& n = command_names();
                 return std::find(n.begin(), n.end(), s) != n.end();
             },
             "must be one of optimize, modes, sample, trajectory, ensemble, scan-frequency, "
             "scan-phase, dephasing");
    top.read("rigid", c.rigid);
    top.read("workers", c.workers, at_least_one, "must be >= 1");
    top.read("output", c.output, [](const std::string& s) { return !s.empty(); },
             "must not be empty");

    if (top.has("chain")) {
        SectionReader s(doc, top.raw("chain"), "/chain",
                        {"n_sites", "n_electrons", "t0", "alpha", "spring_k", "mass", "lattice_a",
                         "mass_multiplier", "hbar", "center_coordinates"});
        s.read("n_sites", c.chain.n_sites, [](int n) { return n >= 2 && n % 2 == 0; },
               "must be even and >= 2");
        if (!s.has("n_electrons") && s.has("n_sites")) c.chain.n_electrons = c.chain.n_sites;
        s.read("n_electrons", c.chain.n_electrons,
               [&](int n) { return n > 0 && n <= 2 * c.chain.n_sites; },
               "must lie in (0, 2*n_sites]");
        for (const char* key : {"t0", "alpha", "spring_k", "mass", "lattice_a", "mass_multiplier", "hbar"}) {
            double* field = nullptr;
            const std::string k = key;
            if (k == "t0") field = &c.chain.t0;
            else if (k == "alpha") field = &c.chain.alpha;
            else if (k == "spring_k") field = &c.chain.spring_k;
            else if (k == "mass") field = &c.chain.mass;
            else if (k == "lattice_a") field = &c.chain.lattice_a;
            else if (k == "mass_multiplier") field = &c.chain.mass_multiplier;
            else field = &c.chain.hbar;
            s.read(k, *field, positive, "must be strictly positive");
        }
        s.read("center_coordinates", c.chain.center_coordinates);
    }

    if (top.has("pulse")) {
        SectionReader s(doc, top.raw("pulse"), "/pulse",
                        {"preset", "photon_ev", "relative_phase", "t_center", "t_width", "eps_w",
                         "eps_2w"});
        s.read("preset", c.pulse.preset);
        if (c.pulse.preset != "none") {
            try {
                (void)make_pulse(c.pulse.preset, 1.0);
            } catch (const ConfigError& e) {
                doc.fail(s.pointer("preset"), std::string(e.what()) + " (or none)");
            }
        }
        s.read("photon_ev", c.pulse.photon_ev, [](double v) { return v >= 0.0 && std::isfinite(v); },
               "must be >= 0");
        s.read("relative_phase", c.pulse.relative_phase);
        auto optional_field = [&](const char* key, std::optional<double>& out, bool strictly) {
            if (!s.has(key)) return;
            double v = 0.0;
            s.read(std::string(key), v,
                   [&](double x) { return std::isfinite(x) && (strictly ? x > 0.0 : x >= 0.0); },
                   strictly ? "must be strictly positive" : "must be >= 0");
            out = v;
        };
        optional_field("t_center", c.pulse.t_center, false);
        optional_field("t_width", c.pulse.t_width, true);
        optional_field("eps_w", c.pulse.eps_w, false);
        optional_field("eps_2w", c.pulse.eps_2w, false);
    }

    if (top.has("ensemble")) {
        SectionReader s(doc, top.raw("ensemble"), "/ensemble",
                        {"size", "seed", "electronic", "lattice", "t_end", "snapshot_dt", "rdm_dt",
                         "asymptotic_window", "chunk_size", "compact_orbitals",
                         "write_trajectories"});
        s.read("size", c.size, at_least_one, "must be >= 1");
        s.read("seed", c.seed);
        s.read("electronic", c.electronic,
               [](const std::string& v) {
                   return v == "ground_determinant" || v == "homo_lumo_superposition";
               },
               "must be ground_determinant or homo_lumo_superposition");
        s.read("lattice", c.lattice,
               [](const std::string& v) { return v == "wigner" || v == "optimal" || v == "auto"; },
               "must be wigner, optimal or auto");
        s.read("t_end", c.t_end, [](double v) { return std::isfinite(v); }, "must be finite");
        s.read("snapshot_dt", c.snapshot_dt, positive, "must be strictly positive");
        s.read("rdm_dt", c.rdm_dt, positive, "must be strictly positive");
        if (c.rdm_dt < c.snapshot_dt ||
            std::abs(std::round(c.rdm_dt / c.snapshot_dt) * c.snapshot_dt - c.rdm_dt) > 1e-9 * c.rdm_dt)
            doc.fail(s.has("rdm_dt") ? s.pointer("rdm_dt") : s.pointer("snapshot_dt"),
                     "ensemble.rdm_dt must be a multiple of ensemble.snapshot_dt");
        s.read("asymptotic_window", c.asymptotic_window, positive, "must be strictly positive");
        s.read("chunk_size", c.chunk_size, at_least_one, "must be >= 1");
        s.read("compact_orbitals", c.compact_orbitals);
        s.read("write_trajectories", c.write_trajectories);
    }

    if (top.has("integrator")) {
        SectionReader s(doc, top.raw("integrator"), "/integrator",
                        {"rel_tol", "abs_tol", "initial_step", "min_step"});
        s.read("rel_tol", c.integrator.rel_tol, positive, "must be strictly positive");
        s.read("abs_tol", c.integrator.abs_tol, positive, "must be strictly positive");
        s.read("initial_step", c.integrator.initial_step, positive, "must be strictly positive");
        s.read("min_step", c.integrator.min_step, positive, "must be strictly positive");
    }

    if (top.has("scan")) {
        SectionReader s(doc, top.raw("scan"), "/scan", {"start", "stop", "step", "phase_points"});
        s.read("start", c.scan_start, [](double v) { return v >= 0.0; }, "must be >= 0");
        s.read("stop", c.scan_stop, [&](double v) { return v >= c.scan_start; },
               "must be >= scan.start");
        s.read("step", c.scan_step, positive, "must be strictly positive");
        s.read("phase_points", c.phase_points, at_least_one, "must be >= 1");
    }

    if (top.has("dephasing")) {
        SectionReader s(doc, top.raw("dephasing"), "/dephasing",
                        {"sizes", "t_end", "snapshot_dt", "fit_window", "recurrence_window"});
        if (s.has("sizes")) {
            const json& arr = s.raw("sizes");
            if (!arr.is_array() || arr.empty())
                doc.fail(s.pointer("sizes"), "dephasing.sizes must be a non-empty array");
            c.dephasing_sizes.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const json& v = arr[i];
                if (!v.is_number_integer() || v.get<int>() < 2 || v.get<int>() % 2 != 0)
                    doc.fail(s.pointer("sizes") + "/" + std::to_string(i),
                             "dephasing.sizes entries must be even integers >= 2");
                c.dephasing_sizes.push_back(v.get<int>());
            }
        }
        s.read("t_end", c.dephasing_t_end, positive, "must be strictly positive");
        s.read("snapshot_dt", c.dephasing_dt, positive, "must be strictly positive");
        s.read("fit_window", c.fit_window, positive, "must be strictly positive");
        s.read("recurrence_window", c.recurrence_window, positive, "must be strictly positive");
    }
    return c;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    return read_config(parse_config_text(read_file(path), path), std::move(base));
}

/// Cross-field checks that are not tied to one key.
inline void validate_config(const RunConfig& c) {
    c.resolved_chain().validate();
    if (const auto p = c.resolved_pulse()) p->validate();
    if ((c.command == "scan-frequency" || c.command == "scan-phase") && c.pulse.preset == "none")
        throw ConfigError("a control scan needs a pulse preset");
    c.ensemble_spec().validate();
}

} // namespace sshdyn

#endif // SSHDYN_CONFIG_HPP

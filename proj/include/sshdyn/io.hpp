#ifndef SSHDYN_IO_HPP
#define SSHDYN_IO_HPP

// JSON forms of the parameter records and small file helpers.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sshdyn/chain.hpp"
#include "sshdyn/errors.hpp"
#include "sshdyn/laser.hpp"
#include "sshdyn/propagator.hpp"

namespace sshdyn {

using json = nlohmann::json;

inline json to_json(const ChainParams& p) {
    return {{"n_sites", p.n_sites},
            {"n_electrons", p.n_electrons},
            {"t0", p.t0},
            {"alpha", p.alpha},
            {"spring_k", p.spring_k},
            {"mass", p.mass},
            {"lattice_a", p.lattice_a},
            {"mass_multiplier", p.mass_multiplier},
            {"hbar", p.hbar},
            {"center_coordinates", p.center_coordinates}};
}

inline ChainParams chain_from_json(const json& j) {
    ChainParams p;
    p.n_sites = j.value("n_sites", p.n_sites);
    p.n_electrons = j.value("n_electrons", p.n_sites);
    p.t0 = j.value("t0", p.t0);
    p.alpha = j.value("alpha", p.alpha);
    p.spring_k = j.value("spring_k", p.spring_k);
    p.mass = j.value("mass", p.mass);
    p.lattice_a = j.value("lattice_a", p.lattice_a);
    p.mass_multiplier = j.value("mass_multiplier", p.mass_multiplier);
    p.hbar = j.value("hbar", p.hbar);
    p.center_coordinates = j.value("center_coordinates", p.center_coordinates);
    return p;
}

inline json to_json(const PulseSpec& p) {
    return {{"t_center", p.t_center}, {"t_width", p.t_width}, {"eps_w", p.eps_w},
            {"eps_2w", p.eps_2w},     {"omega", p.omega},     {"phi_w", p.phi_w},
            {"phi_2w", p.phi_2w}};
}

inline PulseSpec pulse_from_json(const json& j) {
    PulseSpec p;
    p.t_center = j.at("t_center").get<double>();
    p.t_width = j.at("t_width").get<double>();
    p.eps_w = j.at("eps_w").get<double>();
    p.eps_2w = j.at("eps_2w").get<double>();
    p.omega = j.at("omega").get<double>();
    p.phi_w = j.at("phi_w").get<double>();
    p.phi_2w = j.at("phi_2w").get<double>();
    return p;
}

inline json to_json(const IntegratorOptions& o) {
    return {{"rel_tol", o.rel_tol},
            {"abs_tol", o.abs_tol},
            {"initial_step", o.initial_step},
            {"min_step", o.min_step}};
}

inline IntegratorOptions integrator_from_json(const json& j) {
    IntegratorOptions o;
    o.rel_tol = j.value("rel_tol", o.rel_tol);
    o.abs_tol = j.value("abs_tol", o.abs_tol);
    o.initial_step = j.value("initial_step", o.initial_step);
    o.min_step = j.value("min_step", o.min_step);
    return o;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot write " + tmp);
        os << content;
        if (!os) throw ConfigError("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// CSV writer with a fixed number of significant digits.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os, int precision = 12) : os_(os) {
        os_.precision(precision);
    }

    void header(std::span<const std::string> names) {
        for (std::size_t i = 0; i < names.size(); ++i) os_ << (i ? "," : "") << names[i];
        os_ << '\n';
    }

    void row(std::span<const double> values) {
        for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
        os_ << '\n';
    }

private:
    std::ostream& os_;
};

} // namespace sshdyn

#endif // SSHDYN_IO_HPP

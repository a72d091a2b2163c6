#ifndef SSHDYN_LASER_HPP
#define SSHDYN_LASER_HPP

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "sshdyn/chain.hpp"

namespace sshdyn {

/// Two-colour Gaussian pulse
///   E(t) = exp(-(t - t_center)^2 / t_width^2)
///          (eps_w cos(omega t + phi_w) + eps_2w cos(2 omega t + phi_2w)).
struct PulseSpec {
    double t_center = 50.0;   // fs
    double t_width = 10.0;    // fs
    double eps_w = 0.0;       // V/A
    double eps_2w = 0.0;      // V/A
    double omega = 0.0;       // 1/fs
    double phi_w = 0.0;       // rad
    double phi_2w = 0.0;      // rad

    double photon_energy(double hbar = hbar_ev_fs) const { return omega * hbar; }
    void set_photon_energy(double ev, double hbar = hbar_ev_fs) { omega = ev / hbar; }

    /// phi_2w - 2 phi_w
    double relative_phase() const { return phi_2w - 2.0 * phi_w; }
    void set_relative_phase(double dphi) {
        phi_w = 0.0;
        phi_2w = dphi;
    }

    /// Time after which the envelope is below e^-9.
    double switch_off_time() const { return t_center + 3.0 * t_width; }

    void validate() const {
        if (!(t_width > 0.0)) throw ConfigError("pulse t_width must be positive");
        if (eps_w < 0.0 || eps_2w < 0.0) throw ConfigError("pulse amplitudes must be >= 0");
        if (!std::isfinite(omega) || omega < 0.0)
            throw ConfigError("pulse frequency must be finite and >= 0");
    }
};

struct PulsePreset {
    std::string_view name;
    double t_center;
    double t_width;
    double eps_2w;
    double ratio;  // eps_w / eps_2w
};

inline constexpr std::array<PulsePreset, 4> pulse_presets{{
    {"f1", 900.0, 300.0, 8.70e-3, 2.82},
    {"f2", 900.0, 300.0, 4.00e-2, 2.82},
    {"f3", 50.0, 10.0, 8.70e-3, 2.82},
    {"f4", 50.0, 10.0, 4.00e-2, 2.82},
}};

inline std::string preset_names() {
    std::string s;
    for (const auto& p : pulse_presets) {
        if (!s.empty()) s += ", ";
        s += p.name;
    }
    return s;
}

/// Named pulse with the given photon energy (eV) and relative phase (rad).
inline PulseSpec make_pulse(std::string_view preset, double photon_ev, double relative_phase = 0.0,
                            double hbar = hbar_ev_fs) {
    for (const auto& p : pulse_presets) {
        if (p.name != preset) continue;
        PulseSpec pulse;
        pulse.t_center = p.t_center;
        pulse.t_width = p.t_width;
        pulse.eps_2w = p.eps_2w;
        pulse.eps_w = p.ratio * p.eps_2w;
        pulse.set_photon_energy(photon_ev, hbar);
        pulse.set_relative_phase(relative_phase);
        return pulse;
    }
    throw ConfigError("unknown pulse preset \"" + std::string(preset) +
                      "\"; valid presets: " + preset_names());
}

inline double envelope(const PulseSpec& pulse, double t) {
    const double s = (t - pulse.t_center) / pulse.t_width;
    return std::exp(-s * s);
}

inline double field_at(const PulseSpec& pulse, double t) {
    return envelope(pulse, t) * (pulse.eps_w * std::cos(pulse.omega * t + pulse.phi_w) +
                                 pulse.eps_2w * std::cos(2.0 * pulse.omega * t + pulse.phi_2w));
}

/// dE/dt, analytic.
inline double field_rate(const PulseSpec& pulse, double t) {
    const double env = envelope(pulse, t);
    const double denv = -2.0 * (t - pulse.t_center) / (pulse.t_width * pulse.t_width) * env;
    const double a = pulse.omega * t + pulse.phi_w;
    const double b = 2.0 * pulse.omega * t + pulse.phi_2w;
    const double carrier = pulse.eps_w * std::cos(a) + pulse.eps_2w * std::cos(b);
    const double dcarrier =
        -pulse.omega * pulse.eps_w * std::sin(a) - 2.0 * pulse.omega * pulse.eps_2w * std::sin(b);
    return denv * carrier + env * dcarrier;
}

/// Field of an optional pulse; no pulse means field-free evolution.
inline double field_at(const std::optional<PulseSpec>& pulse, double t) {
    return pulse ? field_at(*pulse, t) : 0.0;
}

} // namespace sshdyn

#endif // SSHDYN_LASER_HPP

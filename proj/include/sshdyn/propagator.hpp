#ifndef SSHDYN_PROPAGATOR_HPP
#define SSHDYN_PROPAGATOR_HPP

// Mean-field (Ehrenfest) equations of motion for one quantum-classical
// trajectory and an adaptive Runge-Kutta driver for them.
//
// State vector layout: interior displacements (N-2), interior momenta (N-2),
// then the orbital amplitudes column by column as interleaved (re, im)
// pairs. The clamped end sites are not part of the state.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sshdyn/chain.hpp"
#include "sshdyn/dop853.hpp"
#include "sshdyn/errors.hpp"
#include "sshdyn/hamiltonian.hpp"
#include "sshdyn/laser.hpp"

namespace sshdyn {

struct TrajectoryState {
    double t = 0.0;
    LatticeState lattice;
    OrbitalSet orbitals;
};

struct IntegratorOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    double initial_step = 0.01;  // fs
    double min_step = 1e-9;      // fs; smaller steps abort the trajectory
};

using StateVector = std::vector<double>;

/// Right-hand side of the coupled nuclear and orbital equations.
class EhrenfestSystem {
public:
    EhrenfestSystem(const ChainParams& params, std::optional<PulseSpec> pulse,
                    Eigen::MatrixXcd gamma0)
        : params_(params),
          pulse_(std::move(pulse)),
          gamma0_(std::move(gamma0)),
          n_(params.n_sites),
          k_(static_cast<int>(gamma0_.rows())),
          m_(params.n_sites - 2),
          u_(Eigen::VectorXd::Zero(n_)),
          hop_(n_ - 1),
          onsite_(n_),
          bond_(n_ - 1),
          site_(n_),
          positions_(n_) {
        for (int i = 0; i < n_; ++i) positions_[i] = params.reference_position(i);
        // Propagate natural orbitals: gamma0 = V diag(w) V^+ gives
        // rho = conj(Phi) diag(w) Phi^T with Phi = Psi conj(V).
        rotated_ = !OrbitalSet{Eigen::MatrixXcd(0, k_), gamma0_}.has_diagonal_gamma();
        if (rotated_) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma0_);
            weights_ = es.eigenvalues();
            to_natural_ = es.eigenvectors().conjugate();
            from_natural_ = es.eigenvectors().transpose();
        } else {
            weights_ = gamma0_.diagonal().real();
        }
    }

    int n_sites() const { return n_; }
    int n_orbitals() const { return k_; }
    std::size_t dimension() const { return 2 * static_cast<std::size_t>(m_) + 2 * n_ * k_; }
    const ChainParams& params() const { return params_; }
    const std::optional<PulseSpec>& pulse() const { return pulse_; }
    const Eigen::MatrixXcd& gamma0() const { return gamma0_; }

    double field(double t) const { return field_at(pulse_, t); }

    StateVector pack(const TrajectoryState& s) const {
        StateVector x(dimension());
        for (int i = 0; i < m_; ++i) {
            x[i] = s.lattice.u[i + 1];
            x[m_ + i] = s.lattice.p[i + 1];
        }
        if (rotated_)
            orbitals_of(x) = s.orbitals.orbitals * to_natural_;
        else
            orbitals_of(x) = s.orbitals.orbitals;
        return x;
    }

    TrajectoryState unpack(const StateVector& x, double t) const {
        TrajectoryState s;
        s.t = t;
        s.lattice = LatticeState::at_rest(n_);
        for (int i = 0; i < m_; ++i) {
            s.lattice.u[i + 1] = x[i];
            s.lattice.p[i + 1] = x[m_ + i];
        }
        if (rotated_)
            s.orbitals.orbitals = orbitals_of(x) * from_natural_;
        else
            s.orbitals.orbitals = orbitals_of(x);
        s.orbitals.gamma0 = gamma0_;
        return s;
    }

    void operator()(const StateVector& x, StateVector& dxdt, double t) const {
        const double e = field(t);
        const double inv_mass = 1.0 / params_.effective_mass();
        for (int i = 0; i < m_; ++i) u_[i + 1] = x[i];

        for (int i = 0; i + 1 < n_; ++i)
            hop_[i] = -params_.t0 + params_.alpha * (u_[i + 1] - u_[i]);
        if (e != 0.0)
            for (int i = 0; i < n_; ++i) onsite_[i] = (positions_[i] + u_[i]) * e;
        else
            onsite_.setZero();

        // orbitals: d psi/dt = -(i/hbar) h psi, h tridiagonal
        const double rate = 1.0 / params_.hbar;
        const double* psi = x.data() + 2 * m_;
        double* dpsi = dxdt.data() + 2 * m_;
        for (int col = 0; col < k_; ++col) {
            const double* a = psi + 2 * n_ * col;
            double* da = dpsi + 2 * n_ * col;
            for (int i = 0; i < n_; ++i) {
                double re = onsite_[i] * a[2 * i];
                double im = onsite_[i] * a[2 * i + 1];
                if (i > 0) {
                    re += hop_[i - 1] * a[2 * i - 2];
                    im += hop_[i - 1] * a[2 * i - 1];
                }
                if (i + 1 < n_) {
                    re += hop_[i] * a[2 * i + 2];
                    im += hop_[i] * a[2 * i + 3];
                }
                da[2 * i] = rate * im;
                da[2 * i + 1] = -rate * re;
            }
        }

        // forces from the instantaneous density
        density(x);
        for (int i = 1; i + 1 < n_; ++i) {
            double f = -params_.spring_k * (2.0 * u_[i] - u_[i + 1] - u_[i - 1]) +
                       2.0 * params_.alpha * (bond_[i] - bond_[i - 1]);
            if (e != 0.0) f -= e * (site_[i] - 1.0);
            dxdt[i - 1] = x[m_ + i - 1] * inv_mass;
            dxdt[m_ + i - 1] = f;
        }
    }

private:
    using OrbitalMap = Eigen::Map<Eigen::MatrixXcd>;
    using ConstOrbitalMap = Eigen::Map<const Eigen::MatrixXcd>;

    ConstOrbitalMap orbitals_of(const StateVector& x) const {
        return {reinterpret_cast<const complex*>(x.data() + 2 * m_), n_, k_};
    }
    OrbitalMap orbitals_of(StateVector& x) const {
        return {reinterpret_cast<complex*>(x.data() + 2 * m_), n_, k_};
    }

    /// Re rho(i, i+1) into bond_ and rho(i, i) into site_.
    void density(const StateVector& x) const {
        bond_.setZero();
        site_.setZero();
        const double* psi = x.data() + 2 * m_;
        for (int col = 0; col < k_; ++col) {
            const double w = weights_[col];
            if (w == 0.0) continue;
            const double* a = psi + 2 * n_ * col;
            for (int i = 0; i < n_; ++i) {
                site_[i] += w * (a[2 * i] * a[2 * i] + a[2 * i + 1] * a[2 * i + 1]);
                if (i + 1 < n_)
                    bond_[i] += w * (a[2 * i] * a[2 * i + 2] + a[2 * i + 1] * a[2 * i + 3]);
            }
        }
    }

    ChainParams params_;
    std::optional<PulseSpec> pulse_;
    Eigen::MatrixXcd gamma0_;
    int n_, k_, m_;
    bool rotated_ = false;
    Eigen::VectorXd weights_;
    Eigen::MatrixXcd to_natural_;
    Eigen::MatrixXcd from_natural_;
    mutable Eigen::VectorXd u_;
    mutable Eigen::VectorXd hop_;
    mutable Eigen::VectorXd onsite_;
    mutable Eigen::VectorXd bond_;
    mutable Eigen::VectorXd site_;
    Eigen::VectorXd positions_;
};

/// Time derivatives of (u, p, orbitals) as a TrajectoryState-shaped record:
/// `lattice.u` holds du/dt, `lattice.p` dp/dt and `orbitals.orbitals` the
/// orbital rates. End-site entries are zero.
inline TrajectoryState derivatives(const ChainParams& params, const std::optional<PulseSpec>& pulse,
                                   const TrajectoryState& state) {
    EhrenfestSystem sys(params, pulse, state.orbitals.gamma0);
    const StateVector x = sys.pack(state);
    StateVector dx(x.size());
    sys(x, dx, state.t);
    return sys.unpack(dx, state.t);
}

/// Adaptive integration of one trajectory. The controller takes steps of a
/// Dormand-Prince 8(5,3) pair and lands exactly on each
/// requested time, where `observer` is called.
class Propagator {
public:
    using Observer = std::function<void(const TrajectoryState&)>;

    Propagator(const ChainParams& params, std::optional<PulseSpec> pulse,
               IntegratorOptions options = {})
        : params_(params), pulse_(std::move(pulse)), options_(options) {
        params_.validate();
        if (pulse_) pulse_->validate();
    }

    /// Integrates from `initial.t` through every time in `sample_times`
    /// (ascending, or all descending for backward integration) and on to
    /// `t_end`. Returns the final state.
    TrajectoryState run(const TrajectoryState& initial, double t_end,
                        std::span<const double> sample_times, const Observer& observer) const {
        initial.lattice.check_size(params_.n_sites);
        if (initial.orbitals.n_sites() != params_.n_sites)
            throw ConfigError("orbital set does not match the chain size");
        EhrenfestSystem sys(params_, pulse_, initial.orbitals.gamma0);
        Integration run{Dop853(options_.rel_tol, options_.abs_tol), sys.pack(initial), {},
                        initial.t, 0.0};
        const double direction = t_end >= initial.t ? 1.0 : -1.0;
        run.step = direction * options_.initial_step;
        run.dxdt.resize(run.x.size());
        sys(run.x, run.dxdt, run.t);

        double previous = initial.t;
        for (double target : sample_times) {
            if (direction * (target - previous) < 0.0 || direction * (target - t_end) > 0.0)
                throw ConfigError("sample times must be monotone and within the run interval");
            advance(sys, run, target, direction);
            previous = target;
            if (observer) observer(sys.unpack(run.x, run.t));
        }
        advance(sys, run, t_end, direction);
        return sys.unpack(run.x, run.t);
    }

    /// Snapshots at every sample time.
    std::vector<TrajectoryState> propagate(const TrajectoryState& initial, double t_end,
                                           std::span<const double> sample_times) const {
        std::vector<TrajectoryState> out;
        out.reserve(sample_times.size());
        run(initial, t_end, sample_times, [&](const TrajectoryState& s) { out.push_back(s); });
        return out;
    }

    const ChainParams& params() const { return params_; }
    const std::optional<PulseSpec>& pulse() const { return pulse_; }
    const IntegratorOptions& options() const { return options_; }

private:
    struct Integration {
        Dop853 stepper;
        StateVector x;
        StateVector dxdt;
        double t;
        double step;
    };

    void advance(const EhrenfestSystem& sys, Integration& run, double target,
                 double direction) const {
        while (direction * (target - run.t) > 0.0) {
            const double remaining = target - run.t;
            const bool truncated = std::abs(run.step) >= std::abs(remaining);
            double h = truncated ? remaining : run.step;
            const double natural = run.step;
            if (run.stepper.try_step(sys, run.x, run.dxdt, run.t, h)) {
                if (truncated) {
                    // land exactly on the target and keep the unconstrained step
                    run.t = target;
                    run.step = std::abs(h) > std::abs(natural) ? h : natural;
                } else {
                    run.step = h;
                }
                check_finite(run.x, run.t);
            } else {
                run.step = h;
                if (std::abs(h) < options_.min_step)
                    throw PropagationError("step size underflow", run.t);
            }
        }
    }

    static void check_finite(const StateVector& x, double t) {
        for (double v : x)
            if (!std::isfinite(v)) throw PropagationError("non-finite state", t);
    }

    ChainParams params_;
    std::optional<PulseSpec> pulse_;
    IntegratorOptions options_;
};

/// Uniform grid t0, t0 + dt, ... up to and including t_end (within dt/1000).
inline std::vector<double> time_grid(double t0, double t_end, double dt) {
    if (!(dt > 0.0)) throw ConfigError("snapshot spacing must be positive");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((t_end - t0) / dt + 1e-3));
    grid.reserve(count + 1);
    for (long i = 0; i <= count; ++i) grid.push_back(t0 + static_cast<double>(i) * dt);
    return grid;
}

} // namespace sshdyn

#endif // SSHDYN_PROPAGATOR_HPP

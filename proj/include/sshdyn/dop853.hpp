#ifndef SSHDYN_DOP853_HPP
#define SSHDYN_DOP853_HPP

// Explicit Runge-Kutta pair of Dormand and Prince, order 8 with embedded
// 5th and 3rd order error estimators (Hairer, Norsett & Wanner), with the
// usual step-size controller.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sshdyn {

namespace detail {
inline constexpr std::array<double, 12> dop853_c{0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0};
inline constexpr std::array<std::array<double, 12>, 12> dop853_a{{
    {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0}},
    {{0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0}},
    {{0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0}},
    {{-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0}},
    {{2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0}}}};
inline constexpr std::array<double, 12> dop853_b{0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259};
inline constexpr std::array<double, 13> dop853_e3{-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0};
inline constexpr std::array<double, 13> dop853_e5{0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0};
} // namespace detail

/// Single adaptive DOP853 stepper on a flat real state. The system is a
/// callable `f(const std::vector<double>& x, std::vector<double>& dxdt, double t)`.
class Dop853 {
public:
    using State = std::vector<double>;

    Dop853(double rel_tol, double abs_tol) : rel_tol_(rel_tol), abs_tol_(abs_tol) {}

    /// Attempts one step of size `h` from (x, t). On success x and t are
    /// advanced and `h` holds the suggested next step; on rejection x and t
    /// are unchanged and `h` is reduced. `dxdt` must hold f(x, t) on entry
    /// and holds f at the new point after a successful step.
    template <typename System>
    bool try_step(const System& system, State& x, State& dxdt, double& t, double& h) {
        const std::size_t n = x.size();
        resize(n);
        k_[0] = dxdt;
        for (int s = 1; s < 12; ++s) {
            stage_ = x;
            for (int j = 0; j < s; ++j) axpy(h * detail::dop853_a[s][j], k_[j], stage_);
            system(stage_, k_[s], t + detail::dop853_c[s] * h);
        }
        next_ = x;
        for (int j = 0; j < 12; ++j) axpy(h * detail::dop853_b[j], k_[j], next_);
        system(next_, k_[12], t + h);

        std::fill(e5_.begin(), e5_.end(), 0.0);
        std::fill(e3_.begin(), e3_.end(), 0.0);
        for (int j = 0; j < 13; ++j) {
            axpy(detail::dop853_e5[j], k_[j], e5_);
            axpy(detail::dop853_e3[j], k_[j], e3_);
        }
        double err5 = 0.0, err3 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = abs_tol_ + rel_tol_ * std::max(std::abs(x[i]), std::abs(next_[i]));
            const double e5 = e5_[i] / scale;
            const double e3 = e3_[i] / scale;
            err5 += e5 * e5;
            err3 += e3 * e3;
        }
        double error = 0.0;
        if (err5 > 0.0 || err3 > 0.0)
            error = std::abs(h) * err5 / std::sqrt((err5 + 0.01 * err3) * static_cast<double>(n));

        constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
        if (error < 1.0) {
            double factor = error == 0.0 ? max_factor
                                         : std::min(max_factor, safety * std::pow(error, -1.0 / 8.0));
            if (rejected_) factor = std::min(1.0, factor);
            rejected_ = false;
            t += h;
            x.swap(next_);
            dxdt = k_[12];
            h *= factor;
            return true;
        }
        h *= std::max(min_factor, safety * std::pow(error, -1.0 / 8.0));
        rejected_ = true;
        return false;
    }

private:
    static void axpy(double a, const State& x, State& y) {
        if (a == 0.0) return;
        const std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
    }

    void resize(std::size_t n) {
        if (stage_.size() == n) return;
        for (auto& k : k_) k.assign(n, 0.0);
        stage_.assign(n, 0.0);
        next_.assign(n, 0.0);
        e5_.assign(n, 0.0);
        e3_.assign(n, 0.0);
    }

    double rel_tol_;
    double abs_tol_;
    bool rejected_ = false;
    std::array<State, 13> k_;
    State stage_;
    State next_;
    State e5_;
    State e3_;
};

} // namespace sshdyn

#endif // SSHDYN_DOP853_HPP

#ifndef SSHDYN_STATS_HPP
#define SSHDYN_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sshdyn {

/// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            compensation += (sum - t) + x;
        else
            compensation += (x - t) + sum;
        sum = t;
    }

    void merge(const CompensatedSum& other) {
        add(other.sum);
        add(other.compensation);
    }

    double value() const { return sum + compensation; }
};

/// Count, sum and sum of squares of a sample, mergeable.
struct Moments {
    long count = 0;
    CompensatedSum first;
    CompensatedSum second;

    void add(double x) {
        ++count;
        first.add(x);
        second.add(x * x);
    }

    void merge(const Moments& other) {
        count += other.count;
        first.merge(other.first);
        second.merge(other.second);
    }

    double mean() const { return count > 0 ? first.value() / count : 0.0; }

    double variance() const {
        if (count < 2) return 0.0;
        const double m = mean();
        const double v = (second.value() - count * m * m) / (count - 1);
        return v > 0.0 ? v : 0.0;
    }

    double stddev() const { return std::sqrt(variance()); }

    /// sample std / sqrt(count)
    double standard_error() const { return count > 0 ? stddev() / std::sqrt(double(count)) : 0.0; }
};

inline Moments moments_of(std::span<const double> xs) {
    Moments m;
    for (double x : xs) m.add(x);
    return m;
}

/// Ordinary least squares y = a + b x; returns {a, b}.
inline std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {(sy - b * sx) / n, b};
}

} // namespace sshdyn

#endif // SSHDYN_STATS_HPP

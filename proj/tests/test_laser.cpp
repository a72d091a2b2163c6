#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sshdyn/laser.hpp"

using namespace sshdyn;

TEST(Laser, StrongShortPresetAmplitudes) {
    const PulseSpec p = make_pulse("f4", 1.3);
    EXPECT_NEAR(p.eps_2w, 0.04, 1e-15);
    EXPECT_NEAR(p.eps_w + p.eps_2w, 0.1528, 1e-12);
    EXPECT_EQ(p.t_center, 50.0);
    EXPECT_EQ(p.t_width, 10.0);
    double peak = 0.0;
    for (double t = 0.0; t <= 100.0; t += 0.001) peak = std::max(peak, std::abs(field_at(p, t)));
    EXPECT_LE(peak, 0.1528 + 1e-12);
    EXPECT_GT(peak, 0.145);
}

TEST(Laser, FieldMatchesClosedForm) {
    const PulseSpec p = make_pulse("f1", 1.18, 0.7);
    const double w = 1.18 / 0.6582119569;
    const double t = 900.5;
    const double env = std::exp(-std::pow((t - 900.0) / 300.0, 2));
    const double ref = env * (2.82 * 8.7e-3 * std::cos(w * t) + 8.7e-3 * std::cos(2.0 * w * t + 0.7));
    EXPECT_NEAR(field_at(p, t), ref, 1e-15);
    EXPECT_NEAR(p.photon_energy(), 1.18, 1e-14);
    EXPECT_NEAR(p.relative_phase(), 0.7, 1e-15);
}

TEST(Laser, EnvelopeBoundsAndSwitchOff) {
    for (const char* name : {"f1", "f2", "f3", "f4"}) {
        const PulseSpec p = make_pulse(name, 1.0, 1.0);
        const double amp = p.eps_w + p.eps_2w;
        for (double t = 0.0; t < 2000.0; t += 0.37)
            EXPECT_LE(std::abs(field_at(p, t)), amp * envelope(p, t) + 1e-15);
        const double off = p.switch_off_time();
        EXPECT_LT(std::abs(field_at(p, off + 1.0)), amp * std::exp(-9.0));
    }
}

TEST(Laser, ShiftingBothPhasesByPiReversesTheField) {
    PulseSpec a = make_pulse("f3", 1.4, 0.3);
    PulseSpec b = a;
    b.phi_w += std::numbers::pi;
    b.phi_2w += std::numbers::pi;
    for (double t = 20.0; t < 80.0; t += 0.53) EXPECT_NEAR(field_at(a, t), -field_at(b, t), 1e-15);
}

TEST(Laser, FieldRateMatchesFiniteDifference) {
    const PulseSpec p = make_pulse("f4", 1.2, 2.0);
    for (double t = 25.0; t < 75.0; t += 1.7) {
        const double h = 1e-5;
        const double fd = (field_at(p, t + h) - field_at(p, t - h)) / (2.0 * h);
        EXPECT_NEAR(field_rate(p, t), fd, 1e-8);
    }
}

TEST(Laser, UnknownPresetNamesTheValidOnes) {
    try {
        make_pulse("f9", 1.0);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "unknown pulse preset \"f9\"; valid presets: f1, f2, f3, f4");
    }
}

TEST(Laser, NoPulseMeansNoField) {
    EXPECT_EQ(field_at(std::optional<PulseSpec>{}, 50.0), 0.0);
}

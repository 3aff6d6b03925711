#include <gtest/gtest.h>

#include "oracles.hpp"
#include "omc/optomech.hpp"

using namespace omc;
using namespace omc::literals;

namespace {

OpticalCavity paper_cavity() { return OpticalCavity::from_total_and_intrinsic(194.8_THz, 5.14_GHz, 1.31_GHz); }
MechanicalMode paper_mode() { return {2.905_GHz, 13.8_kHz, 0.041, {}}; }

double oracle_x(double energy, double g0 = 845e3)
{
    return oracle::exponent(energy, g0, 194.8e12, 2.905e9, 5.14e9, 3.83e9);
}

} // namespace

TEST(Scattering, WritePulseIsAboutSixHundredthsOfAPercent)
{
    const double E = optomech::pulse_energy_at_device(25e-9, 40e-9, 0.55);
    EXPECT_DOUBLE_EQ(E, 25e-9 * 40e-9 * 0.55);
    const double p = optomech::scattering_probability(Side::blue, E, 845_kHz, paper_cavity(), paper_mode());
    EXPECT_NEAR(p, std::expm1(oracle_x(E)), 1e-15);
    EXPECT_GT(p, 5e-4);
    EXPECT_LT(p, 7e-4);
}

TEST(Scattering, ZeroEnergyZeroProbability)
{
    for (Side s : {Side::red, Side::blue})
        EXPECT_EQ(optomech::scattering_probability(s, 0.0, 845_kHz, paper_cavity(), paper_mode()), 0.0);
}

TEST(Scattering, ExponentToProbability)
{
    EXPECT_NEAR(optomech::probability_from_exponent(Side::red, 0.02), 0.0198013267, 1e-10);
    EXPECT_NEAR(optomech::probability_from_exponent(Side::blue, 0.02), 0.0202013400, 1e-10);
    EXPECT_NEAR(optomech::scattering_exponent(1e-15, 845_kHz, paper_cavity(), paper_mode()), oracle_x(1e-15),
                1e-12 * oracle_x(1e-15));
}

TEST(Scattering, RejectsAboveValidityCeiling)
{
    const double x_per_j = oracle_x(1.0);
    const double E = 0.6 / x_per_j; // blue p = e^0.6 - 1 > 0.5
    try {
        optomech::scattering_probability(Side::blue, E, 845_kHz, paper_cavity(), paper_mode());
        FAIL() << "expected a model error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::model);
    }
    EXPECT_THROW(optomech::scattering_probability(Side::red, -1.0, 845_kHz, paper_cavity(), paper_mode()), Error);
}

TEST(Scattering, BlueMinusRedEqualsProduct)
{
    for (double x = 0.0; x <= 0.4; x += 0.01) {
        const double b = optomech::probability_from_exponent(Side::blue, x);
        const double r = optomech::probability_from_exponent(Side::red, x);
        EXPECT_NEAR(b - r, b * r, 1e-15);
    }
}

TEST(Scattering, LinearizationErrorBound)
{
    for (double x = 1e-4; x <= 0.1; x *= 1.3)
        for (Side s : {Side::red, Side::blue})
            EXPECT_LE(std::abs(optomech::probability_from_exponent(s, x) - x) / x, x);
}

TEST(Scattering, PowerInversionRoundTrip)
{
    for (Side s : {Side::red, Side::blue}) {
        const double P = optomech::peak_power_for_probability(s, 0.02, 40e-9, 0.55, 845_kHz, paper_cavity(), paper_mode());
        const double E = optomech::pulse_energy_at_device(P, 40e-9, 0.55);
        EXPECT_NEAR(optomech::scattering_probability(s, E, 845_kHz, paper_cavity(), paper_mode()), 0.02, 1e-14);
    }
}

TEST(SidebandRates, Examples)
{
    auto r = optomech::sideband_rates(0.0, 0.02, 0.01, 0.023);
    EXPECT_EQ(r.gamma_r, 0.0);
    EXPECT_DOUBLE_EQ(r.gamma_b, 0.01 * 0.023);
    r = optomech::sideband_rates(1.0, 0.02, 0.02, 0.5);
    EXPECT_DOUBLE_EQ(r.gamma_b / r.gamma_r, 2.0);
    r = optomech::sideband_rates(0.041, 0.02, 0.02, 0.023);
    EXPECT_NEAR(r.gamma_r, 1.886e-5, 1e-8);
    EXPECT_THROW(optomech::sideband_rates(-1.0, 0.02, 0.02, 0.023), Error);
}

TEST(Asymmetry, RatioArithmetic)
{
    EXPECT_DOUBLE_EQ(optomech::occupation_from_asymmetry(4.0, 104.0).value, 0.04);
    EXPECT_EQ(optomech::occupation_from_asymmetry(0.0, 3.0).value, 0.0);
    try {
        optomech::occupation_from_asymmetry(5.0, 5.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::model);
    }
}

TEST(Asymmetry, RoundTripOverGrid)
{
    for (double n = 0.0; n <= 10.0; n += 0.5)
        for (double p : {1e-4, 1e-3, 0.02, 0.1})
            for (double eta : {0.01, 0.023, 0.5, 1.0}) {
                const auto r = optomech::sideband_rates(n, p, p, eta);
                // normalize by p eta as the estimator expects
                const double n_hat = optomech::occupation_from_asymmetry(r.gamma_r / (p * eta), r.gamma_b / (p * eta)).value;
                EXPECT_NEAR(n_hat, n, 1e-12 * (1 + n));
            }
}

TEST(Asymmetry, ErrorPropagationMatchesFiniteDifferences)
{
    const optomech::Estimate r{0.041, 0.003}, b{1.041, 0.015};
    const auto est = optomech::occupation_from_asymmetry(r, b);
    auto f = [](double x, double y) { return x / (y - x); };
    const double h = 1e-7;
    const double dr = (f(r.value + h, b.value) - f(r.value - h, b.value)) / (2 * h);
    const double db = (f(r.value, b.value + h) - f(r.value, b.value - h)) / (2 * h);
    EXPECT_NEAR(est.std_error, std::hypot(dr * r.std_error, db * b.std_error), 1e-9);
}

TEST(Asymmetry, NormalizedRatesHandleUnequalPowers)
{
    const double n = 0.3, pr = 0.02, pb = 0.005, eta = 0.023, N = 1e9;
    const auto rates = optomech::sideband_rates(n, pr, pb, eta);
    const auto gr = optomech::normalized_rate(rates.gamma_r * N, N, pr, eta);
    const auto gb = optomech::normalized_rate(rates.gamma_b * N, N, pb, eta);
    EXPECT_NEAR(optomech::occupation_from_asymmetry(gr, gb).value, n, 1e-12);
    EXPECT_NEAR(gr.std_error, std::sqrt(rates.gamma_r * N) / (N * pr * eta), 1e-15);
    EXPECT_THROW(optomech::normalized_rate(1, 0, pr, eta), Error);
}

TEST(G0Calibration, RecoversGeneratingCoupling)
{
    std::vector<optomech::CalibrationPoint> pts;
    for (double P : {5e-9, 10e-9, 25e-9, 50e-9, 100e-9, 200e-9, 400e-9, 750e-9}) {
        const double E = optomech::pulse_energy_at_device(P, 40e-9, 0.55);
        for (Side s : {Side::red, Side::blue})
            pts.push_back({E, optomech::scattering_probability(s, E, 845_kHz, paper_cavity(), paper_mode()), s});
    }
    const auto cal = optomech::g0_from_calibration(pts, paper_cavity(), paper_mode());
    EXPECT_NEAR(cal.g0.hz / 845e3, 1.0, 1e-6);
    EXPECT_NEAR(cal.intercept, 0.0, 1e-12);
}

TEST(G0Calibration, PublishedSlopeImpliesCouplingWithinTenPercent)
{
    // slope 2.6e-2 per microwatt of peak power at the fiber, 40 ns pulses, 0.55 coupling
    const double per_watt = 2.6e-2 / 1e-6;
    std::vector<optomech::CalibrationPoint> pts;
    for (double P : {0.1e-6, 0.3e-6, 0.5e-6, 0.75e-6}) {
        const double E = optomech::pulse_energy_at_device(P, 40e-9, 0.55);
        pts.push_back({E, per_watt * P, Side::red});
    }
    // linear data in p; map to exponent-linear by staying in the small-p regime
    const auto cal = optomech::g0_from_calibration(pts, paper_cavity(), paper_mode());
    EXPECT_NEAR(cal.g0.hz / 845e3, 1.0, 0.10);
    // independent inversion of the slope
    const double g0 = std::sqrt(per_watt / (40e-9 * 0.55) / oracle_x(1.0, 1.0));
    EXPECT_NEAR(g0 / 845e3, 1.0, 0.10);
}

TEST(G0Calibration, DegenerateInputs)
{
    EXPECT_THROW(optomech::g0_from_calibration({{0.0, 0.0, Side::red}}, paper_cavity(), paper_mode()), Error);
    EXPECT_THROW(optomech::g0_from_calibration({{1e-15, 1e-3, Side::red}, {1e-15, 2e-3, Side::red}}, paper_cavity(),
                                               paper_mode()),
                 Error);
}

TEST(Cooperativity, Examples)
{
    EXPECT_EQ(optomech::cooperativity(845_kHz, 0.0, paper_cavity(), paper_mode()), 0.0);
    EXPECT_NEAR(optomech::cooperativity(845_kHz, 496.7, paper_cavity(), paper_mode()), 20.0, 0.02);
    const double c1 = optomech::cooperativity(845_kHz, 100.0, paper_cavity(), paper_mode());
    const double c3 = optomech::cooperativity(845_kHz, 300.0, paper_cavity(), paper_mode());
    EXPECT_NEAR(c3 / c1, 3.0, 1e-14);
}

TEST(Cooperativity, ScalesLinearlyWithScatteringProbability)
{
    // C per pulse photon number grows in proportion to pulse energy, hence to p_s at small p_s
    std::vector<double> ratio;
    for (double P : {50e-9, 100e-9, 200e-9, 400e-9}) {
        const double E = optomech::pulse_energy_at_device(P, 40e-9, 0.55);
        const double p = optomech::scattering_probability(Side::red, E, 845_kHz, paper_cavity(), paper_mode());
        const double nc = optomech::pulse_intracavity_photons(Side::red, E, 40e-9, paper_cavity(), paper_mode());
        ratio.push_back(optomech::cooperativity(845_kHz, nc, paper_cavity(), paper_mode()) /
                        optomech::exponent_from_probability(Side::red, p));
    }
    for (double r : ratio)
        EXPECT_NEAR(r / ratio.front(), 1.0, 1e-12);
    // C / x = (f_c / f_l) / (2 pi gamma_m T) for a rectangular pulse of length T
    const double expect = (194.8e12 / (194.8e12 - 2.905e9)) / (2 * oracle::pi * 13.8e3 * 40e-9);
    EXPECT_NEAR(ratio.front() / expect, 1.0, 1e-12);
}

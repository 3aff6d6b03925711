#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "omc/config.hpp"
#include "omc/core.hpp"

using namespace omc;
using namespace omc::literals;

namespace {

const char* minimal_config = R"(
cavity.f_c = 194.8e12
cavity.kappa = 5.14e9     # total
cavity.kappa_i = 1.31e9
mode.f_m = 2.905e9
mode.gamma_m = 13.8e3
mode.n_baseline = 0.041
optomech.g0 = 845e3
)";

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected omc::Error";
    return ErrorKind::numerical;
}

} // namespace

TEST(Frequency, StoresOrdinaryHertz)
{
    const Frequency k = 5.14_GHz;
    EXPECT_DOUBLE_EQ(k.hz, 5.14e9);
    EXPECT_DOUBLE_EQ(k.angular(), 2 * std::numbers::pi * 5.14e9);
    EXPECT_DOUBLE_EQ((845_kHz).hz, 845e3);
    EXPECT_DOUBLE_EQ((13.8_kHz).hz, 13.8e3);
}

TEST(OpticalCavity, EnforcesSumRule)
{
    const OpticalCavity c(194.8_THz, 5.14_GHz, 1.31_GHz, 3.83_GHz);
    EXPECT_DOUBLE_EQ(c.kappa_e().hz, 3.83e9);
    EXPECT_EQ(kind_of([] { OpticalCavity(194.8_THz, 5.14_GHz, 1.31_GHz, 3.9_GHz); }), ErrorKind::validation);
    // within 1 ppm is accepted
    EXPECT_NO_THROW(OpticalCavity(194.8_THz, 5.14_GHz, 1.31_GHz, Frequency(3.83e9 + 1e3)));
}

TEST(OpticalCavity, RejectsIntrinsicAboveTotal)
{
    EXPECT_EQ(kind_of([] { OpticalCavity::from_total_and_intrinsic(194.8_THz, 1_GHz, 2_GHz); }),
              ErrorKind::validation);
}

TEST(MechanicalMode, RequiresResolvedResonance)
{
    MechanicalMode m{Frequency(1e3), Frequency(2e3), 0.0, {}};
    EXPECT_THROW(m.validate(), Error);
    m.f_m = Frequency(2.905e9);
    EXPECT_NO_THROW(m.validate());
    EXPECT_NEAR(MechanicalMode({2.905_GHz, 13.8_kHz, 0.0, {}}).quality_factor(), 2.105e5, 1e2);
}

TEST(HeatingParams, DecayMustExceedRise)
{
    HeatingParams h;
    h.tau_rise = 1e-6;
    h.tau_decay = 1e-7;
    EXPECT_THROW(h.validate(), Error);
}

TEST(PulseSequence, RejectsOverlapAndShortPeriod)
{
    PulseSequence s;
    s.pulses = {Pulse{PulseLabel::write, Side::blue, 0.0, 40e-9, 25e-9}, Pulse{PulseLabel::read, Side::red, 20e-9, 40e-9, 750e-9}};
    EXPECT_THROW(s.validate(), Error);
    s.pulses[1].start = 190e-9;
    EXPECT_NO_THROW(s.validate());
    s.repetition_rate = 1e8; // 10 ns period
    EXPECT_THROW(s.validate(), Error);
}

TEST(DetectionChain, ProductEfficiency)
{
    DetectionChain d;
    EXPECT_NEAR(d.eta_det(), 0.023, 1e-15);
    d.eta_fc = 1.5;
    EXPECT_THROW(d.validate(), Error);
}

TEST(Config, PaperFileLoads)
{
    const ExperimentConfig c = load_config(std::string(OMC_SOURCE_DIR) + "/configs/paper.cfg");
    EXPECT_DOUBLE_EQ(c.cavity.kappa().hz, 5.14e9);
    EXPECT_DOUBLE_EQ(c.mode.gamma_m.hz, 13.8e3);
    EXPECT_EQ(c.sequence.pulses.size(), 2u);
    EXPECT_EQ(c.sequence.pulses[0].label, PulseLabel::write);
    EXPECT_EQ(c.sequence.pulses[1].side, Side::red);
    EXPECT_NEAR(c.detection.eta_det(), 0.023, 1e-12);
}

TEST(Config, IntrinsicAboveTotalIsValidationError)
{
    std::string text = minimal_config;
    text += "cavity.kappa_e = 0\n";
    text.replace(text.find("kappa_i = 1.31e9"), 16, "kappa_i = 6e9");
    EXPECT_EQ(kind_of([&] { parse_config(text); }), ErrorKind::validation);
    try {
        parse_config(text);
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("kappa_i"), std::string::npos) << e.what();
    }
}

TEST(Config, EmptyHeatingBlockMeansNoDelayedHeating)
{
    const ExperimentConfig c = parse_config(minimal_config);
    EXPECT_EQ(c.mode.heating.n_instant, 0.0);
    EXPECT_EQ(c.mode.heating.amplitude_per_ps, 0.0);
    EXPECT_TRUE(c.mode.heating.calibration.empty());
}

TEST(Config, EtaDevDefaultsToExternalFraction)
{
    const ExperimentConfig c = parse_config(minimal_config);
    EXPECT_NEAR(c.detection.eta_dev, 3.83 / 5.14, 1e-12);
}

TEST(Config, MalformedInputIsConfigError)
{
    EXPECT_EQ(kind_of([] { parse_config("cavity.kappa 5e9\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_config("cavity.kappa = five\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_config("no.such.key = 1\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_config("mode.f_m = 1e9\nmode.f_m = 2e9\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_config("pulse.1.side = red\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { load_config("/nonexistent/file.cfg"); }), ErrorKind::io);
}

TEST(Config, RoundTripIsFieldwiseIdentical)
{
    const ExperimentConfig a = load_config(std::string(OMC_SOURCE_DIR) + "/configs/paper.cfg");
    const ExperimentConfig b = parse_config(serialize_config(a));
    EXPECT_TRUE(a == b);
    EXPECT_EQ(serialize_config(a), serialize_config(b));
    EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(Config, RoundTripOfAwkwardValues)
{
    ExperimentConfig a = parse_config(minimal_config);
    a.mode.n_baseline = 0.1 + 0.2; // not exactly representable in short decimal
    a.detection.filter_suppression_db = 94.35;
    a.mode.heating.calibration = {{0.013, 0.25, 0.02}, {0.05, 1.0 / 3.0, 0.08}};
    a.sequence.pulses = {Pulse{PulseLabel::other, Side::red, 1e-7, 3e-8, 1.0 / 7.0, -1e-8, 5e-8}};
    const ExperimentConfig b = parse_config(serialize_config(a));
    EXPECT_TRUE(a == b);
}

TEST(Config, HashDistinguishesConfigs)
{
    ExperimentConfig a = parse_config(minimal_config);
    ExperimentConfig b = a;
    b.mode.n_baseline = 0.042;
    EXPECT_NE(config_hash(a), config_hash(b));
}

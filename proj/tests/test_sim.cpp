#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "omc/optomech.hpp"
#include "omc/sim.hpp"
#include "omc/stats.hpp"

using namespace omc;

namespace {

double power_for(Side s, double p, const ExperimentConfig& c)
{
    return optomech::peak_power_for_probability(s, p, 40e-9, c.detection.eta_fc, c.g0, c.cavity, c.mode);
}

ExperimentConfig quiet_config(double eta_det = -1)
{
    ExperimentConfig c;
    c.detection.eta_dev = 0.75;
    if (eta_det >= 0) {
        c.detection.eta_dev = 1.0;
        c.detection.eta_fc = 1.0;
        c.detection.eta_rest = eta_det;
    }
    c.detection.dark_rate = 0.0;
    c.detection.filter_suppression_db = 300.0;
    return c;
}

ExperimentConfig single_pulse(Side side, double p_s, long long n, double eta_det = -1)
{
    ExperimentConfig c = quiet_config(eta_det);
    c.sequence.pulses = {Pulse{side == Side::red ? PulseLabel::read : PulseLabel::write, side, 1e-6, 40e-9,
                               power_for(side, p_s, c)}};
    c.sequence.n_sequences = n;
    return c;
}

ExperimentConfig write_read(double pw, double pr, long long n, double eta_det = -1)
{
    ExperimentConfig c = quiet_config(eta_det);
    c.sequence.pulses = {Pulse{PulseLabel::write, Side::blue, 1e-6, 40e-9, power_for(Side::blue, pw, c)},
                         Pulse{PulseLabel::read, Side::red, 1.19e-6, 40e-9, power_for(Side::red, pr, c)}};
    c.sequence.n_sequences = n;
    return c;
}

} // namespace

TEST(CounterRng, PoissonMoments)
{
    sim::CounterRng rng(11, 3);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double k = rng.poisson(2.5);
        s += k;
        s2 += k * k;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 2.5, 5 * std::sqrt(2.5 / n));
    EXPECT_NEAR(var, 2.5, 0.05);
    EXPECT_THROW(rng.poisson(600), Error);
}

TEST(Simulate, SilentSetupGivesNoRecords)
{
    ExperimentConfig c = quiet_config();
    c.sequence.pulses = {Pulse{PulseLabel::write, Side::blue, 1e-6, 40e-9, 0.0}};
    c.sequence.n_sequences = 100000;
    const auto r = sim::simulate(c, 1);
    EXPECT_TRUE(r.records.records.empty());
    EXPECT_EQ(r.records.n_sequences, 100000);
}

TEST(Simulate, RedClickCountsArePoissonAroundExpectedMean)
{
    const long long N = 10000000;
    const auto c = single_pulse(Side::red, 0.02, N);
    const auto plan = sim::plan_pulses(c);
    const double p = 0.02 * 0.041 * c.detection.eta_det();
    EXPECT_NEAR(plan[0].click_prob, p, 1e-12);
    EXPECT_NEAR(p, 1.9e-5, 0.05e-5);
    const auto r = sim::simulate(c, 77, 4);
    const double k = static_cast<double>(r.records.records.size());
    EXPECT_NEAR(k, p * N, 4 * std::sqrt(p * N));

    // dispersion of counts over 100 blocks
    std::vector<double> blocks(100, 0.0);
    for (const auto& rec : r.records.records)
        blocks[static_cast<std::size_t>(rec.sequence_index * 100 / N)] += 1;
    const double mu = p * N / 100;
    double chi2 = 0;
    for (double b : blocks)
        chi2 += (b - mu) * (b - mu) / mu;
    boost::math::chi_squared dist(99);
    EXPECT_GT(chi2, boost::math::quantile(dist, 0.0005));
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.9995));
}

TEST(Simulate, DarkCountsScaleWithRateAndWindow)
{
    ExperimentConfig c = quiet_config();
    c.detection.dark_rate = 2e3;
    Pulse p{PulseLabel::read, Side::red, 1e-6, 40e-9, 0.0};
    p.window_length = 200e-9;
    c.sequence.pulses = {p};
    c.sequence.n_sequences = 2000000;
    const auto r = sim::simulate(c, 5, 3);
    const double expect = 2e3 * 200e-9 * 2e6;
    EXPECT_NEAR(static_cast<double>(r.records.records.size()), expect, 4 * std::sqrt(expect));
    for (const auto& rec : r.records.records) {
        EXPECT_EQ(rec.origin, sim::Origin::dark);
        EXPECT_GE(rec.click_time, 1e-6);
        EXPECT_LT(rec.click_time, 1.2e-6);
    }
}

TEST(Simulate, LeakageFollowsSuppression)
{
    ExperimentConfig c = single_pulse(Side::red, 0.02, 1);
    c.detection.filter_suppression_db = 100.0;
    const double at100 = sim::leakage_mean(c.sequence.pulses[0], c);
    c.detection.filter_suppression_db = 110.0;
    EXPECT_NEAR(sim::leakage_mean(c.sequence.pulses[0], c) / at100, 0.1, 1e-12);
    // cavity suppression plus two 40 MHz Lorentzian filter stages at f_m
    const double stage = 10 * std::log10(1 + std::pow(2.905e9 / 20e6, 2));
    EXPECT_NEAR(sim::default_filter_suppression_db(c.cavity, c.mode), oracle::suppression_db(5.14e9, 2.905e9) + 2 * stage,
                1e-9);
}

TEST(Simulate, DeterministicAndThreadIndependent)
{
    ExperimentConfig c = write_read(0.05, 0.1, 200000);
    c.detection.dark_rate = 1e3;
    const auto a = sim::simulate(c, 42, 1);
    const auto b = sim::simulate(c, 42, 1);
    const auto d = sim::simulate(c, 42, 7);
    EXPECT_FALSE(a.records.records.empty());
    EXPECT_EQ(a.records.records, b.records.records);
    EXPECT_EQ(a.records.records, d.records.records);
    const auto e = sim::simulate(c, 43, 1);
    EXPECT_NE(a.records.records, e.records.records);
}

TEST(Simulate, DifferentSeedsAreUncorrelated)
{
    const ExperimentConfig c = single_pulse(Side::blue, 0.3, 400000, 1.0);
    const auto a = stats::clicked_sequences(sim::simulate(c, 1).records, PulseLabel::write);
    const auto b = stats::clicked_sequences(sim::simulate(c, 2).records, PulseLabel::write);
    const auto cc = stats::coincidence_counts(a, b, c.sequence.n_sequences, 0);
    const auto g = stats::g2_from_counts(cc, 0);
    EXPECT_LT(g.ci_low, 1.0 + 0.02);
    EXPECT_GT(g.ci_high, 1.0 - 0.02);
    EXPECT_NEAR(g.value, 1.0, 0.03);
}

TEST(Simulate, RecoversConfiguredRatesWithinThreeStandardErrors)
{
    const long long N = 4000000;
    const ExperimentConfig c = write_read(0.01, 0.05, N, 0.4);
    const auto r = sim::simulate(c, 9, 4);
    const auto plan = r.report.pulses;
    const double pw = plan[1].joint.p_write, pr = plan[1].joint.p_read;
    const double kw = static_cast<double>(r.report.clicks_per_label.at(PulseLabel::write));
    const double kr = static_cast<double>(r.report.clicks_per_label.at(PulseLabel::read));
    EXPECT_NEAR(kw / N, pw, 3 * std::sqrt(pw * (1 - pw) / N));
    EXPECT_NEAR(kr / N, pr, 3 * std::sqrt(pr * (1 - pr) / N));
}

TEST(Simulate, ConditionalReadProbabilityMatchesOracle)
{
    const long long N = 4000000;
    ExperimentConfig c = write_read(0.01, 0.02, N, 1.0);
    c.mode.n_baseline = 0.0;
    const auto r = sim::simulate(c, 21, 8);
    const auto w = stats::clicked_sequences(r.records, PulseLabel::write);
    const auto rd = stats::clicked_sequences(r.records, PulseLabel::read);
    const auto cc = stats::coincidence_counts(w, rd, N, 0);
    const auto g = oracle::gaussian_g2(0.0, r.report.pulses[0].p_s, r.report.pulses[1].p_s, 1.0);
    const double cond = static_cast<double>(cc.n_coinc) / static_cast<double>(cc.n_w);
    const double expect = g.p_wr / g.p_w;
    EXPECT_NEAR(cond, expect, 4 * std::sqrt(expect * (1 - expect) / static_cast<double>(cc.n_w)));
}

TEST(Simulate, ReportTotalsMatchRecords)
{
    ExperimentConfig c = write_read(0.05, 0.1, 300000);
    c.detection.dark_rate = 5e3;
    c.detection.filter_suppression_db = 60.0;
    const auto r = sim::simulate(c, 3, 2);
    long long per_label = 0, per_origin = 0, per_pulse = 0;
    for (const auto& [k, v] : r.report.clicks_per_label)
        per_label += v;
    for (const auto& [k, v] : r.report.clicks_per_origin)
        per_origin += v;
    for (long long v : r.report.clicks_per_pulse)
        per_pulse += v;
    const auto n = static_cast<long long>(r.records.records.size());
    EXPECT_EQ(per_label, n);
    EXPECT_EQ(per_origin, n);
    EXPECT_EQ(per_pulse, n);
    EXPECT_GT(r.report.clicks_per_origin.at(sim::Origin::dark), 0);
    EXPECT_GT(r.report.clicks_per_origin.at(sim::Origin::leakage), 0);
    for (std::size_t i = 1; i < r.records.records.size(); ++i)
        EXPECT_LE(r.records.records[i - 1].sequence_index, r.records.records[i].sequence_index);
}

TEST(Windows, FullWindowKeepsEverything)
{
    const ExperimentConfig c = write_read(0.05, 0.1, 200000, 0.5);
    const auto r = sim::simulate(c, 8);
    const auto kept = sim::filter_windows(r.records, c.sequence,
                                          {{PulseLabel::write, 0.0, 1.0}, {PulseLabel::read, 0.0, 1.0}});
    EXPECT_EQ(kept.records, r.records.records);
    EXPECT_EQ(kept.n_sequences, r.records.n_sequences);
}

TEST(Windows, FirstHalfKeepsHalfOfSignal)
{
    const ExperimentConfig c = write_read(0.05, 0.1, 1000000, 0.5);
    const auto r = sim::simulate(c, 8, 4);
    const auto all = sim::count_in_windows(r.records, c.sequence, {});
    const auto half = sim::count_in_windows(r.records, c.sequence, {{PulseLabel::read, 0.0, 0.5}});
    const double n = static_cast<double>(all.at(PulseLabel::read));
    EXPECT_NEAR(static_cast<double>(half.at(PulseLabel::read)), n / 2, 4 * std::sqrt(n / 4));
    EXPECT_EQ(half.at(PulseLabel::write), all.at(PulseLabel::write));
}

TEST(Windows, TrimmingThinsDarkCountsProportionally)
{
    ExperimentConfig c = quiet_config();
    c.detection.dark_rate = 5e4;
    c.sequence.pulses = {Pulse{PulseLabel::read, Side::red, 1e-6, 40e-9, 0.0}};
    c.sequence.n_sequences = 2000000;
    const auto r = sim::simulate(c, 12, 4);
    const double all = static_cast<double>(r.records.records.size());
    const double part = static_cast<double>(
        sim::count_in_windows(r.records, c.sequence, {{PulseLabel::read, 0.25, 0.5}})[PulseLabel::read]);
    EXPECT_NEAR(part, all / 4, 4 * std::sqrt(all * 3 / 16));
}

TEST(Windows, EmptyWindowIsDomainError)
{
    ExperimentConfig c = write_read(0.05, 0.1, 10);
    const auto r = sim::simulate(c, 1);
    try {
        sim::count_in_windows(r.records, c.sequence, {{PulseLabel::read, 0.6, 0.6}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
    EXPECT_THROW(sim::count_in_windows(r.records, c.sequence, {{PulseLabel::read, -0.1, 0.5}}), Error);
}

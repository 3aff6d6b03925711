// Monte Carlo generation of time-tagged detector clicks.
//
// Every sequence draws from its own counter-based stream keyed by
// (seed, sequence_index), so output is independent of how sequences are
// split across threads. A red pulse that directly follows a blue pulse is
// treated as the read of a write/read pair: its click is drawn from the joint
// click table of the Fock-space model, evaluated at the occupation seen by
// the write. Any extra occupation accumulated between the two pulses adds
// independent read clicks at rate p_read * dn * eta_det. All other pulses
// click with the weak-drive rates p_s n eta_det (red) and p_s (n + 1) eta_det
// (blue).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "cavity.hpp"
#include "config.hpp"
#include "core.hpp"
#include "dynamics.hpp"
#include "fock.hpp"
#include "optomech.hpp"

namespace omc::sim {

/// Stateless mixing function; a stream is (key, counter) -> mix(key + counter * gamma).
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull))) {}

    std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson by inversion; intended for the small means of dark and leakage counts.
    int poisson(double mean)
    {
        if (mean <= 0)
            return 0;
        require(mean < 500, ErrorKind::domain, "poisson: mean too large for inversion sampling");
        double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u >= cdf && k < 10000) {
            ++k;
            p *= mean / k;
            cdf += p;
            if (p == 0.0)
                break;
        }
        return k;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

enum class Origin { signal, dark, leakage };

inline const char* to_string(Origin o)
{
    switch (o) {
    case Origin::signal: return "signal";
    case Origin::dark: return "dark";
    default: return "leakage";
    }
}

struct TimeTagRecord {
    long long sequence_index = 0;
    PulseLabel pulse_label = PulseLabel::other;
    double click_time = 0.0; // s within the sequence
    Origin origin = Origin::signal;
    int pulse_index = -1;    // not serialized; -1 when unknown

    bool operator==(const TimeTagRecord& o) const
    {
        return sequence_index == o.sequence_index && pulse_label == o.pulse_label &&
               click_time == o.click_time && origin == o.origin;
    }
};

/// Click records plus the number of sequences they were drawn from.
struct RecordSet {
    long long n_sequences = 0;
    std::vector<TimeTagRecord> records;
};

struct PulsePlan {
    PulseLabel label;
    Side side;
    double p_s;
    double occupation;      // ground truth at the pulse
    double click_prob;      // unpaired signal click probability
    int paired_with = -1;   // index of the write pulse for a read
    fock::JointClickTable joint;
    double extra_read_prob = 0.0;
    double dark_mean;       // expected dark clicks in the window
    double leakage_mean;    // expected leakage clicks
};

struct SimReport {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    long long n_sequences = 0;
    std::vector<PulsePlan> pulses;
    std::vector<long long> clicks_per_pulse;
    std::map<PulseLabel, long long> clicks_per_label;
    std::map<Origin, long long> clicks_per_origin;
};

struct SimResult {
    RecordSet records;
    SimReport report;
};

/// Pump-leakage suppression used when the configuration leaves it unset:
/// cavity filtering of the pump (detuned by f_m) plus `stages` Lorentzian
/// filter cavities of the given bandwidth.
inline double default_filter_suppression_db(const OpticalCavity& c, const MechanicalMode& m,
                                            double filter_bandwidth = 40e6, int stages = 2)
{
    const double cav = cavity::sideband_metrics(c, m).suppression_db;
    const double x = m.f_m.hz / (filter_bandwidth / 2.0);
    return cav + stages * 10.0 * std::log10(1.0 + x * x);
}

/// Expected leakage clicks for one pulse: pump photons at the fiber times the
/// detection path after the device, attenuated by the filter suppression.
inline double leakage_mean(const Pulse& p, const ExperimentConfig& cfg)
{
    const double supp = cfg.detection.filter_suppression_db.value_or(
        default_filter_suppression_db(cfg.cavity, cfg.mode));
    const Frequency f_l = optomech::drive_frequency(p.side, cfg.cavity, cfg.mode);
    const double photons = p.peak_power * p.duration / (planck * f_l.hz);
    return photons * cfg.detection.eta_fc * cfg.detection.eta_rest * std::pow(10.0, -supp / 10.0);
}

inline std::vector<PulsePlan> plan_pulses(const ExperimentConfig& cfg)
{
    const auto& seq = cfg.sequence;
    const double eta = cfg.detection.eta_det();
    const auto events = dynamics::heating_events(seq, cfg.g0, cfg.cavity, cfg.detection, cfg.mode);

    std::vector<PulsePlan> plan;
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) {
        const Pulse& p = seq.pulses[k];
        PulsePlan pp{};
        pp.label = p.label;
        pp.side = p.side;
        pp.p_s = events[k].p_s;
        pp.occupation = dynamics::occupation_after_sequence(events, cfg.mode, p.start);
        const double n_eff = p.side == Side::red ? pp.occupation : pp.occupation + 1.0;
        pp.click_prob = std::min(1.0, pp.p_s * n_eff * eta);
        pp.dark_mean = cfg.detection.dark_rate * p.window();
        pp.leakage_mean = leakage_mean(p, cfg);
        if (p.side == Side::red && k > 0 && seq.pulses[k - 1].side == Side::blue) {
            const PulsePlan& w = plan[k - 1];
            pp.paired_with = static_cast<int>(k - 1);
            pp.joint = fock::joint_click_table(w.occupation, w.p_s, pp.p_s, eta);
            pp.extra_read_prob = std::min(1.0, pp.p_s * std::max(0.0, pp.occupation - w.occupation) * eta);
        }
        plan.push_back(pp);
    }
    return plan;
}

namespace detail {

inline void simulate_range(const ExperimentConfig& cfg, const std::vector<PulsePlan>& plan, std::uint64_t seed,
                           long long first, long long last, std::vector<TimeTagRecord>& out)
{
    const auto& pulses = cfg.sequence.pulses;
    std::vector<char> signal(pulses.size());
    std::vector<TimeTagRecord> local;
    for (long long s = first; s < last; ++s) {
        CounterRng rng(seed, static_cast<std::uint64_t>(s));
        local.clear();
        for (std::size_t k = 0; k < pulses.size(); ++k) {
            const Pulse& p = pulses[k];
            const PulsePlan& pp = plan[k];
            bool click;
            if (pp.paired_with >= 0) {
                const bool wrote = signal[static_cast<std::size_t>(pp.paired_with)];
                click = rng.bernoulli(wrote ? pp.joint.p_read_given_write : pp.joint.p_read_given_none);
                click = rng.bernoulli(pp.extra_read_prob) || click;
            } else if (k + 1 < pulses.size() && plan[k + 1].paired_with == static_cast<int>(k)) {
                click = rng.bernoulli(plan[k + 1].joint.p_write);
            } else {
                click = rng.bernoulli(pp.click_prob);
            }
            signal[k] = click;

            const double w0 = p.window_begin(), w1 = w0 + p.window();
            auto emit = [&](double t, Origin o) {
                if (t >= w0 && t < w1)
                    local.push_back({s, p.label, t, o, static_cast<int>(k)});
            };
            if (click)
                emit(p.start + rng.uniform() * p.duration, Origin::signal);
            for (int i = rng.poisson(pp.dark_mean); i > 0; --i)
                emit(w0 + rng.uniform() * p.window(), Origin::dark);
            for (int i = rng.poisson(pp.leakage_mean); i > 0; --i)
                emit(p.start + rng.uniform() * p.duration, Origin::leakage);
        }
        std::stable_sort(local.begin(), local.end(),
                         [](const TimeTagRecord& a, const TimeTagRecord& b) { return a.click_time < b.click_time; });
        out.insert(out.end(), local.begin(), local.end());
    }
}

} // namespace detail

/// Deterministic in (config, seed); `threads` only changes wall time.
inline SimResult simulate(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads = 1)
{
    cfg.validate();
    SimResult res;
    res.report.seed = seed;
    res.report.config_hash = config_hash(cfg);
    res.report.n_sequences = cfg.sequence.n_sequences;
    res.report.pulses = plan_pulses(cfg);
    res.records.n_sequences = cfg.sequence.n_sequences;

    const long long n = cfg.sequence.n_sequences;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<long long>(n, 256))));
    std::vector<std::vector<TimeTagRecord>> chunks(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            const long long first = n * t / threads, last = n * (t + 1) / threads;
            pool.emplace_back([&, t, first, last] {
                detail::simulate_range(cfg, res.report.pulses, seed, first, last, chunks[t]);
            });
        }
    }
    for (auto& c : chunks)
        res.records.records.insert(res.records.records.end(), c.begin(), c.end());

    res.report.clicks_per_pulse.assign(cfg.sequence.pulses.size(), 0);
    for (const auto& r : res.records.records) {
        ++res.report.clicks_per_pulse[static_cast<std::size_t>(r.pulse_index)];
        ++res.report.clicks_per_label[r.pulse_label];
        ++res.report.clicks_per_origin[r.origin];
    }
    return res;
}

/// Keep the fraction [begin, end] of each labelled pulse, measured from the
/// pulse start in units of its duration.
struct WindowSpec {
    PulseLabel label;
    double begin_fraction = 0.0;
    double end_fraction = 1.0;
};

namespace detail {

inline int locate_pulse(const PulseSequence& seq, const TimeTagRecord& r)
{
    if (r.pulse_index >= 0)
        return r.pulse_index;
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) {
        const Pulse& p = seq.pulses[k];
        if (p.label == r.pulse_label && r.click_time >= p.window_begin() && r.click_time < p.window_begin() + p.window())
            return static_cast<int>(k);
    }
    return -1;
}

} // namespace detail

/// Records that fall inside the trimming windows. Labels without a spec are kept whole.
inline RecordSet filter_windows(const RecordSet& in, const PulseSequence& seq, const std::vector<WindowSpec>& specs)
{
    for (const auto& w : specs) {
        require(w.end_fraction > w.begin_fraction, ErrorKind::domain,
                std::string("count_in_windows: empty window for label ") + to_string(w.label));
        require(w.begin_fraction >= 0 && w.end_fraction <= 1, ErrorKind::domain,
                "count_in_windows: window must lie within the pulse span");
    }
    RecordSet out;
    out.n_sequences = in.n_sequences;
    for (const auto& r : in.records) {
        const auto spec = std::find_if(specs.begin(), specs.end(),
                                       [&](const WindowSpec& w) { return w.label == r.pulse_label; });
        if (spec == specs.end()) {
            out.records.push_back(r);
            continue;
        }
        const int k = detail::locate_pulse(seq, r);
        if (k < 0)
            continue;
        const Pulse& p = seq.pulses[static_cast<std::size_t>(k)];
        const double t0 = p.start + spec->begin_fraction * p.duration;
        const double t1 = p.start + spec->end_fraction * p.duration;
        if (r.click_time >= t0 && r.click_time <= t1)
            out.records.push_back(r);
    }
    return out;
}

inline std::map<PulseLabel, long long> count_in_windows(const RecordSet& in, const PulseSequence& seq,
                                                        const std::vector<WindowSpec>& specs)
{
    std::map<PulseLabel, long long> totals;
    for (const auto& r : filter_windows(in, seq, specs).records)
        ++totals[r.pulse_label];
    return totals;
}

} // namespace omc::sim

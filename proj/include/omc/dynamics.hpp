// Mechanical occupation dynamics: delayed absorption heating, its linear
// superposition over a pulse train, and the thermal spectrum of the mode.
//
// Contributions from separate pulses are summed linearly. That is an
// extrapolation of a single-pulse phenomenological fit, not a derived result.
#pragma once

#include <cmath>
#include <vector>

#include "core.hpp"
#include "optomech.hpp"

namespace omc::dynamics {

struct OccupationTrajectory {
    std::vector<double> times;
    std::vector<double> n_th;
};

/// A exp(-tau/tau_decay) (1 - exp(-tau/tau_rise)) + n_instant
inline double heating_occupation(double tau, const HeatingParams& params, double amplitude, double n_instant)
{
    require(tau >= 0, ErrorKind::domain, "heating_occupation: tau must be non-negative");
    return amplitude * std::exp(-tau / params.tau_decay) * -std::expm1(-tau / params.tau_rise) + n_instant;
}

inline double heating_occupation(double tau, const HeatingParams& params, double amplitude)
{
    return heating_occupation(tau, params, amplitude, params.n_instant);
}

/// Delay at which the delayed-heating term peaks.
inline double heating_peak_delay(const HeatingParams& params)
{
    return params.tau_rise * std::log1p(params.tau_decay / params.tau_rise);
}

struct HeatingResponse {
    double amplitude;
    double n_instant;
};

/// Amplitude and instantaneous occupation for a pulse of scattering
/// probability p_s. With calibration points: piecewise linear, extrapolated
/// linearly from the end segments and clamped at zero.
inline HeatingResponse heating_response(const HeatingParams& params, double p_s)
{
    const auto& cal = params.calibration;
    if (cal.empty())
        return {params.amplitude_per_ps * p_s, params.n_instant};
    if (cal.size() == 1)
        return {std::max(0.0, cal[0].amplitude), std::max(0.0, cal[0].n_instant)};

    std::size_t hi = 1;
    while (hi + 1 < cal.size() && p_s > cal[hi].p_s)
        ++hi;
    const auto& a = cal[hi - 1];
    const auto& b = cal[hi];
    const double w = (p_s - a.p_s) / (b.p_s - a.p_s);
    return {std::max(0.0, a.amplitude + w * (b.amplitude - a.amplitude)),
            std::max(0.0, a.n_instant + w * (b.n_instant - a.n_instant))};
}

/// A pulse as seen by the heating model: when it happened and how hard it scattered.
struct HeatingEvent {
    double time;
    double p_s;
};

/// Baseline plus one biexponential term for every event strictly before t.
inline double occupation_after_sequence(const std::vector<HeatingEvent>& events, const MechanicalMode& mode,
                                        double t)
{
    double n = mode.n_baseline;
    for (const auto& e : events) {
        if (e.time >= t)
            continue;
        const auto r = heating_response(mode.heating, e.p_s);
        n += heating_occupation(t - e.time, mode.heating, r.amplitude, r.n_instant);
    }
    return n;
}

/// Heating events for a configured pulse sequence. Each pulse heats from its
/// end onwards with the scattering probability of its power.
inline std::vector<HeatingEvent> heating_events(const PulseSequence& seq, Frequency g0, const OpticalCavity& c,
                                                const DetectionChain& det, const MechanicalMode& m)
{
    std::vector<HeatingEvent> ev;
    for (const auto& p : seq.pulses) {
        const double e = optomech::pulse_energy_at_device(p.peak_power, p.duration, det.eta_fc);
        ev.push_back({p.end(), optomech::scattering_probability(p.side, e, g0, c, m)});
    }
    return ev;
}

inline OccupationTrajectory heating_trajectory(const HeatingParams& params, double amplitude, double n_instant,
                                               const std::vector<double>& times)
{
    OccupationTrajectory tr;
    tr.times = times;
    for (double t : times)
        tr.n_th.push_back(heating_occupation(t, params, amplitude, n_instant));
    return tr;
}

/// Thermal displacement spectrum: Lorentzian at f_m with FWHM gamma_m and
/// unit-normalized shape, scaled by n_th + 1/2 (integrates to n_th + 1/2).
inline double mechanical_psd(Frequency f, const MechanicalMode& m, double n_th)
{
    require(f.hz > 0, ErrorKind::domain, "mechanical_psd: frequency must be positive");
    const double half = m.gamma_m.hz / 2.0;
    const double d = f.hz - m.f_m.hz;
    return (n_th + 0.5) * (half / std::numbers::pi) / (d * d + half * half);
}

/// Energy decay rate implied by a ringdown time constant, as an ordinary frequency.
inline Frequency linewidth_from_decay(double tau_decay) { return Frequency(1.0 / (two_pi * tau_decay)); }

} // namespace omc::dynamics

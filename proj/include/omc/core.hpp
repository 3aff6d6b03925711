// Shared domain types, physical constants and the error hierarchy.
//
// Every frequency is stored as an ordinary frequency f in Hz. Formulas that
// need an angular rate apply the 2*pi themselves, so there is exactly one
// conversion point per formula.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace omc {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double planck = 6.62607015e-34; // J s

enum class ErrorKind { config, validation, numerical, model, io, domain };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what)
{
    if (!cond)
        fail(kind, what);
}

/// Ordinary frequency in Hz. Use angular() at the point a formula needs 2*pi*f.
struct Frequency {
    double hz = 0.0;

    constexpr Frequency() = default;
    constexpr explicit Frequency(double value_hz) : hz(value_hz) {}

    constexpr double angular() const { return two_pi * hz; }
    constexpr auto operator<=>(const Frequency&) const = default;
};

namespace literals {
constexpr Frequency operator""_Hz(long double v) { return Frequency(static_cast<double>(v)); }
constexpr Frequency operator""_kHz(long double v) { return Frequency(static_cast<double>(v) * 1e3); }
constexpr Frequency operator""_MHz(long double v) { return Frequency(static_cast<double>(v) * 1e6); }
constexpr Frequency operator""_GHz(long double v) { return Frequency(static_cast<double>(v) * 1e9); }
constexpr Frequency operator""_THz(long double v) { return Frequency(static_cast<double>(v) * 1e12); }
constexpr Frequency operator""_Hz(unsigned long long v) { return Frequency(static_cast<double>(v)); }
constexpr Frequency operator""_kHz(unsigned long long v) { return Frequency(static_cast<double>(v) * 1e3); }
constexpr Frequency operator""_MHz(unsigned long long v) { return Frequency(static_cast<double>(v) * 1e6); }
constexpr Frequency operator""_GHz(unsigned long long v) { return Frequency(static_cast<double>(v) * 1e9); }
constexpr Frequency operator""_THz(unsigned long long v) { return Frequency(static_cast<double>(v) * 1e12); }
} // namespace literals

enum class Side { red, blue };

inline const char* to_string(Side s) { return s == Side::red ? "red" : "blue"; }

/// One-port optical cavity. kappa = kappa_i + kappa_e is checked to 1 ppm.
class OpticalCavity {
public:
    OpticalCavity(Frequency f_c, Frequency kappa, Frequency kappa_i, Frequency kappa_e)
        : f_c_(f_c), kappa_(kappa), kappa_i_(kappa_i), kappa_e_(kappa_e)
    {
        require(f_c.hz > 0, ErrorKind::validation, "cavity: f_c must be positive");
        require(kappa.hz > 0, ErrorKind::validation, "cavity: kappa must be positive");
        require(kappa_i.hz >= 0, ErrorKind::validation, "cavity: kappa_i must be non-negative");
        require(kappa_i.hz <= kappa.hz, ErrorKind::validation, "cavity: kappa_i exceeds kappa");
        require(kappa_e.hz >= 0, ErrorKind::validation, "cavity: kappa_e must be non-negative");
        require(std::abs(kappa_i.hz + kappa_e.hz - kappa.hz) <= 1e-6 * kappa.hz, ErrorKind::validation,
                "cavity: kappa != kappa_i + kappa_e (beyond 1 ppm)");
    }

    static OpticalCavity from_total_and_intrinsic(Frequency f_c, Frequency kappa, Frequency kappa_i)
    {
        return OpticalCavity(f_c, kappa, kappa_i, Frequency(kappa.hz - kappa_i.hz));
    }

    Frequency f_c() const { return f_c_; }
    Frequency kappa() const { return kappa_; }
    Frequency kappa_i() const { return kappa_i_; }
    Frequency kappa_e() const { return kappa_e_; }

    bool operator==(const OpticalCavity&) const = default;

private:
    Frequency f_c_, kappa_, kappa_i_, kappa_e_;
};

/// Calibration point for the delayed-heating amplitude map.
struct HeatingCalibrationPoint {
    double p_s = 0.0;
    double amplitude = 0.0;
    double n_instant = 0.0;
    bool operator==(const HeatingCalibrationPoint&) const = default;
};

/// Biexponential delayed-heating parameters. Without calibration points the
/// amplitude is amplitude_per_ps * p_s and the instantaneous occupation is
/// the constant n_instant.
struct HeatingParams {
    double amplitude_per_ps = 0.0;
    double tau_rise = 165e-9;
    double tau_decay = 22e-6;
    double n_instant = 0.0;
    std::vector<HeatingCalibrationPoint> calibration;

    void validate() const
    {
        require(tau_rise > 0, ErrorKind::validation, "heating: tau_rise must be positive");
        require(tau_decay > 0, ErrorKind::validation, "heating: tau_decay must be positive");
        require(tau_decay > tau_rise, ErrorKind::validation, "heating: tau_decay must exceed tau_rise");
        require(n_instant >= 0, ErrorKind::validation, "heating: n_instant must be non-negative");
        for (std::size_t i = 1; i < calibration.size(); ++i)
            require(calibration[i].p_s > calibration[i - 1].p_s, ErrorKind::validation,
                    "heating: calibration points must have strictly increasing p_s");
    }

    bool operator==(const HeatingParams&) const = default;
};

struct MechanicalMode {
    Frequency f_m;
    Frequency gamma_m;
    double n_baseline = 0.0;
    HeatingParams heating;

    void validate() const
    {
        require(gamma_m.hz > 0, ErrorKind::validation, "mode: gamma_m must be positive");
        require(f_m.hz > gamma_m.hz, ErrorKind::validation, "mode: f_m must exceed gamma_m");
        require(n_baseline >= 0, ErrorKind::validation, "mode: n_baseline must be non-negative");
        heating.validate();
    }

    double quality_factor() const { return f_m.hz / gamma_m.hz; }

    bool operator==(const MechanicalMode&) const = default;
};

struct DetectionChain {
    double eta_dev = 0.75;
    double eta_fc = 0.55;
    double eta_rest = 0.023 / (0.75 * 0.55);
    double dark_rate = 0.0;                           // Hz
    std::optional<double> filter_suppression_db;      // pump leakage suppression; unset -> derived

    double eta_det() const { return eta_dev * eta_fc * eta_rest; }

    void validate() const
    {
        auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        require(unit(eta_dev), ErrorKind::validation, "detection: eta_dev outside [0,1]");
        require(unit(eta_fc), ErrorKind::validation, "detection: eta_fc outside [0,1]");
        require(unit(eta_rest), ErrorKind::validation, "detection: eta_rest outside [0,1]");
        require(eta_det() > 0.0, ErrorKind::validation, "detection: overall eta_det must be positive");
        require(dark_rate >= 0.0, ErrorKind::validation, "detection: dark_rate must be non-negative");
        if (filter_suppression_db)
            require(*filter_suppression_db >= 0.0, ErrorKind::validation,
                    "detection: filter_suppression_db must be non-negative");
    }

    bool operator==(const DetectionChain&) const = default;
};

enum class PulseLabel { write, read, other };

inline const char* to_string(PulseLabel l)
{
    switch (l) {
    case PulseLabel::write: return "write";
    case PulseLabel::read: return "read";
    default: return "other";
    }
}

struct Pulse {
    PulseLabel label = PulseLabel::other;
    Side side = Side::red;
    double start = 0.0;      // s, from the beginning of the sequence
    double duration = 40e-9; // s
    double peak_power = 0.0; // W, at the fiber input
    double window_offset = 0.0;          // detection window start relative to pulse start
    std::optional<double> window_length; // defaults to the pulse duration

    double end() const { return start + duration; }
    double window_begin() const { return start + window_offset; }
    double window() const { return window_length.value_or(duration); }

    bool operator==(const Pulse&) const = default;
};

struct PulseSequence {
    std::vector<Pulse> pulses;
    double repetition_rate = 25e3; // Hz
    long long n_sequences = 1;

    double period() const { return 1.0 / repetition_rate; }

    void validate() const
    {
        require(repetition_rate > 0, ErrorKind::validation, "sequence: repetition_rate must be positive");
        require(n_sequences >= 1, ErrorKind::validation, "sequence: n_sequences must be at least 1");
        for (std::size_t i = 0; i < pulses.size(); ++i) {
            const Pulse& p = pulses[i];
            const std::string tag = "sequence: pulse " + std::to_string(i);
            require(p.duration > 0, ErrorKind::validation, tag + " duration must be positive");
            require(p.start >= 0, ErrorKind::validation, tag + " start must be non-negative");
            require(p.peak_power >= 0, ErrorKind::validation, tag + " peak_power must be non-negative");
            require(p.window() > 0, ErrorKind::validation, tag + " detection window must be positive");
            if (i > 0)
                require(p.start >= pulses[i - 1].end(), ErrorKind::validation,
                        tag + " overlaps or precedes the previous pulse");
        }
        if (!pulses.empty())
            require(period() > pulses.back().end(), ErrorKind::validation,
                    "sequence: period does not exceed the last pulse end");
    }

    bool operator==(const PulseSequence&) const = default;
};

/// Piezoelectric interface inputs for the transduction budget.
struct PiezoInterface {
    Frequency f_s{3.05e9};
    Frequency f_p{3.05e9};
    std::optional<double> k_eff2; // overrides the resonance-derived value when set
    double c_piezo = 0.19e-15;    // F
    double c_parasitic = 100e-15; // F
    Frequency gamma_m{7.96e3};
    Frequency f_m{3.05e9};
    double q_uw = 170.0;
    double n_m = 0.35;
    double eta_e = 1.0;

    void validate() const
    {
        require(f_s.hz > 0, ErrorKind::validation, "transducer: f_s must be positive");
        require(f_p.hz >= f_s.hz, ErrorKind::validation, "transducer: f_p must be >= f_s");
        require(c_piezo > 0 && c_parasitic >= 0, ErrorKind::validation,
                "transducer: capacitances must be non-negative (c_piezo positive)");
        require(gamma_m.hz > 0 && f_m.hz > 0 && q_uw > 0, ErrorKind::validation,
                "transducer: gamma_m, f_m and q_uw must be positive");
        require(n_m >= 0, ErrorKind::validation, "transducer: n_m must be non-negative");
        require(eta_e > 0 && eta_e <= 1, ErrorKind::validation, "transducer: eta_e outside (0,1]");
        if (k_eff2)
            require(*k_eff2 >= 0, ErrorKind::validation, "transducer: k_eff2 must be non-negative");
    }

    bool operator==(const PiezoInterface&) const = default;
};

/// Everything a run needs; built by load_config().
struct ExperimentConfig {
    OpticalCavity cavity = OpticalCavity::from_total_and_intrinsic(Frequency(194.8e12), Frequency(5.14e9),
                                                                   Frequency(1.31e9));
    MechanicalMode mode{Frequency(2.905e9), Frequency(13.8e3), 0.041, {}};
    Frequency g0{845e3};
    DetectionChain detection;
    PulseSequence sequence;
    PiezoInterface piezo;

    void validate() const
    {
        mode.validate();
        require(g0.hz > 0, ErrorKind::validation, "optomech: g0 must be positive");
        detection.validate();
        sequence.validate();
        piezo.validate();
    }

    bool operator==(const ExperimentConfig&) const = default;
};

} // namespace omc

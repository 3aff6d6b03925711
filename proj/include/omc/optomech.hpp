// Sideband scattering probabilities, click rates, sideband-asymmetry
// thermometry, g0 calibration and the optomechanical cooperativity.
#pragma once

#include <cmath>
#include <vector>

#include "cavity.hpp"
#include "core.hpp"
#include "fit.hpp"

namespace omc::optomech {

/// Value with a one-sigma standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline constexpr double max_valid_probability = 0.5;

/// Energy reaching the device for a rectangular pulse launched at the fiber.
inline double pulse_energy_at_device(double peak_power_at_fiber, double duration, double eta_fc)
{
    return peak_power_at_fiber * duration * eta_fc;
}

/// Laser frequency that drives the given sideband.
inline Frequency drive_frequency(Side side, const OpticalCavity& c, const MechanicalMode& m)
{
    return Frequency(side == Side::blue ? c.f_c().hz + m.f_m.hz : c.f_c().hz - m.f_m.hz);
}

/// Weak-coupling exponent x = 4 eta_dev g0^2 E_p / (hbar w_c (w_m^2 + (kappa/2)^2)).
/// For x << 1 this is also the common small-probability limit of both sides.
inline double scattering_exponent(double pulse_energy, Frequency g0, const OpticalCavity& c,
                                  const MechanicalMode& m)
{
    require(pulse_energy >= 0, ErrorKind::domain, "scattering_probability: pulse energy must be non-negative");
    const double eta_dev = c.kappa_e().hz / c.kappa().hz;
    const double wm = m.f_m.angular();
    const double half = c.kappa().angular() / 2.0;
    const double g = g0.angular();
    return 4.0 * eta_dev * g * g * pulse_energy / (hbar * c.f_c().angular() * (wm * wm + half * half));
}

inline double probability_from_exponent(Side side, double x)
{
    return side == Side::red ? -std::expm1(-x) : std::expm1(x);
}

inline double exponent_from_probability(Side side, double p)
{
    if (side == Side::red) {
        require(p < 1.0, ErrorKind::domain, "red scattering probability must be below 1");
        return -std::log1p(-p);
    }
    return std::log1p(p);
}

/// Red: 1 - exp(-x); blue: exp(x) - 1. Results above 0.5 are outside the
/// undepleted-drive model and rejected.
inline double scattering_probability(Side side, double pulse_energy, Frequency g0, const OpticalCavity& c,
                                     const MechanicalMode& m)
{
    const double p = probability_from_exponent(side, scattering_exponent(pulse_energy, g0, c, m));
    if (!(p <= max_valid_probability))
        fail(ErrorKind::model, "scattering_probability: p_s = " + std::to_string(p) +
                                   " exceeds the model validity ceiling of 0.5");
    return p;
}

/// Peak power at the fiber that yields scattering probability p for a rectangular pulse.
inline double peak_power_for_probability(Side side, double p, double duration, double eta_fc, Frequency g0,
                                         const OpticalCavity& c, const MechanicalMode& m)
{
    require(p >= 0 && p <= max_valid_probability, ErrorKind::domain,
            "peak_power_for_probability: p must lie in [0, 0.5]");
    require(duration > 0 && eta_fc > 0, ErrorKind::domain, "peak_power_for_probability: duration and eta_fc must be positive");
    const double per_joule = scattering_exponent(1.0, g0, c, m);
    return exponent_from_probability(side, p) / per_joule / (duration * eta_fc);
}

struct SidebandRates {
    double gamma_r; // detected red-sideband photons per pulse
    double gamma_b; // detected blue-sideband photons per pulse
};

inline SidebandRates sideband_rates(double n_th, double p_read, double p_write, double eta_det)
{
    require(n_th >= 0 && p_read >= 0 && p_write >= 0 && eta_det >= 0 && eta_det <= 1, ErrorKind::domain,
            "sideband_rates: inputs must be non-negative with eta_det <= 1");
    return {p_read * n_th * eta_det, p_write * (n_th + 1.0) * eta_det};
}

/// Click rate per pulse divided by p_s eta_det, so red and blue rates taken
/// at different powers share a common normalization. Poisson error.
inline Estimate normalized_rate(double clicks, double pulses, double p_s, double eta_det)
{
    require(pulses > 0 && p_s > 0 && eta_det > 0 && clicks >= 0, ErrorKind::domain,
            "normalized_rate: pulses, p_s and eta_det must be positive");
    const double norm = pulses * p_s * eta_det;
    return {clicks / norm, std::sqrt(clicks) / norm};
}

/// n_th = G_r / (G_b - G_r) on normalized rates, first-order error propagation.
inline Estimate occupation_from_asymmetry(Estimate gamma_r, Estimate gamma_b)
{
    require(gamma_r.value >= 0, ErrorKind::domain, "occupation_from_asymmetry: negative red rate");
    if (!(gamma_b.value > gamma_r.value))
        fail(ErrorKind::model, "occupation_from_asymmetry: blue rate does not exceed red rate "
                               "(unphysical asymmetry; check the p_s calibration)");
    const double diff = gamma_b.value - gamma_r.value;
    const double n = gamma_r.value / diff;
    const double dr = gamma_b.value / (diff * diff);
    const double db = gamma_r.value / (diff * diff);
    const double var = dr * dr * gamma_r.std_error * gamma_r.std_error + db * db * gamma_b.std_error * gamma_b.std_error;
    return {n, std::sqrt(var)};
}

inline Estimate occupation_from_asymmetry(double gamma_r, double gamma_b)
{
    return occupation_from_asymmetry(Estimate{gamma_r, 0.0}, Estimate{gamma_b, 0.0});
}

struct CalibrationPoint {
    double pulse_energy; // J at the device
    double p_s;
    Side side = Side::red;
};

struct G0Calibration {
    Frequency g0;
    Frequency g0_error;
    double slope;       // exponent per joule
    double slope_error;
    double intercept;
};

/// Fits the scattering exponent against pulse energy and inverts the
/// small-probability relation for g0. Probabilities are first mapped back to
/// exponents through their side's exact form, so noiseless data from
/// scattering_probability() is recovered exactly.
inline G0Calibration g0_from_calibration(const std::vector<CalibrationPoint>& points, const OpticalCavity& c,
                                         const MechanicalMode& m)
{
    require(points.size() >= 2, ErrorKind::domain, "g0_from_calibration: need at least 2 points");
    std::vector<fit::Point> xy;
    for (const auto& p : points)
        xy.push_back({p.pulse_energy, exponent_from_probability(p.side, p.p_s)});
    const fit::FitResult line = fit::fit_linear(xy);
    const double s = line.value("slope");
    if (!(s > 0))
        fail(ErrorKind::model, "g0_from_calibration: fitted slope is not positive");
    // exponent per unit energy for g0 = 1 Hz
    const double unit = scattering_exponent(1.0, Frequency(1.0), c, m);
    const double g0 = std::sqrt(s / unit);
    const double g0_err = g0 * line.error("slope") / (2.0 * s);
    return {Frequency(g0), Frequency(g0_err), s, line.error("slope"), line.value("intercept")};
}

/// C = 4 g0^2 n_c / (kappa gamma_m); the 2 pi factors cancel.
inline double cooperativity(Frequency g0, double n_c, const OpticalCavity& c, const MechanicalMode& m)
{
    require(n_c >= 0, ErrorKind::domain, "cooperativity: n_c must be non-negative");
    return 4.0 * g0.hz * g0.hz * n_c / (c.kappa().hz * m.gamma_m.hz);
}

/// Peak intracavity photon number of a sideband pulse, from its energy at the device.
inline double pulse_intracavity_photons(Side side, double pulse_energy, double duration, const OpticalCavity& c,
                                        const MechanicalMode& m)
{
    const Frequency f_l = drive_frequency(side, c, m);
    const Frequency delta(f_l.hz - c.f_c().hz);
    return cavity::intracavity_photons(pulse_energy / duration, delta, c, f_l);
}

} // namespace omc::optomech

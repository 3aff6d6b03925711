// One-port cavity response and sideband-resolution metrics.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "core.hpp"

namespace omc::cavity {

struct ReflectionPoint {
    Frequency detuning; // laser - cavity
    std::complex<double> amplitude;
};

/// r(delta) = 1 - kappa_e / (i delta + kappa/2), all rates angular.
inline std::complex<double> reflection_amplitude(Frequency delta, const OpticalCavity& c)
{
    const std::complex<double> denom(c.kappa().angular() / 2.0, delta.angular());
    return 1.0 - c.kappa_e().angular() / denom;
}

inline std::vector<ReflectionPoint> reflection_spectrum(const OpticalCavity& c, double span_hz, std::size_t n)
{
    std::vector<ReflectionPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = n > 1 ? -span_hz / 2 + span_hz * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        out.push_back({Frequency(d), reflection_amplitude(Frequency(d), c)});
    }
    return out;
}

/// Net phase (radians) accumulated by r(delta) as delta sweeps -inf..+inf.
/// The sweep is parameterized by delta = (kappa/2) tan(phi/2), which walks the
/// reflection circle at uniform angular speed.
inline double reflection_phase_winding(const OpticalCavity& c, std::size_t samples = 8192)
{
    const double half = c.kappa().hz / 2.0;
    auto at = [&](std::size_t i) {
        const double phi = -std::numbers::pi + two_pi * static_cast<double>(i) / static_cast<double>(samples);
        // phi = -pi maps to delta = -inf, where r -> 1
        if (i == 0)
            return std::complex<double>(1.0, 0.0);
        return reflection_amplitude(Frequency(half * std::tan(phi / 2.0)), c);
    };
    double total = 0.0;
    std::complex<double> prev = at(0);
    for (std::size_t i = 1; i <= samples; ++i) {
        const std::complex<double> cur = i == samples ? std::complex<double>(1.0, 0.0) : at(i);
        total += std::arg(cur / prev);
        prev = cur;
    }
    return total;
}

struct CouplingEfficiency {
    double eta_dev;
    bool over_coupled;          // kappa_e > kappa / 2
    bool over_coupled_by_phase; // reflection phase winds through 2 pi
};

inline CouplingEfficiency coupling_efficiency(const OpticalCavity& c)
{
    const double eta = c.kappa_e().hz / c.kappa().hz;
    const double winding = reflection_phase_winding(c);
    return {eta, c.kappa_e().hz > c.kappa().hz / 2.0, std::abs(winding) > std::numbers::pi};
}

struct SidebandMetrics {
    double resolution;     // (kappa / 4 f_m)^2
    double suppression_db; // cavity filtering of the 2 f_m tone relative to the resonant one
};

inline SidebandMetrics sideband_metrics(const OpticalCavity& c, const MechanicalMode& m)
{
    require(m.f_m.hz > 0, ErrorKind::domain, "sideband_metrics: f_m must be positive");
    const double k = c.kappa().hz;
    const double ratio = k / (4.0 * m.f_m.hz);
    const double half = k / 2.0;
    const double off = 2.0 * m.f_m.hz;
    const double supp = half > 0 ? 10.0 * std::log10((off * off + half * half) / (half * half))
                                 : std::numeric_limits<double>::infinity();
    return {ratio * ratio, supp};
}

/// Mean intracavity photon number for a continuous drive at the device.
inline double intracavity_photons(double power_at_device, Frequency delta, const OpticalCavity& c, Frequency f_l)
{
    require(power_at_device >= 0, ErrorKind::domain, "intracavity_photons: power must be non-negative");
    const double flux = c.kappa_e().angular() * power_at_device / (hbar * f_l.angular());
    const double d = delta.angular();
    const double h = c.kappa().angular() / 2.0;
    return flux / (d * d + h * h);
}

} // namespace omc::cavity

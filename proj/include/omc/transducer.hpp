// Microwave-to-optics conversion budget through a piezoelectric interface.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "core.hpp"

namespace omc::transducer {

/// k_eff^2 = (f_p^2 - f_s^2) / f_p^2
inline double keff2_from_resonances(Frequency f_s, Frequency f_p)
{
    require(f_s.hz > 0, ErrorKind::domain, "keff2_from_resonances: f_s must be positive");
    require(f_p.hz >= f_s.hz, ErrorKind::domain, "keff2_from_resonances: f_p must not be below f_s");
    const double r = f_s.hz / f_p.hz;
    return (1.0 - r) * (1.0 + r);
}

/// Capacitive dilution by the parasitic capacitance: k^2 C0 / (C0 + C_par).
inline double reduced_keff2(double k_eff2, double c_piezo, double c_parasitic)
{
    require(c_piezo > 0, ErrorKind::domain, "reduced_keff2: c_piezo must be positive");
    require(c_parasitic >= 0, ErrorKind::domain, "reduced_keff2: c_parasitic must be non-negative");
    return k_eff2 * c_piezo / (c_piezo + c_parasitic);
}

/// C_em = k^2 w_m^2 / (kappa_e gamma_m); evaluated in ordinary frequency.
inline double electromech_cooperativity(double k_eff2_red, Frequency f_m, Frequency kappa_e_uw, Frequency gamma_m)
{
    require(k_eff2_red >= 0, ErrorKind::domain, "electromech_cooperativity: k_eff2 must be non-negative");
    require(f_m.hz > 0 && kappa_e_uw.hz > 0 && gamma_m.hz > 0, ErrorKind::domain,
            "electromech_cooperativity: frequencies must be positive");
    return k_eff2_red * f_m.hz * f_m.hz / (kappa_e_uw.hz * gamma_m.hz);
}

/// External microwave linewidth for a loaded quality factor: kappa_e = f_m / Q.
inline Frequency microwave_linewidth(Frequency f_m, double q_uw)
{
    require(q_uw > 0, ErrorKind::domain, "microwave_linewidth: Q must be positive");
    return Frequency(f_m.hz / q_uw);
}

/// Microwave Q at which the cooperativity reaches `target`.
inline double required_q(double target_c_em, double k_eff2_red, Frequency f_m, Frequency gamma_m)
{
    require(target_c_em > 0, ErrorKind::domain, "required_q: target cooperativity must be positive");
    require(k_eff2_red > 0, ErrorKind::domain, "required_q: k_eff2 must be positive");
    return target_c_em * gamma_m.hz / (k_eff2_red * f_m.hz);
}

/// N = n_m / (eta_e C_em)
inline double added_noise(double n_m, double eta_e, double c_em)
{
    require(n_m >= 0, ErrorKind::domain, "added_noise: n_m must be non-negative");
    require(eta_e <= 1 && eta_e >= 0, ErrorKind::domain, "added_noise: eta_e outside [0,1]");
    if (eta_e == 0 || c_em <= 0)
        fail(ErrorKind::model, "added_noise: eta_e * C_em is zero, the added noise diverges");
    return n_m / (eta_e * c_em);
}

/// Z = 1 / (2 pi f C)
inline double characteristic_impedance(double c_total, Frequency f)
{
    require(c_total > 0 && f.hz > 0, ErrorKind::domain, "characteristic_impedance: inputs must be positive");
    return 1.0 / (f.angular() * c_total);
}

struct ConversionBudget {
    double k_eff2;
    double k_eff2_reduced;
    Frequency kappa_e_uw;
    double c_em;
    double q_uw;
    double added_noise;
    double impedance;     // ohms, over C0 + C_par
    double q_for_c20;     // Q needed for C_em = 20
};

inline ConversionBudget compute_budget(const PiezoInterface& p)
{
    p.validate();
    ConversionBudget b{};
    b.k_eff2 = p.k_eff2.value_or(keff2_from_resonances(p.f_s, p.f_p));
    b.k_eff2_reduced = reduced_keff2(b.k_eff2, p.c_piezo, p.c_parasitic);
    b.q_uw = p.q_uw;
    b.kappa_e_uw = microwave_linewidth(p.f_m, p.q_uw);
    b.c_em = electromech_cooperativity(b.k_eff2_reduced, p.f_m, b.kappa_e_uw, p.gamma_m);
    b.added_noise = b.c_em > 0 ? added_noise(p.n_m, p.eta_e, b.c_em) : std::numeric_limits<double>::infinity();
    b.impedance = characteristic_impedance(p.c_piezo + p.c_parasitic, p.f_m);
    b.q_for_c20 = b.k_eff2_reduced > 0 ? required_q(20.0, b.k_eff2_reduced, p.f_m, p.gamma_m)
                                       : std::numeric_limits<double>::infinity();
    return b;
}

struct NoisePoint {
    double q_uw;
    double c_em;
    double added_noise;
};

/// Added noise over a logarithmic grid of microwave Q.
inline std::vector<NoisePoint> noise_vs_q(const PiezoInterface& p, double q_min, double q_max, int n)
{
    require(q_min > 0 && q_max > q_min && n >= 2, ErrorKind::domain, "noise_vs_q: need 0 < q_min < q_max and n >= 2");
    std::vector<NoisePoint> out;
    for (int i = 0; i < n; ++i) {
        PiezoInterface q = p;
        q.q_uw = q_min * std::pow(q_max / q_min, static_cast<double>(i) / (n - 1));
        const auto b = compute_budget(q);
        out.push_back({q.q_uw, b.c_em, b.added_noise});
    }
    return out;
}

} // namespace omc::transducer

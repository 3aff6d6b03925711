// Coincidence statistics: g2(dn) between write and read clicks and its
// profile-likelihood interval. The least-squares fitters live in fit.hpp.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>

#include "core.hpp"
#include "fit.hpp"
#include "sim.hpp"

namespace omc::stats {

struct CoincidenceCounts {
    long long n_coinc = 0;
    long long n_w = 0;
    long long n_r = 0;
    long long n_sequences = 0;
};

struct Interval {
    double low;
    double high;
};

struct G2Estimate {
    int delta_n = 0;
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    CoincidenceCounts counts;
};

namespace detail {

// log-likelihood of k successes in n trials at probability q, up to a constant
inline double binomial_loglik(double k, double n, double q)
{
    double l = 0.0;
    if (k > 0)
        l += k * std::log(q);
    if (n - k > 0)
        l += (n - k) * std::log1p(-q);
    return l;
}

} // namespace detail

/// Profile-likelihood interval on the coincidence probability q = P(W and R)
/// with the marginals held at their estimates, mapped to g2 = q / (P(W) P(R)).
/// The interval collects every q with 2 (l(q_hat) - l(q)) below the chi-square(1)
/// quantile at `level`; for n_coinc = 0 it is one-sided, [0, upper).
inline Interval coincidence_ci(long long n_coinc, long long n_w, long long n_r, long long n_seq, double level = 0.68)
{
    require(n_seq > 0, ErrorKind::domain, "coincidence_ci: n_sequences must be positive");
    require(n_coinc >= 0 && n_w >= 0 && n_r >= 0, ErrorKind::domain, "coincidence_ci: counts must be non-negative");
    require(n_coinc <= std::min(n_w, n_r), ErrorKind::domain,
            "coincidence_ci: inconsistent counts (n_coinc exceeds a marginal)");
    require(n_w <= n_seq && n_r <= n_seq, ErrorKind::domain, "coincidence_ci: marginal exceeds n_sequences");
    require(level > 0 && level < 1, ErrorKind::domain, "coincidence_ci: level must lie in (0,1)");
    require(n_w > 0 && n_r > 0, ErrorKind::model, "coincidence_ci: undefined estimate, zero write or read clicks");

    const double N = static_cast<double>(n_seq);
    const double k = static_cast<double>(n_coinc);
    const double scale = N * N / (static_cast<double>(n_w) * static_cast<double>(n_r)); // g2 per unit q
    const double thr = boost::math::quantile(boost::math::chi_squared(1.0), level);
    const double q_hat = k / N;
    const double l_hat = detail::binomial_loglik(k, N, q_hat);
    auto deficit = [&](double q) { return 2.0 * (l_hat - detail::binomial_loglik(k, N, q)) - thr; };

    boost::math::tools::eps_tolerance<double> tol(50);
    auto solve = [&](double a, double b) {
        std::uintmax_t it = 200;
        const auto r = boost::math::tools::toms748_solve(deficit, a, b, tol, it);
        return 0.5 * (r.first + r.second);
    };

    // The deficit is -thr at q_hat and diverges towards both ends of (0, 1).
    double low = 0.0, high = 1.0;
    if (n_coinc == 0)
        high = -std::expm1(-thr / (2.0 * N));
    else {
        if (n_coinc < n_seq)
            high = solve(q_hat, std::nextafter(1.0, 0.0));
        low = solve(std::numeric_limits<double>::min(), q_hat);
    }
    return {low * scale, high * scale};
}

/// Sorted, de-duplicated indices of sequences with at least one click of `label`.
inline std::vector<long long> clicked_sequences(const sim::RecordSet& rs, PulseLabel label)
{
    std::vector<long long> idx;
    for (const auto& r : rs.records)
        if (r.pulse_label == label)
            idx.push_back(r.sequence_index);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

/// Counts over all sequence pairs (s, s + dn) that both lie in the record set.
inline CoincidenceCounts coincidence_counts(const std::vector<long long>& writes, const std::vector<long long>& reads,
                                            long long n_sequences, int delta_n)
{
    const long long dn = delta_n;
    const long long lo = std::max(0LL, -dn);           // first usable write sequence
    const long long hi = n_sequences - std::max(0LL, dn); // one past the last
    CoincidenceCounts c;
    c.n_sequences = hi - lo;
    std::vector<long long> w, r;
    for (long long s : writes)
        if (s >= lo && s < hi)
            w.push_back(s);
    for (long long s : reads)
        if (s - dn >= lo && s - dn < hi)
            r.push_back(s - dn);
    c.n_w = static_cast<long long>(w.size());
    c.n_r = static_cast<long long>(r.size());
    std::vector<long long> both;
    std::set_intersection(w.begin(), w.end(), r.begin(), r.end(), std::back_inserter(both));
    c.n_coinc = static_cast<long long>(both.size());
    return c;
}

inline G2Estimate g2_from_counts(const CoincidenceCounts& c, int delta_n, double level = 0.68)
{
    if (c.n_w == 0 || c.n_r == 0)
        fail(ErrorKind::model, "g2: undefined estimate, zero write or read clicks at dn = " + std::to_string(delta_n));
    const double N = static_cast<double>(c.n_sequences);
    const double value = (c.n_coinc / N) / ((c.n_w / N) * (c.n_r / N));
    const Interval ci = coincidence_ci(c.n_coinc, c.n_w, c.n_r, c.n_sequences, level);
    return {delta_n, value, std::min(ci.low, value), std::max(ci.high, value), c};
}

/// g2(dn) = P(W in s and R in s + dn) / (P(W) P(R)) over the N - |dn| usable pairs.
inline G2Estimate g2_crosscorr(const sim::RecordSet& rs, int delta_n, double level = 0.68)
{
    require(rs.n_sequences >= std::abs(static_cast<long long>(delta_n)) + 1, ErrorKind::domain,
            "g2_crosscorr: n_sequences must be at least |delta_n| + 1");
    const auto w = clicked_sequences(rs, PulseLabel::write);
    const auto r = clicked_sequences(rs, PulseLabel::read);
    return g2_from_counts(coincidence_counts(w, r, rs.n_sequences, delta_n), delta_n, level);
}

inline std::vector<G2Estimate> g2_range(const sim::RecordSet& rs, int dn_min, int dn_max, double level = 0.68)
{
    require(dn_min <= dn_max, ErrorKind::domain, "g2_range: empty offset range");
    const auto w = clicked_sequences(rs, PulseLabel::write);
    const auto r = clicked_sequences(rs, PulseLabel::read);
    std::vector<G2Estimate> out;
    for (int dn = dn_min; dn <= dn_max; ++dn) {
        require(rs.n_sequences >= std::abs(static_cast<long long>(dn)) + 1, ErrorKind::domain,
                "g2_crosscorr: n_sequences must be at least |delta_n| + 1");
        out.push_back(g2_from_counts(coincidence_counts(w, r, rs.n_sequences, dn), dn, level));
    }
    return out;
}

} // namespace omc::stats

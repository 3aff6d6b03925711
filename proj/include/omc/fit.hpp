// Least-squares fitters: straight line, Lorentzian on a linear offset, and
// the delayed-heating biexponential.
//
// The nonlinear fits run a damped Gauss-Newton iteration whose damping grows
// (Levenberg-Marquardt style) whenever a step fails to reduce the cost. Both
// abscissa and ordinate are rescaled to O(1) before fitting and the results
// mapped back, with covariances propagated through the same map.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"

namespace omc::fit {

struct Point {
    double x;
    double y;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> std_errors;
    double residual_norm = 0.0;
    bool converged = false;
    std::string message;
    int iterations = 0;

    double value(const std::string& name) const { return values.at(index(name)); }
    double error(const std::string& name) const { return std_errors.at(index(name)); }

private:
    std::size_t index(const std::string& name) const
    {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
            fail(ErrorKind::domain, "FitResult: no parameter named '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }
};

struct SolverOptions {
    int max_iterations = 400;
    double step_tolerance = 1e-12;
    double cost_tolerance = 1e-16;
};

struct SolverOutcome {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance; // scaled by residual variance
    double cost = 0.0;          // sum of squared residuals
    bool converged = false;
    int iterations = 0;
};

/// Model requirements: residuals(p) -> VectorXd, jacobian(p) -> MatrixXd
/// (d residual / d p).
template <class Model>
SolverOutcome damped_gauss_newton(const Model& model, Eigen::VectorXd p, const SolverOptions& opt = {})
{
    Eigen::VectorXd r = model.residuals(p);
    double cost = r.squaredNorm();
    double lambda = 1e-4;
    SolverOutcome out;
    out.converged = false;

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd J = model.jacobian(p);
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        if (cost == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        Eigen::VectorXd step;
        double new_cost = cost;
        Eigen::VectorXd new_r;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = A;
            for (Eigen::Index i = 0; i < damped.rows(); ++i)
                damped(i, i) += lambda * std::max(A(i, i), 1e-12);
            step = damped.ldlt().solve(-g);
            const Eigen::VectorXd trial = p + step;
            if (!trial.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            new_r = model.residuals(trial);
            new_cost = new_r.allFinite() ? new_r.squaredNorm() : std::numeric_limits<double>::infinity();
            if (new_cost <= cost) {
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // no descent direction left at any damping: stationary point
            out.converged = true;
            break;
        }

        const double drop = cost - new_cost;
        p += step;
        r = new_r;
        cost = new_cost;
        lambda = std::max(lambda / 10.0, 1e-15);

        if (step.norm() <= opt.step_tolerance * (p.norm() + opt.step_tolerance) ||
            drop <= opt.cost_tolerance * cost) {
            out.converged = true;
            ++it;
            break;
        }
    }

    const Eigen::MatrixXd J = model.jacobian(p);
    const Eigen::Index m = J.rows(), n = J.cols();
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
    Eigen::MatrixXd info = J.transpose() * J;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (lu.isInvertible())
        out.covariance = lu.inverse() * (cost / dof);
    else
        out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());

    out.params = p;
    out.cost = cost;
    out.iterations = it;
    return out;
}

namespace detail {

inline std::vector<double> errors_from(const Eigen::MatrixXd& cov)
{
    std::vector<double> e(static_cast<std::size_t>(cov.rows()));
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        e[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0));
    return e;
}

inline void sort_by_x(std::vector<Point>& pts)
{
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
}

struct Scaling {
    double x0, sx, sy;
};

inline Scaling scaling_for(const std::vector<Point>& pts)
{
    double lo = pts.front().x, hi = pts.front().x, ymax = 0.0;
    for (const auto& p : pts) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
        ymax = std::max(ymax, std::abs(p.y));
    }
    const double sx = hi > lo ? (hi - lo) / 2.0 : 1.0;
    return {(hi + lo) / 2.0, sx, ymax > 0 ? ymax : 1.0};
}

} // namespace detail

/// Ordinary least squares y = slope x + intercept.
inline FitResult fit_linear(std::vector<Point> pts)
{
    require(pts.size() >= 2, ErrorKind::domain, "fit_linear: need at least 2 points");
    const double n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
    }
    require(sxx > 0, ErrorKind::domain, "fit_linear: degenerate x (all abscissae equal)");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0;
    for (const auto& p : pts) {
        const double e = p.y - (slope * p.x + intercept);
        rss += e * e;
    }
    // two points interpolate exactly; no residual variance to report
    const double s2 = pts.size() > 2 ? rss / (n - 2.0) : 0.0;
    FitResult f;
    f.names = {"slope", "intercept"};
    f.values = {slope, intercept};
    f.std_errors = {std::sqrt(s2 / sxx), std::sqrt(s2 * (1.0 / n + mx * mx / sxx))};
    f.residual_norm = std::sqrt(rss);
    f.converged = true;
    return f;
}

/// y = height * (w^2 / ((x - center)^2 + w^2)) + intercept + slope * (x - center),
/// w = fwhm / 2. A negative height describes a dip.
inline double lorentzian_with_offset(double x, double center, double fwhm, double height, double slope,
                                     double intercept)
{
    const double w = fwhm / 2.0;
    const double d = x - center;
    return height * w * w / (d * d + w * w) + intercept + slope * d;
}

namespace detail {

struct LorentzModel {
    const std::vector<double>& u;
    const std::vector<double>& v;

    // p = (c, w, a, b1, b0); model a w^2/((u-c)^2+w^2) + b0 + b1 u
    Eigen::VectorXd residuals(const Eigen::VectorXd& p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u[i] - p[0];
            const double w2 = p[1] * p[1];
            r[static_cast<Eigen::Index>(i)] = p[2] * w2 / (d * d + w2) + p[4] + p[3] * u[i] - v[i];
        }
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const
    {
        Eigen::MatrixXd J(static_cast<Eigen::Index>(u.size()), 5);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double d = u[i] - p[0];
            const double w = p[1];
            const double D = d * d + w * w;
            J(k, 0) = p[2] * w * w * 2.0 * d / (D * D);
            J(k, 1) = p[2] * 2.0 * w * d * d / (D * D);
            J(k, 2) = w * w / D;
            J(k, 3) = u[i];
            J(k, 4) = 1.0;
        }
        return J;
    }
};

} // namespace detail

/// Lorentzian peak or dip on a linear background. Initialization takes the
/// largest deviation from the endpoint baseline as the center and scans for
/// the half-maximum crossings to seed the width.
inline FitResult fit_lorentzian_with_offset(std::vector<Point> pts, const SolverOptions& opt = {})
{
    require(pts.size() >= 6, ErrorKind::domain, "fit_lorentzian_with_offset: need at least 6 points");
    detail::sort_by_x(pts);
    const auto sc = detail::scaling_for(pts);
    std::vector<double> u, v;
    for (const auto& p : pts) {
        u.push_back((p.x - sc.x0) / sc.sx);
        v.push_back(p.y / sc.sy);
    }
    const std::size_t n = u.size();

    // endpoint baseline from the outer tenth on each side
    const std::size_t k = std::max<std::size_t>(1, n / 10);
    double ul = 0, vl = 0, ur = 0, vr = 0;
    for (std::size_t i = 0; i < k; ++i) {
        ul += u[i];
        vl += v[i];
        ur += u[n - 1 - i];
        vr += v[n - 1 - i];
    }
    ul /= k; vl /= k; ur /= k; vr /= k;
    const double b1 = ur > ul ? (vr - vl) / (ur - ul) : 0.0;
    const double b0 = vl - b1 * ul;

    std::size_t peak = 0;
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = v[i] - (b0 + b1 * u[i]);
        if (std::abs(r) > std::abs(dev)) {
            dev = r;
            peak = i;
        }
    }

    FitResult f;
    f.names = {"center", "fwhm", "height", "offset_slope", "offset_intercept"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double vspan = 0.0;
    for (double y : v)
        vspan = std::max(vspan, std::abs(y));
    if (std::abs(dev) <= 1e-12 * std::max(vspan, 1e-300)) {
        f.values.assign(5, nan);
        f.std_errors.assign(5, nan);
        f.converged = false;
        f.message = "degenerate: no resonance feature above the baseline";
        return f;
    }

    auto half_crossing = [&](int dir) -> double {
        for (long i = static_cast<long>(peak); i >= 0 && i < static_cast<long>(n); i += dir) {
            const auto j = static_cast<std::size_t>(i);
            if (std::abs(v[j] - (b0 + b1 * u[j])) < std::abs(dev) / 2.0)
                return std::abs(u[j] - u[peak]);
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    double left = half_crossing(-1), right = half_crossing(+1);
    double w0 = std::isnan(left) ? right : (std::isnan(right) ? left : (left + right) / 2.0);
    if (std::isnan(w0) || w0 <= 0)
        w0 = (u.back() - u.front()) / 10.0;

    Eigen::VectorXd p0(5);
    p0 << u[peak], w0, dev, b1, b0;
    detail::LorentzModel model{u, v};
    const auto res = damped_gauss_newton(model, p0, opt);
    const Eigen::VectorXd& p = res.params;

    // map back: center = x0 + sx c, fwhm = 2 sx |w|, height = sy a,
    // slope = sy b1 / sx, intercept (at center) = sy (b0 + b1 c)
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(5, 5);
    T(0, 0) = sc.sx;
    T(1, 1) = 2.0 * sc.sx * (p[1] < 0 ? -1.0 : 1.0);
    T(2, 2) = sc.sy;
    T(3, 3) = sc.sy / sc.sx;
    T(4, 0) = sc.sy * p[3];
    T(4, 3) = sc.sy * p[0];
    T(4, 4) = sc.sy;
    const Eigen::MatrixXd cov = T * res.covariance * T.transpose();

    f.values = {sc.x0 + sc.sx * p[0], 2.0 * sc.sx * std::abs(p[1]), sc.sy * p[2], sc.sy * p[3] / sc.sx,
                sc.sy * (p[4] + p[3] * p[0])};
    f.std_errors = detail::errors_from(cov);
    f.residual_norm = std::sqrt(res.cost) * sc.sy;
    f.iterations = res.iterations;
    f.converged = res.converged && p.allFinite() && std::abs(p[1]) > 0;
    if (!f.converged)
        f.message = "did not converge; parameters unreliable";
    else if (std::abs(p[2]) <= 1e-9)
        f.converged = false, f.message = "degenerate: fitted height is zero";
    return f;
}

/// n(t) = A exp(-t/tau_decay) (1 - exp(-t/tau_rise)) + n_i.
inline double biexponential(double t, double A, double tau_rise, double tau_decay, double n_i)
{
    return A * std::exp(-t / tau_decay) * (1.0 - std::exp(-t / tau_rise)) + n_i;
}

namespace detail {

// Internally a (exp(-t/tau1) - exp(-t/tau2)) + n with log-time constants;
// the physical form follows with tau_decay = max(tau1, tau2) and
// 1/tau_rise = 1/min - 1/max.
struct BiexpModel {
    const std::vector<double>& t;
    const std::vector<double>& y;

    Eigen::VectorXd residuals(const Eigen::VectorXd& p) const
    {
        const double t1 = std::exp(p[1]), t2 = std::exp(p[2]);
        Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
        for (std::size_t i = 0; i < t.size(); ++i)
            r[static_cast<Eigen::Index>(i)] =
                p[0] * (std::exp(-t[i] / t1) - std::exp(-t[i] / t2)) + p[3] - y[i];
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const
    {
        const double t1 = std::exp(p[1]), t2 = std::exp(p[2]);
        Eigen::MatrixXd J(static_cast<Eigen::Index>(t.size()), 4);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double e1 = std::exp(-t[i] / t1), e2 = std::exp(-t[i] / t2);
            J(k, 0) = e1 - e2;
            J(k, 1) = p[0] * e1 * t[i] / t1;
            J(k, 2) = -p[0] * e2 * t[i] / t2;
            J(k, 3) = 1.0;
        }
        return J;
    }
};

// best (a, n) for fixed time constants
inline std::pair<double, double> linear_amplitudes(const std::vector<double>& t, const std::vector<double>& y,
                                                   double t1, double t2)
{
    double sff = 0, sf = 0, sfy = 0, sy = 0;
    const double n = static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double f = std::exp(-t[i] / t1) - std::exp(-t[i] / t2);
        sff += f * f;
        sf += f;
        sfy += f * y[i];
        sy += y[i];
    }
    const double det = sff * n - sf * sf;
    if (std::abs(det) < 1e-300)
        return {0.0, sy / n};
    return {(sfy * n - sf * sy) / det, (sff * sy - sf * sfy) / det};
}

} // namespace detail

/// Biexponential heating fit with multi-start over decades of both time
/// constants. tau_decay > tau_rise holds by construction.
inline FitResult fit_biexponential(std::vector<Point> pts, const SolverOptions& opt = {})
{
    require(pts.size() >= 8, ErrorKind::domain, "fit_biexponential: need at least 8 points");
    detail::sort_by_x(pts);
    require(pts.front().x > 0, ErrorKind::domain, "fit_biexponential: times must be positive");

    const double tscale = pts.back().x;
    double yscale = 0.0;
    for (const auto& p : pts)
        yscale = std::max(yscale, std::abs(p.y));
    if (yscale == 0.0)
        yscale = 1.0;
    std::vector<double> t, y;
    for (const auto& p : pts) {
        t.push_back(p.x / tscale);
        y.push_back(p.y / yscale);
    }

    // starting grid: decades from a tenth of the shortest time to ten times the longest
    const double lo = std::log(t.front() / 10.0), hi = std::log(10.0);
    const int grid = 7;
    std::vector<double> starts;
    for (int i = 0; i < grid; ++i)
        starts.push_back(lo + (hi - lo) * i / (grid - 1));

    detail::BiexpModel model{t, y};
    SolverOutcome best;
    best.cost = std::numeric_limits<double>::infinity();
    for (double l1 : starts)
        for (double l2 : starts) {
            if (l1 == l2)
                continue;
            const auto [a, n0] = detail::linear_amplitudes(t, y, std::exp(l1), std::exp(l2));
            Eigen::VectorXd p0(4);
            p0 << a, l1, l2, n0;
            auto res = damped_gauss_newton(model, p0, opt);
            if (res.params.allFinite() && res.cost < best.cost)
                best = std::move(res);
        }

    FitResult f;
    f.names = {"A", "tau_rise", "tau_decay", "n_i"};
    const Eigen::VectorXd& p = best.params;
    double t1 = std::exp(p[1]) * tscale, t2 = std::exp(p[2]) * tscale;
    double a = p[0] * yscale;
    // index of the slow constant within the internal parameter vector
    Eigen::Index slow = 1, fast = 2;
    if (t2 > t1) {
        std::swap(t1, t2);
        std::swap(slow, fast);
        a = -a;
    }
    const double tau_decay = t1;
    const double tau_rise = t1 * t2 / (t1 - t2);

    // Jacobian of (A, tau_rise, tau_decay, n_i) w.r.t. (a, l1, l2, n), in physical units
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
    T(0, 0) = (slow == 1 ? 1.0 : -1.0) * yscale;
    const double denom = (t1 - t2) * (t1 - t2);
    T(1, slow) = -t2 * t2 / denom * t1;
    T(1, fast) = t1 * t1 / denom * t2;
    T(2, slow) = t1;
    T(3, 3) = yscale;
    // internal covariance is in scaled y units; T carries yscale
    const Eigen::MatrixXd cov = T * best.covariance * T.transpose();

    f.values = {a, tau_rise, tau_decay, p[3] * yscale};
    f.std_errors = detail::errors_from(cov);
    f.residual_norm = std::sqrt(best.cost) * yscale;
    f.iterations = best.iterations;
    f.converged = best.converged;

    const double rel_split = (t1 - t2) / t1;
    if (!f.converged) {
        f.message = "did not converge; parameters unreliable";
    } else if (std::abs(a) <= 1e-6 * yscale || rel_split < 1e-6 || !std::isfinite(tau_rise)) {
        f.converged = false;
        f.message = "degenerate: amplitude is zero, time constants unidentifiable";
    }
    return f;
}

} // namespace omc::fit

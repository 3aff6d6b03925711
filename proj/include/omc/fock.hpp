// Exact truncated-Fock-space model of the write (two-mode squeezing) and
// read (beamsplitter) interactions followed by threshold detection.
//
// States are real density matrices on optical (x) mechanical, basis index
// i_optical * d + j_mechanical. Both interactions conserve a number
// combination (n_a - n_b for squeezing, n_a + n_b for the beamsplitter), so
// the generator is block diagonal and each block is exponentiated separately
// by scaling and squaring. This is the reference against which the closed
// forms and the Monte Carlo engine are checked.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "core.hpp"

namespace omc::fock {

using Matrix = Eigen::MatrixXd;

/// exp(A) by scaling and squaring with a diagonal Pade approximant of degree
/// 3, 5, 7, 9 or 13 picked from the 1-norm of A.
inline Matrix expm(const Matrix& A)
{
    require(A.rows() == A.cols(), ErrorKind::domain, "expm: matrix must be square");
    const Eigen::Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();

    auto pade = [&](const Matrix& X, const double* b, int m) -> Matrix {
        // U = X * sum_{odd} b_k X^(k-1), V = sum_{even} b_k X^k
        const Matrix X2 = X * X;
        Matrix U, V;
        if (m == 13) {
            const Matrix X4 = X2 * X2, X6 = X4 * X2;
            U = X * (X6 * (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I);
            V = X6 * (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I;
        } else {
            Matrix Ueven = b[1] * I, Veven = b[0] * I, P = I;
            for (int k = 2; k <= m; k += 2) {
                P = P * X2;
                Ueven += b[k + 1] * P;
                Veven += b[k] * P;
            }
            U = X * Ueven;
            V = Veven;
        }
        return (V - U).partialPivLu().solve(V + U);
    };

    static const double b3[] = {120., 60., 12., 1.};
    static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
    static const double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
    static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                2162160.,     110880.,      3960.,        90.,         1.};
    static const double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                 1187353796428800.,  129060195264000.,   10559470521600.,
                                 670442572800.,      33522128640.,       1323241920.,
                                 40840800.,          960960.,            16380.,
                                 182.,               1.};
    if (norm <= 1.495585217958292e-2) return pade(A, b3, 3);
    if (norm <= 2.539398330063230e-1) return pade(A, b5, 5);
    if (norm <= 9.504178996162932e-1) return pade(A, b7, 7);
    if (norm <= 2.097847961257068e0) return pade(A, b9, 9);

    const double theta13 = 5.371920351148152;
    int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    Matrix R = pade(A / std::ldexp(1.0, s), b13, 13);
    for (int i = 0; i < s; ++i)
        R = R * R;
    return R;
}

struct TwoModeState {
    Matrix rho; // (d*d) x (d*d)
    int d = 0;

    double trace() const { return rho.trace(); }
};

/// Hermiticity, unit trace and positivity within the given tolerance.
inline void validate_state(const Matrix& rho, double tol = 1e-10)
{
    require((rho - rho.transpose()).cwiseAbs().maxCoeff() <= tol, ErrorKind::numerical,
            "fock: density matrix is not Hermitian");
    require(std::abs(rho.trace() - 1.0) <= tol, ErrorKind::numerical, "fock: density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -tol, ErrorKind::numerical, "fock: density matrix is not positive");
}

inline void validate_state(const TwoModeState& s, double tol = 1e-10) { validate_state(s.rho, tol); }

inline constexpr double default_tail_tolerance = 1e-8;

/// Probability weight of a thermal distribution at or above level d.
inline double thermal_tail(double n, int d) { return n == 0 ? 0.0 : std::pow(n / (n + 1.0), d); }

/// Smallest truncation whose thermal tail is below tol (at least min_d).
inline int truncation_for(double n, double tol, int min_d = 4)
{
    int d = min_d;
    while (thermal_tail(n, d) >= tol)
        ++d;
    return d;
}

/// Diagonal thermal distribution of mean n over levels 0..d-1, renormalized.
inline Eigen::VectorXd thermal_populations(double n, int d, double tail_tol = default_tail_tolerance)
{
    require(n >= 0, ErrorKind::domain, "thermal_state: n must be non-negative");
    require(d >= 2, ErrorKind::domain, "thermal_state: d must be at least 2");
    if (thermal_tail(n, d) >= tail_tol)
        fail(ErrorKind::numerical, "thermal_state: truncation d = " + std::to_string(d) +
                                       " too small for n = " + std::to_string(n) + "; use d >= " +
                                       std::to_string(truncation_for(n, tail_tol)));
    Eigen::VectorXd p(d);
    const double q = n / (n + 1.0);
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
        p[k] = w;
        w *= q;
    }
    return p / p.sum();
}

/// Optical vacuum (x) mechanical thermal state.
inline TwoModeState thermal_state(double n, int d, double tail_tol = default_tail_tolerance)
{
    const Eigen::VectorXd p = thermal_populations(n, d, tail_tol);
    TwoModeState s{Matrix::Zero(d * d, d * d), d};
    for (int j = 0; j < d; ++j)
        s.rho(j, j) = p[j];
    return s;
}

/// Optical vacuum (x) the given mechanical density matrix.
inline TwoModeState with_optical_vacuum(const Matrix& mech)
{
    const int d = static_cast<int>(mech.rows());
    TwoModeState s{Matrix::Zero(d * d, d * d), d};
    s.rho.topLeftCorner(d, d) = mech;
    return s;
}

inline Eigen::VectorXd mean_occupations(const TwoModeState& s)
{
    double na = 0, nb = 0;
    for (int i = 0; i < s.d; ++i)
        for (int j = 0; j < s.d; ++j) {
            const double p = s.rho(i * s.d + j, i * s.d + j);
            na += i * p;
            nb += j * p;
        }
    Eigen::VectorXd out(2);
    out << na, nb;
    return out;
}

namespace detail {

enum class Interaction { squeeze, swap };

// Basis indices i*d + j sharing one value of the conserved quantity
// (i - j for the squeeze, i + j for the swap), in increasing order.
inline std::vector<int> block_indices(Interaction kind, int key, int d)
{
    std::vector<int> idx;
    for (int i = 0; i < d; ++i) {
        const int j = kind == Interaction::squeeze ? i - key : key - i;
        if (j >= 0 && j < d)
            idx.push_back(i * d + j);
    }
    return idx;
}

// Generator a^dag b^dag - a b (squeeze) or a^dag b - a b^dag (swap) restricted to a block.
inline Matrix block_generator(Interaction kind, const std::vector<int>& idx, int d)
{
    const int m = static_cast<int>(idx.size());
    Matrix G = Matrix::Zero(m, m);
    for (int r = 0; r < m; ++r) {
        const int i = idx[r] / d, j = idx[r] % d;
        for (int c = 0; c < m; ++c) {
            const int k = idx[c] / d, l = idx[c] % d;
            double v = 0.0;
            if (kind == Interaction::squeeze) {
                if (i == k + 1 && j == l + 1) v += std::sqrt(double(i) * j);
                if (i == k - 1 && j == l - 1) v -= std::sqrt(double(k) * l);
            } else {
                if (i == k + 1 && j == l - 1) v += std::sqrt(double(i) * l);
                if (i == k - 1 && j == l + 1) v -= std::sqrt(double(k) * j);
            }
            G(r, c) = v;
        }
    }
    return G;
}

// Orthogonal propagator exp(strength * G), assembled block by block.
inline Eigen::SparseMatrix<double> propagator(Interaction kind, double strength, int d)
{
    const int lo = kind == Interaction::squeeze ? -(d - 1) : 0;
    const int hi = kind == Interaction::squeeze ? d - 1 : 2 * d - 2;
    std::vector<Eigen::Triplet<double>> trip;
    for (int key = lo; key <= hi; ++key) {
        const auto idx = block_indices(kind, key, d);
        const Matrix U = expm(strength * block_generator(kind, idx, d));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c)
                if (U(r, c) != 0.0)
                    trip.emplace_back(idx[r], idx[c], U(r, c));
    }
    Eigen::SparseMatrix<double> U(d * d, d * d);
    U.setFromTriplets(trip.begin(), trip.end());
    return U;
}

inline TwoModeState evolve(const TwoModeState& s, Interaction kind, double strength)
{
    const Eigen::SparseMatrix<double> U = propagator(kind, strength, s.d);
    const Matrix tmp = U * s.rho;
    TwoModeState out{Matrix(tmp * U.transpose()), s.d};
    out.rho = (out.rho + out.rho.transpose()) / 2.0;
    return out;
}

} // namespace detail

/// Squeeze parameter whose vacuum pair-creation weight sinh^2 r equals p.
inline double squeeze_for_probability(double p) { return std::asinh(std::sqrt(p)); }

/// Beamsplitter angle whose swap probability sin^2 theta equals p.
inline double swap_angle_for_probability(double p)
{
    require(p >= 0 && p <= 1, ErrorKind::domain, "swap probability outside [0,1]");
    return std::asin(std::sqrt(p));
}

/// exp(r (a^dag b^dag - a b)) rho exp(...)^T.
inline TwoModeState apply_two_mode_squeeze(const TwoModeState& s, double r)
{
    const Eigen::VectorXd n = mean_occupations(s);
    const double sh = std::sinh(r);
    const double load = sh * sh * (std::max(n[0], n[1]) + 1.0);
    if (load > s.d / 20.0)
        fail(ErrorKind::numerical, "apply_two_mode_squeeze: sinh^2(r)(n+1) = " + std::to_string(load) +
                                       " too large for truncation d = " + std::to_string(s.d));
    if (r == 0.0)
        return s;
    return detail::evolve(s, detail::Interaction::squeeze, r);
}

/// exp(theta (a^dag b - a b^dag)) rho exp(...)^T.
inline TwoModeState apply_beamsplitter(const TwoModeState& s, double theta)
{
    if (theta == 0.0)
        return s;
    return detail::evolve(s, detail::Interaction::swap, theta);
}

/// Per-level probability that a threshold detector behind transmission eta
/// fires: 1 - (1 - eta)^k.
inline Eigen::VectorXd click_weights(int d, double eta)
{
    Eigen::VectorXd w(d);
    for (int k = 0; k < d; ++k)
        w[k] = 1.0 - std::pow(1.0 - eta, k);
    return w;
}

inline double click_probability(const TwoModeState& s, double eta)
{
    require(eta >= 0 && eta <= 1, ErrorKind::domain, "click_probability: eta outside [0,1]");
    const Eigen::VectorXd w = click_weights(s.d, eta);
    double p = 0.0;
    for (int i = 1; i < s.d; ++i)
        for (int j = 0; j < s.d; ++j)
            p += w[i] * s.rho(i * s.d + j, i * s.d + j);
    return p;
}

namespace detail {

// sum_i weight_i <i| rho |i> over the optical mode
inline Matrix weighted_mechanical(const TwoModeState& s, const Eigen::VectorXd& weight)
{
    Matrix m = Matrix::Zero(s.d, s.d);
    for (int i = 0; i < s.d; ++i)
        if (weight[i] != 0.0)
            m += weight[i] * s.rho.block(i * s.d, i * s.d, s.d, s.d);
    return m;
}

} // namespace detail

inline Matrix mechanical_state(const TwoModeState& s)
{
    return detail::weighted_mechanical(s, Eigen::VectorXd::Ones(s.d));
}

/// Mechanical state conditioned on at least one detected photon.
inline Matrix heralded_state(const TwoModeState& s, double eta)
{
    const Eigen::VectorXd w = click_weights(s.d, eta);
    const Matrix m = detail::weighted_mechanical(s, w);
    const double p = m.trace();
    if (!(p > 0))
        fail(ErrorKind::numerical, "heralded_state: click probability is zero, cannot condition");
    return m / p;
}

/// Mechanical state conditioned on no detected photon.
inline Matrix unheralded_state(const TwoModeState& s, double eta)
{
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.d) - click_weights(s.d, eta);
    const Matrix m = detail::weighted_mechanical(s, w);
    const double p = m.trace();
    if (!(p > 0))
        fail(ErrorKind::numerical, "unheralded_state: no-click probability is zero");
    return m / p;
}

/// Optical click probability of a swap read on the given mechanical state.
inline double read_click_probability(const Matrix& mech, double p_read, double eta)
{
    return click_probability(apply_beamsplitter(with_optical_vacuum(mech), swap_angle_for_probability(p_read)),
                             eta);
}

/// Optical-only click statistics of a write/read pair (no dark counts).
struct JointClickTable {
    double p_write = 0.0;           // P(write click)
    double p_read_given_write = 0.0;
    double p_read_given_none = 0.0;
    double p_read = 0.0;            // unconditional
    int d = 0;
};

inline constexpr int max_oracle_truncation = 320;

inline int auto_truncation(double n_th, double p_write)
{
    // thermal tail far below the 1e-8 stability target plus headroom for the
    // photon-phonon pair added by the write
    const int d = truncation_for(n_th * (1.0 + p_write) + p_write, 1e-12, 6) + 2;
    if (d > max_oracle_truncation)
        fail(ErrorKind::numerical, "fock: n_th = " + std::to_string(n_th) + " needs truncation above " +
                                       std::to_string(max_oracle_truncation) + " for the oracle");
    return d;
}

namespace detail {

// Optical click probability after a swap read of each mechanical Fock level.
inline Eigen::VectorXd read_click_per_level(double p_read, double eta, int d)
{
    const double theta = swap_angle_for_probability(p_read);
    const Eigen::VectorXd w = click_weights(d, eta);
    Eigen::VectorXd c(d);
    for (int j = 0; j < d; ++j) {
        const auto idx = block_indices(Interaction::swap, j, d); // |i, j - i>
        const Matrix U = expm(theta * block_generator(Interaction::swap, idx, d));
        // column of |0, j>, the first entry of the block
        const Eigen::VectorXd psi = U.col(0);
        double p = 0.0;
        for (std::size_t r = 0; r < idx.size(); ++r)
            p += psi[static_cast<Eigen::Index>(r)] * psi[static_cast<Eigen::Index>(r)] * w[idx[r] / d];
        c[j] = p;
    }
    return c;
}

} // namespace detail

/// Write/read click statistics for a thermal mechanical input. A thermal
/// state is a mixture of |0, m>; the squeeze keeps each in its own block of
/// fixed i - j and leaves the heralded mechanical state diagonal, so every
/// level is evolved as a pure vector instead of a (d^2 x d^2) density matrix.
inline JointClickTable joint_click_table(double n_th, double p_write, double p_read, double eta, int d = 0)
{
    require(p_write >= 0 && p_write < 1 && p_read >= 0 && p_read < 1, ErrorKind::domain,
            "joint_click_table: probabilities must lie in [0,1)");
    require(eta >= 0 && eta <= 1, ErrorKind::domain, "joint_click_table: eta outside [0,1]");
    const bool automatic = d == 0;
    if (automatic)
        d = auto_truncation(n_th, p_write);
    const Eigen::VectorXd pop = thermal_populations(n_th, d, automatic ? 1e-12 : default_tail_tolerance);
    const double r = squeeze_for_probability(p_write);
    const double sh = std::sinh(r);
    if (sh * sh * (n_th + 1.0) > d / 20.0)
        fail(ErrorKind::numerical, "joint_click_table: write strength too large for truncation d = " +
                                       std::to_string(d));

    const Eigen::VectorXd w = click_weights(d, eta);
    Eigen::VectorXd herald = Eigen::VectorXd::Zero(d), none = Eigen::VectorXd::Zero(d);
    for (int m = 0; m < d; ++m) {
        if (pop[m] == 0.0)
            continue;
        const auto idx = detail::block_indices(detail::Interaction::squeeze, -m, d); // |i, m + i>
        const Matrix U = r == 0.0 ? Matrix::Identity(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()))
                                  : expm(r * detail::block_generator(detail::Interaction::squeeze, idx, d));
        const Eigen::VectorXd psi = U.col(0);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double q = pop[m] * psi[static_cast<Eigen::Index>(k)] * psi[static_cast<Eigen::Index>(k)];
            const int i = idx[k] / d, j = idx[k] % d;
            herald[j] += q * w[i];
            none[j] += q * (1.0 - w[i]);
        }
    }
    const Eigen::VectorXd read = detail::read_click_per_level(p_read, eta, d);
    JointClickTable t;
    t.d = d;
    t.p_write = herald.sum();
    const double p_none = none.sum();
    t.p_read = herald.dot(read) + none.dot(read);
    t.p_read_given_write = t.p_write > 0 ? herald.dot(read) / t.p_write : 0.0;
    t.p_read_given_none = p_none > 0 ? none.dot(read) / p_none : 0.0;
    return t;
}

/// Same table through the general density-matrix channels; O(d^6), small d only.
inline JointClickTable joint_click_table_dense(double n_th, double p_write, double p_read, double eta, int d)
{
    const TwoModeState initial = thermal_state(n_th, d);
    const TwoModeState written = apply_two_mode_squeeze(initial, squeeze_for_probability(p_write));
    JointClickTable t;
    t.d = d;
    t.p_write = click_probability(written, eta);
    t.p_read = read_click_probability(mechanical_state(written), p_read, eta);
    t.p_read_given_write = t.p_write > 0 ? read_click_probability(heralded_state(written, eta), p_read, eta) : 0.0;
    t.p_read_given_none = t.p_write < 1 ? read_click_probability(unheralded_state(written, eta), p_read, eta) : 0.0;
    return t;
}

struct G2Prediction {
    double g2 = 0.0;
    double p_w = 0.0;  // P(W) including darks
    double p_r = 0.0;  // P(R) including darks
    double p_wr = 0.0; // P(W and R)
    double p_r_given_w = 0.0;
    JointClickTable optical;
};

/// Cross-correlation of write and read clicks in the same sequence. Dark
/// counts are independent Bernoulli events OR-ed with the optical click in
/// each window.
inline G2Prediction oracle_g2(double n_th, double p_write, double p_read, double eta_det, double dark_write,
                              double dark_read, int d = 0)
{
    require(dark_write >= 0 && dark_write < 1 && dark_read >= 0 && dark_read < 1, ErrorKind::domain,
            "oracle_g2: dark probabilities must lie in [0,1)");
    G2Prediction g;
    g.optical = joint_click_table(n_th, p_write, p_read, eta_det, d);
    const auto& t = g.optical;
    auto with_dark = [](double p, double dark) { return 1.0 - (1.0 - p) * (1.0 - dark); };

    g.p_w = with_dark(t.p_write, dark_write);
    g.p_r = with_dark(t.p_read, dark_read);
    g.p_wr = t.p_write * with_dark(t.p_read_given_write, dark_read) +
             (1.0 - t.p_write) * dark_write * with_dark(t.p_read_given_none, dark_read);
    if (!(g.p_w > 0 && g.p_r > 0))
        fail(ErrorKind::numerical, "oracle_g2: write or read click probability is zero");
    g.p_r_given_w = g.p_wr / g.p_w;
    g.g2 = g.p_wr / (g.p_w * g.p_r);
    return g;
}

inline G2Prediction oracle_g2(double n_th, double p_write, double p_read, double eta_det, double dark_per_window)
{
    return oracle_g2(n_th, p_write, p_read, eta_det, dark_per_window, dark_per_window);
}

} // namespace omc::fock

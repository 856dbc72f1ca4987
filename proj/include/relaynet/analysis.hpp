#pragma once

// =============================================================================
// relaynet - Deterministic analysis of the half-duplex SK scheme
// =============================================================================
// The exact alternating variance recursion of the closed-loop half-duplex
// protocol, its asymptotic envelope and stability predicate, the monotone
// fixed-point iterator, the sqrt-recursion convergence test, and the
// information rate of the scheme.
// =============================================================================

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "relaynet/common.hpp"
#include "relaynet/model.hpp"

namespace relaynet {

// =============================================================================
// Derived constants
// =============================================================================

/// Constants of the two-phase variance recursion:
///   k  = Nd / (2 h^2 b Ps + Nd)
///   k1 = (sum_i sqrt(4 h_i^2 b Ps Pr^i / (2 b Ps + Nr^i)))^2
///   k2 = sqrt(2 h^2 (1-b) Ps)
///   f_inf = Nt / ((k2 + sqrt(k1 k))^2 + Nt)
/// m_tilde is carried in both printed forms; they are algebraically equal and
/// the tests assert it.
struct HalfDuplexDerived {
    double k = 1.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double m_tilde = 0.0;        ///< theorem form
    double m_tilde_proof = 0.0;  ///< (k2 + sqrt(k1 k))^2
    double n_tilde = 0.0;
    double f_inf = 0.0;
};

[[nodiscard]] inline HalfDuplexDerived hd_derive(const HalfDuplex& t, double beta,
                                                 const std::vector<double>& powers) {
    if (powers.size() != t.relay_noise.size())
        throw std::invalid_argument("hd_derive: power count mismatch");
    const double Ps = t.sensor_power;
    const double Nd = t.ctrl_noise;
    const double h2 = t.direct_gain * t.direct_gain;

    HalfDuplexDerived d;
    d.k = Nd / (2.0 * h2 * beta * Ps + Nd);
    d.k2 = std::sqrt(std::max(0.0, 2.0 * h2 * (1.0 - beta) * Ps));
    double s1 = 0.0, s2 = 0.0;
    d.n_tilde = Nd;
    for (size_t i = 0; i < powers.size(); ++i) {
        const double den = 2.0 * beta * Ps + t.relay_noise[i];
        if (den <= 0.0) continue;
        const double hi2 = t.relay_gains[i] * t.relay_gains[i];
        s1 += std::sqrt(4.0 * hi2 * beta * Ps * powers[i] / den);
        s2 += std::sqrt(2.0 * hi2 * powers[i] / den);
        d.n_tilde += 2.0 * hi2 * powers[i] * t.relay_noise[i] / den;
    }
    d.k1 = s1 * s1;
    const double w = std::sqrt(2.0 * beta * Ps * Nd / (2.0 * h2 * beta * Ps + Nd));
    d.m_tilde = (d.k2 + w * s2) * (d.k2 + w * s2);
    const double root = d.k2 + std::sqrt(d.k1 * d.k);
    d.m_tilde_proof = root * root;
    d.f_inf = d.n_tilde / (d.m_tilde_proof + d.n_tilde);
    return d;
}

// =============================================================================
// Variance recursion
// =============================================================================

/// Exact alternating recursion for the state variance under the protocol:
///   a[1]   = lambda^2 Nd/(h^2 Ps) a[0] + n_w          (direct-link init)
///   a[t]   = lambda^2 k a[t-1] + n_w                   t = 2,4,6,...
///   a[t]   = lambda^2 (lambda^2 k a[t-2] + n_w) f(a[t-2]) + n_w   t = 3,5,...
/// with f(a) = (b/a + Nt) / ((k2 + sqrt(k1 k + b/a))^2 + b/a + Nt),
/// b = n_w k1 / lambda^2. When h^2 Ps = 0 the init step carries no
/// information and a[1] = lambda^2 a[0] + n_w.
[[nodiscard]] inline std::vector<double> hd_variance_recursion(
    const HalfDuplex& t, double beta, const std::vector<double>& powers, double lambda,
    double n_w, double alpha0, int steps) {
    if (steps < 1) throw std::invalid_argument("hd_variance_recursion: steps < 1");
    const auto d = hd_derive(t, beta, powers);
    const double l2 = lambda * lambda;
    const double h2ps = t.direct_gain * t.direct_gain * t.sensor_power;

    std::vector<double> a(size_t(steps) + 1);
    a[0] = alpha0;
    a[1] = (h2ps > 0.0 ? l2 * t.ctrl_noise / h2ps * alpha0 : l2 * alpha0) + n_w;
    if (lambda == 0.0) {
        for (int i = 1; i <= steps; ++i) a[size_t(i)] = n_w;
        return a;
    }
    const double b = n_w * d.k1 / l2;
    auto f = [&](double x) {
        const double bx = x > 0.0 ? b / x : 0.0;
        const double root = d.k2 + std::sqrt(d.k1 * d.k + bx);
        return (bx + d.n_tilde) / (root * root + bx + d.n_tilde);
    };
    for (int i = 2; i <= steps; ++i) {
        if (i % 2 == 0) {
            a[size_t(i)] = l2 * d.k * a[size_t(i) - 1] + n_w;
        } else {
            const double prev2 = a[size_t(i) - 2];
            a[size_t(i)] = l2 * (l2 * d.k * prev2 + n_w) * f(prev2) + n_w;
        }
    }
    return a;
}

/// Asymptotic stability predicate of the recursion: lambda^4 k f_inf < 1
/// (strict). Equivalent to log2(lambda) being below the scheme's rate.
[[nodiscard]] inline bool hd_stability_predicate(const HalfDuplex& t, double beta,
                                                 const std::vector<double>& powers,
                                                 double lambda) {
    const auto d = hd_derive(t, beta, powers);
    return std::pow(lambda, 4) * d.k * d.f_inf < 1.0;
}

// =============================================================================
// Envelope f(x) <= f_inf + m/x
// =============================================================================

struct EnvelopeFit {
    double value = 0.0;   ///< f(x)
    double f_inf = 0.0;   ///< limit as x -> infinity
    double m = 0.0;       ///< numerically fitted sup x (f(x) - f_inf)
};

/// f(x) = (a + b/x) / ((c + sqrt(d + b/x))^2 + a + b/x) with a,b,c,d >= 0.
/// The constant m is existence-only in the analysis; it is fitted here as the
/// supremum of x (f(x) - f_inf) on a log grid so envelope tests can run.
[[nodiscard]] inline EnvelopeFit envelope_bound(double a, double b, double c, double d,
                                                double x) {
    if (a < 0 || b < 0 || c < 0 || d < 0 || x <= 0)
        throw std::invalid_argument("envelope_bound: needs a,b,c,d >= 0 and x > 0");
    auto f = [&](double xx) {
        const double bx = b / xx;
        const double root = c + std::sqrt(d + bx);
        return (a + bx) / (root * root + a + bx);
    };
    EnvelopeFit fit;
    {
        const double root = c + std::sqrt(d);
        fit.f_inf = a / (root * root + a);
        if (root == 0.0 && a == 0.0) fit.f_inf = 0.0;
    }
    fit.value = f(x);
    if (b == 0.0) {
        fit.m = 0.0;
        return fit;
    }
    const double x0 = 1e-6;
    double m = 0.0;
    for (int i = 0; i <= 600; ++i) {  // log grid over [1e-6, 1e12]
        const double xx = x0 * std::pow(10.0, i * 0.03);
        m = std::max(m, xx * (f(xx) - fit.f_inf));
    }
    fit.m = m * (1.0 + 1e-9);
    return fit;
}

// =============================================================================
// Fixed-point iteration (monotone maps)
// =============================================================================

struct FixedPointResult {
    bool converged = false;
    double limit = 0.0;           ///< last iterate; the fixed point if converged
    int iterations = 0;
    int direction = 0;            ///< +1 nondecreasing, -1 nonincreasing, 0 constant
    bool diverged = false;        ///< iterates still growing at max_iter
};

/// Iterate x <- T(x) for a nondecreasing continuous map with a unique fixed
/// point. Converges monotonically from either side; declared converged when
/// |x' - x| < tol (1 + |x|).
[[nodiscard]] inline FixedPointResult fixed_point_iterate(
    const std::function<double(double)>& map, double x0, int max_iter = 1000000,
    double tol = 1e-12) {
    FixedPointResult r;
    double x = x0;
    double first_step = 0.0;
    for (int i = 0; i < max_iter; ++i) {
        const double nx = map(x);
        if (i == 0) {
            first_step = nx - x;
            r.direction = first_step > 0 ? 1 : (first_step < 0 ? -1 : 0);
        }
        r.iterations = i + 1;
        if (std::abs(nx - x) < tol * (1.0 + std::abs(x))) {
            r.converged = true;
            r.limit = nx;
            return r;
        }
        if (!std::isfinite(nx)) {
            r.diverged = true;
            r.limit = x;
            return r;
        }
        x = nx;
    }
    r.limit = x;
    r.diverged = r.direction > 0;
    return r;
}

// =============================================================================
// sqrt recursion a' = k1 a + k2 sqrt(a) + k3
// =============================================================================

struct SqrtRecursionResult {
    std::vector<double> trajectory;
    bool converges = false;      ///< iff k1 < 1
    double limit = 0.0;          ///< closed-form fixed point when it converges
};

[[nodiscard]] inline SqrtRecursionResult sqrt_recursion(double k1, double k2, double k3,
                                                        double a0, int steps) {
    if (k1 < 0 || k2 < 0 || k3 < 0 || a0 < 0)
        throw std::invalid_argument("sqrt_recursion: needs nonnegative parameters");
    SqrtRecursionResult r;
    r.trajectory.resize(size_t(steps) + 1);
    r.trajectory[0] = a0;
    double a = a0;
    for (int i = 1; i <= steps; ++i) {
        a = k1 * a + k2 * std::sqrt(a) + k3;
        if (!std::isfinite(a)) a = std::numeric_limits<double>::infinity();
        r.trajectory[size_t(i)] = a;
    }
    r.converges = k1 < 1.0;
    if (r.converges) {
        const double root = (k2 + std::sqrt(k2 * k2 + 4.0 * (1.0 - k1) * k3)) / (2.0 * (1.0 - k1));
        r.limit = root * root;
    }
    return r;
}

// =============================================================================
// Information rate
// =============================================================================

/// Information rate of the closed-loop half-duplex protocol at (beta, alloc):
/// the per-phase mutual informations averaged over the two slots,
///   (1/2)[ I(S1;R1) + I(S2;I2) ] per round = (1/4)[log2(1+2h^2 b Ps/Nd) +
///   log2(1+Mt/Nt)].
/// Also the directed information rate of the scheme (the innovations are
/// mutually independent).
[[nodiscard]] inline Rate info_rate_halfduplex(const HalfDuplex& t, double beta,
                                               const std::vector<double>& powers) {
    const auto d = hd_derive(t, beta, powers);
    const double Nd = t.ctrl_noise;
    const double h2 = t.direct_gain * t.direct_gain;
    const double i_phase1 = 0.5 * std::log2((2.0 * h2 * beta * t.sensor_power + Nd) / Nd);
    const double i_phase2 = 0.5 * std::log2((d.m_tilde + d.n_tilde) / d.n_tilde);
    return Rate(std::max(0.0, 0.5 * (i_phase1 + i_phase2)));
}

}  // namespace relaynet

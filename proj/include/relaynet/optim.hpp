#pragma once

// =============================================================================
// relaynet - Small numeric optimization kernels
// =============================================================================

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace relaynet::optim {

// ---------------------------------------------------------------------------
// 1-D maximization
// ---------------------------------------------------------------------------

/// Golden-section maximization on [lo, hi].
template <class F>
double golden_section_max(F&& f, double lo, double hi, double tol = 1e-6, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498948482;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Coarse grid scan followed by golden-section refinement around the best
/// bracket. Guards against multi-modal objectives the plain golden section
/// would mishandle.
template <class F>
double grid_then_golden_max(F&& f, double lo, double hi, int grid = 33, double tol = 1e-6) {
    double best_x = lo, best_f = f(lo);
    for (int i = 1; i <= grid; ++i) {
        const double x = lo + (hi - lo) * double(i) / grid;
        const double v = f(x);
        if (v > best_f) { best_f = v; best_x = x; }
    }
    const double step = (hi - lo) / grid;
    const double a = std::max(lo, best_x - step);
    const double b = std::min(hi, best_x + step);
    const double xg = golden_section_max(f, a, b, tol);
    return f(xg) > best_f ? xg : best_x;
}

// ---------------------------------------------------------------------------
// Root bracketing / bisection
// ---------------------------------------------------------------------------

/// Bisection for f(x) = 0 with f(lo) and f(hi) of opposite sign.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol = 0.0, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw std::runtime_error("bisect: no sign change in bracket");
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (fhi > 0)) { hi = mid; fhi = fm; }
        else { lo = mid; flo = fm; }
        if (hi - lo <= xtol) break;
    }
    return 0.5 * (lo + hi);
}

/// Expand [lo, hi] geometrically until g changes sign; g(lo) must have the
/// starting sign. Returns the bracketing upper end.
template <class G>
double expand_upper_bracket(G&& g, double lo, double hi0, int max_doublings = 200) {
    double hi = hi0;
    const bool sign_lo = g(lo) > 0;
    for (int i = 0; i < max_doublings; ++i) {
        if ((g(hi) > 0) != sign_lo) return hi;
        hi *= 2.0;
    }
    throw std::runtime_error("bracket expansion failed");
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// Euclidean projection onto the simplex {x >= 0, sum x = budget}.
inline void project_simplex(std::vector<double>& x, double budget) {
    const size_t n = x.size();
    if (n == 0) return;
    if (budget <= 0.0) { std::fill(x.begin(), x.end(), 0.0); return; }
    std::vector<double> u = x;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (size_t i = 0; i < n; ++i) {
        css += u[i];
        const double t = (css - budget) / double(i + 1);
        if (u[i] - t > 0) { rho = int(i + 1); theta = t; }
    }
    (void)rho;
    for (auto& v : x) v = std::max(v - theta, 0.0);
}

/// Euclidean projection onto {q >= 0, ||q||^2 <= radius_sq} (clip, then scale).
inline void project_ball_nonneg(std::vector<double>& q, double radius_sq) {
    double norm_sq = 0.0;
    for (auto& v : q) {
        if (v < 0.0) v = 0.0;
        norm_sq += v * v;
    }
    if (norm_sq > radius_sq && norm_sq > 0.0) {
        const double s = std::sqrt(radius_sq / norm_sq);
        for (auto& v : q) v *= s;
    }
}

// ---------------------------------------------------------------------------
// Projected gradient ascent
// ---------------------------------------------------------------------------

struct AscentOptions {
    int max_iter = 400;
    double obj_tol = 1e-9;      ///< stop when the improvement falls below this
    double fd_step = 1e-7;      ///< central-difference step (relative)
    double init_step = 1.0;
};

/// Maximize f over a convex set given by `project` (in-place projection),
/// gradients by central differences. Returns the best objective value seen;
/// x holds the corresponding point.
template <class F, class Proj>
double projected_gradient_max(F&& f, Proj&& project, std::vector<double>& x,
                              const AscentOptions& opt = {}) {
    project(x);
    double fx = f(x);
    const size_t n = x.size();
    if (n == 0) return fx;
    std::vector<double> g(n), trial(n);
    double step = opt.init_step;
    for (int it = 0; it < opt.max_iter; ++it) {
        double scale = 1.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        const double h = opt.fd_step * scale;
        for (size_t i = 0; i < n; ++i) {
            std::vector<double> xp = x, xm = x;
            xp[i] += h;
            xm[i] = std::max(0.0, xm[i] - h);
            const double denom = xp[i] - xm[i];
            g[i] = denom > 0 ? (f(xp) - f(xm)) / denom : 0.0;
        }
        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        if (gnorm == 0.0) break;

        bool improved = false;
        for (int bt = 0; bt < 30; ++bt) {
            for (size_t i = 0; i < n; ++i) trial[i] = x[i] + step * g[i];
            project(trial);
            const double ft = f(trial);
            if (ft > fx) {
                improved = (ft - fx) > opt.obj_tol * (1.0 + std::abs(fx));
                x = trial;
                fx = ft;
                step *= 1.6;
                break;
            }
            step *= 0.5;
        }
        if (!improved && step < 1e-14) break;
        if (!improved && it > 32) break;
    }
    return fx;
}

/// Single-threaded pairwise (cascade) summation: associative order fixed by
/// the data layout, independent of any threading used to fill the buffer.
inline double pairwise_sum(const double* data, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

}  // namespace relaynet::optim

#pragma once

// =============================================================================
// relaynet - Power allocation optimizers
// =============================================================================
// Water-filling for orthogonal controller links, the cascade Lagrangian closed
// form, the beta = 1 non-orthogonal closed form, and the full-duplex quartic
// eta* root.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "relaynet/common.hpp"
#include "relaynet/model.hpp"
#include "relaynet/optim.hpp"

namespace relaynet {

struct AllocationResult {
    std::vector<double> powers;            ///< per-relay transmit powers
    double multiplier = 0.0;               ///< water level / Lagrange parameter
    std::optional<double> eta_star;        ///< full-duplex correlation root
    std::optional<double> beta;            ///< half-duplex phase split
    Rate objective{0.0};                   ///< value achieved by this allocation
};

// =============================================================================
// Water-filling
// =============================================================================

/// Maximize sum_i log2(1 + 2 P_i / Nd_i) subject to sum P_i = budget, P >= 0.
/// KKT solution P_i = max{gamma - Nd_i/2, 0} with gamma spending the budget
/// exactly; equal marginals 2/(Nd_i + 2 P_i) across active channels.
[[nodiscard]] inline AllocationResult waterfill(const std::vector<double>& ctrl_noise,
                                                double budget) {
    const size_t n = ctrl_noise.size();
    if (n == 0) throw std::invalid_argument("waterfill: empty channel list");
    for (double nd : ctrl_noise)
        if (!(nd > 0.0)) throw std::invalid_argument("waterfill: noise must be > 0");
    if (budget < 0.0) throw std::invalid_argument("waterfill: negative budget");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return ctrl_noise[a] < ctrl_noise[b]; });

    // active set grows with the water level; exact closed-form level per size
    double gamma = ctrl_noise[order[0]] / 2.0;
    size_t active = 1;
    for (size_t k = 1; k <= n; ++k) {
        double half_sum = 0.0;
        for (size_t i = 0; i < k; ++i) half_sum += ctrl_noise[order[i]] / 2.0;
        const double g = (budget + half_sum) / double(k);
        const bool above = g >= ctrl_noise[order[k - 1]] / 2.0 - 1e-15;
        const bool below_next = (k == n) || g <= ctrl_noise[order[k]] / 2.0 + 1e-15;
        if (above && below_next) {
            gamma = g;
            active = k;
        }
    }
    (void)active;

    AllocationResult res;
    res.powers.assign(n, 0.0);
    double spent = 0.0, bits = 0.0;
    for (size_t i = 0; i < n; ++i) {
        res.powers[i] = std::max(gamma - ctrl_noise[i] / 2.0, 0.0);
        spent += res.powers[i];
    }
    // absorb float residue into the largest allocation so the budget is exact
    if (budget > 0.0 && spent > 0.0) {
        const double corr = budget - spent;
        auto it = std::max_element(res.powers.begin(), res.powers.end());
        *it = std::max(0.0, *it + corr);
    }
    for (size_t i = 0; i < n; ++i) bits += log2_1p(2.0 * res.powers[i] / ctrl_noise[i]);
    res.multiplier = gamma;
    res.objective = Rate(bits);
    return res;
}

// =============================================================================
// Cascade hop allocation
// =============================================================================

/// Maximize prod_i L Pr^i / (L Pr^i + N_{i+1}) over sum Pr^i = budget.
/// Stationarity gives Pr^i = (-N + sqrt(N^2 - 4N/gamma)) / (2L) with a single
/// multiplier gamma < 0; the search runs on s = -1/gamma > 0 where the
/// discriminant stays positive and the spend is monotone in s.
[[nodiscard]] inline AllocationResult cascade_alloc(const std::vector<double>& hop_noise,
                                                    double budget, int hops) {
    const size_t n = hop_noise.size();
    if (hops < 1 || n != size_t(hops - 1))
        throw std::invalid_argument("cascade_alloc: need one noise per relay hop (L-1)");
    for (double nv : hop_noise)
        if (!(nv > 0.0)) throw std::invalid_argument("cascade_alloc: noise must be > 0");

    AllocationResult res;
    res.powers.assign(n, 0.0);
    if (n == 0 || budget <= 0.0) {
        res.multiplier = 0.0;
        return res;
    }

    const double L = double(hops);
    auto power_at = [&](double s, size_t i) {
        const double N = hop_noise[i];
        return (-N + std::sqrt(N * N + 4.0 * N * s)) / (2.0 * L);
    };
    auto spend = [&](double s) {
        double tot = 0.0;
        for (size_t i = 0; i < n; ++i) tot += power_at(s, i);
        return tot - budget;
    };

    double hi = 1.0;
    try {
        hi = optim::expand_upper_bracket([&](double s) { return spend(s) > 0 ? 1.0 : -1.0; },
                                         0.0, 1.0);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("cascade_alloc: multiplier bracket failure");
    }
    const double s = optim::bisect(spend, 0.0, hi, budget * 1e-15);

    double spent = 0.0;
    for (size_t i = 0; i < n; ++i) {
        res.powers[i] = power_at(s, i);
        spent += res.powers[i];
    }
    if (spent > 0.0) {  // budget residual below 1e-12: rescale exactly
        const double corr = budget / spent;
        for (auto& p : res.powers) p *= corr;
    }
    res.multiplier = -1.0 / s;
    return res;
}

// =============================================================================
// beta = 1 non-orthogonal closed form
// =============================================================================

/// The printed beta = 1 Lagrangian allocation:
/// Pr^i proportional to h_i^2 (2Ps + Nr^i) / (2Ps Nd + Nr^i Nd + PR h_i^2 Nr^i)^2,
/// normalized to spend the whole budget.
[[nodiscard]] inline AllocationResult nonorth_beta1_alloc(const HalfDuplex& topo) {
    const size_t n = topo.relay_noise.size();
    AllocationResult res;
    res.beta = 1.0;
    res.powers.assign(n, 0.0);
    if (n == 0 || topo.relay_budget <= 0.0) return res;

    const double Ps = topo.sensor_power;
    const double Nd = topo.ctrl_noise;
    const double PR = topo.relay_budget;
    std::vector<double> w(n);
    double wsum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double hi2 = topo.relay_gains[i] * topo.relay_gains[i];
        const double Nr = topo.relay_noise[i];
        const double den = 2.0 * Ps * Nd + Nr * Nd + PR * hi2 * Nr;
        w[i] = den > 0.0 ? hi2 * (2.0 * Ps + Nr) / (den * den) : 0.0;
        wsum += w[i];
    }
    if (wsum <= 0.0) {
        std::fill(res.powers.begin(), res.powers.end(), PR / double(n));
        return res;
    }
    for (size_t i = 0; i < n; ++i) res.powers[i] = PR * w[i] / wsum;
    return res;
}

// =============================================================================
// Full-duplex eta*
// =============================================================================

/// Unique root in [0,1] of the full-duplex quartic
///   c4 eta^4 + c3 eta^3 + c2 eta^2 = Nd + T,
/// where T = sum h_i^2 Pr^i Nr^i/(Ps+Nr^i). Strictly increasing on [0,1] for
/// positive parameters; residual polished below 1e-12 (normalized).
[[nodiscard]] inline double fullduplex_eta(const FullDuplex& topo,
                                           const std::vector<double>& powers) {
    const size_t n = topo.relay_noise.size();
    if (powers.size() != n) throw std::invalid_argument("fullduplex_eta: power count mismatch");
    const double Ps = topo.sensor_power;
    const double Nd = topo.ctrl_noise;
    const double h = std::abs(topo.direct_gain);

    double T = 0.0, c4 = 0.0, c3s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double hi2 = topo.relay_gains[i] * topo.relay_gains[i];
        const double Nr = topo.relay_noise[i];
        const double den = Ps + Nr;
        if (den <= 0.0) continue;
        T += hi2 * powers[i] * Nr / den;
        c4 += std::sqrt(hi2 * Ps * powers[i] / den);
        c3s += std::sqrt(hi2 * powers[i] / den);
    }
    const double c3 = 2.0 * h * Ps * c3s;
    const double c2 = h * h * Ps + Nd + T;
    const double rhs = Nd + T;

    // Ps = 0 degenerates the quartic to c2 eta^2 = rhs with c2 = rhs
    if (c4 == 0.0 && c3 == 0.0) {
        if (c2 <= 0.0) throw std::runtime_error("fullduplex_eta: degenerate polynomial");
        return std::min(1.0, std::sqrt(rhs / c2));
    }

    auto poly = [&](double e) {
        return (((c4 * e + c3) * e + c2) * e * e - rhs) / rhs;  // normalized residual
    };
    if (poly(0.0) >= 0.0 || poly(1.0) < 0.0)
        throw std::runtime_error("fullduplex_eta: no root bracketed in [0,1]");
    double e = optim::bisect(poly, 0.0, 1.0, 0.0, 120);
    // Newton polish
    for (int i = 0; i < 4; ++i) {
        const double d = (4.0 * c4 * e * e * e + 3.0 * c3 * e * e + 2.0 * c2 * e) / rhs;
        if (d <= 0.0) break;
        e = std::clamp(e - poly(e) / d, 0.0, 1.0);
    }
    if (std::abs(poly(e)) > 1e-12)
        throw std::runtime_error("fullduplex_eta: residual above tolerance");
    return e;
}

}  // namespace relaynet

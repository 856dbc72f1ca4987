#pragma once

// =============================================================================
// relaynet - Stabilization rate bounds
// =============================================================================
// Closed-form necessary and sufficient mean-square-stabilization bounds for
// every topology, the symmetric-network gap formulas, and the stabilizability
// verdict. Rates are bits per channel use; a plant is provably stabilizable
// when log2|det A| is below the sufficient rate and provably not when it is
// above the necessary rate.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relaynet/alloc.hpp"
#include "relaynet/common.hpp"
#include "relaynet/model.hpp"
#include "relaynet/optim.hpp"

namespace relaynet {

// =============================================================================
// Certificates
// =============================================================================

struct StabilityCertificate {
    Rate necessary_rate;
    Rate sufficient_rate;
    AllocationResult achieving_alloc;   ///< allocation/beta attaining the sufficient rate
    bool boundary_flag = false;         ///< log2|det A| lies between the two rates
};

enum class Stabilizability {
    ProvablyStabilizable,
    Indeterminate,
    ProvablyNotStabilizable,
};

struct StabilityVerdict {
    Stabilizability status = Stabilizability::Indeterminate;
    double log2_det = 0.0;
    StabilityCertificate certificate;
};

// =============================================================================
// Cascade
// =============================================================================

/// Necessary bound (1/2L) log2(1 + L min{Ps/N1, PR / sum_{i>=2} N_i}).
/// L = 1 has no relay chain; the empty-sum argument drops out of the min.
[[nodiscard]] inline Rate cascade_necessary(const Cascade& t) {
    const double L = double(t.hops);
    const double inf = std::numeric_limits<double>::infinity();
    double direct;
    if (t.noise_vars.front() > 0.0) direct = t.sensor_power / t.noise_vars.front();
    else direct = t.sensor_power > 0.0 ? inf : 0.0;
    double chain = inf;
    if (t.hops > 1) {
        double nsum = 0.0;
        for (size_t i = 1; i < t.noise_vars.size(); ++i) nsum += t.noise_vars[i];
        chain = t.relay_budget / nsum;
    }
    const double m = std::min(direct, chain);
    if (std::isinf(m)) return Rate::infinity();
    return Rate(log2_1p(L * m) / (2.0 * L));
}

/// Sufficient bound of the memoryless linear scheme,
/// (1/2L) log2(1 + (LPs/(LPs+N1)) prod_i LPr^i/(LPr^i+N_{i+1})),
/// at the optimal (or pinned) hop allocation.
[[nodiscard]] inline std::pair<Rate, AllocationResult> cascade_sufficient(const Cascade& t) {
    const double L = double(t.hops);
    AllocationResult alloc;
    if (t.relay_powers) {
        alloc.powers = *t.relay_powers;
    } else if (t.hops > 1) {
        std::vector<double> hop_noise(t.noise_vars.begin() + 1, t.noise_vars.end());
        alloc = cascade_alloc(hop_noise, t.relay_budget, t.hops);
    }

    double prod;
    const double lps = L * t.sensor_power;
    prod = (lps + t.noise_vars.front()) > 0.0 ? lps / (lps + t.noise_vars.front()) : 0.0;
    for (size_t i = 0; i < alloc.powers.size(); ++i) {
        const double lp = L * alloc.powers[i];
        const double den = lp + t.noise_vars[i + 1];
        prod *= den > 0.0 ? lp / den : 0.0;
    }
    const Rate rate{log2_1p(prod) / (2.0 * L)};
    alloc.objective = rate;
    return {rate, alloc};
}

// =============================================================================
// Parallel
// =============================================================================

/// Necessary bound (1/4) min{log2(1+2Ps sum 1/Nr^i), sum log2(1+2Pr^i/Nd^i)}
/// with the second argument maximized by water-filling the relay budget.
[[nodiscard]] inline Rate parallel_necessary(const Parallel& t) {
    const double inf = std::numeric_limits<double>::infinity();
    double snr1 = 0.0;
    for (double nr : t.relay_noise) {
        if (nr > 0.0) snr1 += t.sensor_power / nr;
        else if (t.sensor_power > 0.0) snr1 = inf;
    }
    const double arg1 = log2_1p(2.0 * snr1);

    double arg2;
    const bool any_zero_nd =
        std::any_of(t.ctrl_noise.begin(), t.ctrl_noise.end(), [](double x) { return x <= 0.0; });
    if (any_zero_nd) {
        arg2 = t.relay_budget > 0.0 ? inf : 0.0;
    } else {
        arg2 = waterfill(t.ctrl_noise, t.relay_budget).objective.bits();
    }

    const double m = std::min(arg1, arg2);
    if (std::isinf(m)) return Rate::infinity();
    return Rate(m / 4.0);
}

/// Sufficient bound (1/4) log2(1 + sum 4PsPr^i / (2PsNd^i + 2Pr^iNr^i + Nd^iNr^i))
/// evaluated at the topology's explicit per-relay powers.
[[nodiscard]] inline Rate parallel_sufficient(const Parallel& t) {
    if (!t.relay_powers)
        throw std::invalid_argument("parallel_sufficient: explicit per-relay powers required");
    const auto& P = *t.relay_powers;
    double snr = 0.0;
    for (size_t i = 0; i < P.size(); ++i) {
        const double num = 4.0 * t.sensor_power * P[i];
        const double den = 2.0 * t.sensor_power * t.ctrl_noise[i] +
                           2.0 * P[i] * t.relay_noise[i] + t.ctrl_noise[i] * t.relay_noise[i];
        if (den > 0.0) snr += num / den;
        else if (num > 0.0) return Rate::infinity();
    }
    return Rate(log2_1p(snr) / 4.0);
}

/// Symmetric-network gap (first min-argument as Gamma_nec):
/// (1/4) log2(1 + 2PsNd(2Ps+Nr) / (4PsPrNr + Nr(2PsNd+2PrNr+NdNr)/L)).
[[nodiscard]] inline Rate parallel_gap_symmetric(double Ps, double Pr, double Nr, double Nd,
                                                 double L) {
    const double den = 4.0 * Ps * Pr * Nr +
                       Nr * (2.0 * Ps * Nd + 2.0 * Pr * Nr + Nd * Nr) / L;
    if (den <= 0.0) return Rate::infinity();
    return Rate(log2_1p(2.0 * Ps * Nd * (2.0 * Ps + Nr) / den) / 4.0);
}

/// Symmetric parallel closed forms used by the gap proposition.
[[nodiscard]] inline Rate parallel_gamma_nec_closed(double Ps, double Nr, double L) {
    return Rate(log2_1p(2.0 * L * Ps / Nr) / 4.0);
}
[[nodiscard]] inline Rate parallel_gamma_suf_closed(double Ps, double Pr, double Nr, double Nd,
                                                    double L) {
    return Rate(log2_1p(4.0 * L * Ps * Pr /
                        (2.0 * Ps * Nd + 2.0 * Pr * Nr + Nd * Nr)) / 4.0);
}

/// Noiseless sensing links: the exact threshold (1/4) max sum log2(1+2Pr^i/Nd^i)
/// over the budget (water-filled).
[[nodiscard]] inline Rate parallel_noiseless_threshold(const Parallel& t) {
    for (double nr : t.relay_noise)
        if (nr != 0.0)
            throw std::invalid_argument("parallel_noiseless_threshold: relay noise must be 0");
    const bool any_zero_nd =
        std::any_of(t.ctrl_noise.begin(), t.ctrl_noise.end(), [](double x) { return x <= 0.0; });
    if (any_zero_nd) return t.relay_budget > 0.0 ? Rate::infinity() : Rate(0.0);
    return Rate(waterfill(t.ctrl_noise, t.relay_budget).objective.bits() / 4.0);
}

// =============================================================================
// Non-orthogonal half-duplex
// =============================================================================

namespace detail {

/// Sufficient-rate objective for the half-duplex SK scheme (bits, already /4):
/// (1/4)[log2(1+2h^2 b Ps/Nd) + log2(1+Mt/Nt)].
inline double hd_suff_rate(const HalfDuplex& t, double beta, const std::vector<double>& P) {
    const double Ps = t.sensor_power;
    const double Nd = t.ctrl_noise;
    const double h2 = t.direct_gain * t.direct_gain;
    const double k2 = std::sqrt(std::max(0.0, 2.0 * h2 * (1.0 - beta) * Ps));
    double s = 0.0, ntilde = Nd;
    for (size_t i = 0; i < P.size(); ++i) {
        const double den = 2.0 * beta * Ps + t.relay_noise[i];
        if (den <= 0.0) continue;  // dead reception: relay forwards nothing
        const double hi2 = t.relay_gains[i] * t.relay_gains[i];
        s += std::sqrt(2.0 * hi2 * P[i] / den);
        ntilde += 2.0 * hi2 * P[i] * t.relay_noise[i] / den;
    }
    const double mt = [&] {
        const double w = std::sqrt(2.0 * beta * Ps * Nd / (2.0 * h2 * beta * Ps + Nd));
        const double root = k2 + w * s;
        return root * root;
    }();
    return (log2_1p(2.0 * h2 * beta * Ps / Nd) + log2_1p(mt / ntilde)) / 4.0;
}

/// First cut objective of the half-duplex necessary bound (bits, not /4):
/// phase-2 direct link plus the phase-1 broadcast to relays and controller.
inline double hd_nec_broadcast(const HalfDuplex& t, double beta) {
    const double Ps = t.sensor_power;
    const double Nd = t.ctrl_noise;
    const double h2 = t.direct_gain * t.direct_gain;
    double inv = h2 / Nd;
    for (double nr : t.relay_noise) {
        if (nr > 0.0) inv += 1.0 / nr;
        else if (beta * Ps > 0.0) return std::numeric_limits<double>::infinity();
    }
    return log2_1p(2.0 * h2 * (1.0 - beta) * Ps / Nd) + log2_1p(2.0 * beta * Ps * inv);
}

/// Second cut objective (bits, not /4): phase-1 direct link plus the
/// correlation-term multiple-access cut with rho* correlations.
inline double hd_nec_mac(const HalfDuplex& t, double beta, const std::vector<double>& P) {
    const double Ps = t.sensor_power;
    const double Nd = t.ctrl_noise;
    const size_t L = P.size();
    const double Pe = 2.0 * (1.0 - beta) * Ps;

    std::vector<double> node_p(L + 1), node_n(L + 1), node_d(L + 1);
    for (size_t i = 0; i < L; ++i) {
        node_p[i] = 2.0 * P[i];
        node_n[i] = t.relay_noise[i];
        node_d[i] = std::abs(t.relay_gains[i]);
    }
    node_p[L] = Pe;
    node_n[L] = 0.0;
    node_d[L] = std::abs(t.direct_gain);

    double tot = 0.0;
    for (size_t i = 0; i <= L; ++i) tot += node_d[i] * node_d[i] * node_p[i];
    for (size_t i = 0; i <= L; ++i) {
        for (size_t k = i + 1; k <= L; ++k) {
            if (node_p[i] <= 0.0 || node_p[k] <= 0.0 || Pe <= 0.0) continue;
            const double rho =
                Pe / std::sqrt((Pe + node_n[i]) * (Pe + node_n[k]));
            tot += 2.0 * rho * node_d[i] * node_d[k] * std::sqrt(node_p[i] * node_p[k]);
        }
    }
    const double h2 = t.direct_gain * t.direct_gain;
    return log2_1p(2.0 * h2 * beta * Ps / Nd) + log2_1p(tot / Nd);
}

/// Maximize f over the relay-power ball {P >= 0, sum P <= budget} working in
/// sqrt-power coordinates (the budget need not bind). Seeds: equal split,
/// the beta=1 closed form, and single-relay corners.
template <class F>
double hd_max_over_powers_ball(F&& f, const HalfDuplex& t, std::vector<double>& best_p) {
    const size_t L = t.relay_noise.size();
    if (L == 0 || t.relay_budget <= 0.0) {
        best_p.assign(L, 0.0);
        return f(best_p);
    }
    const double PR = t.relay_budget;
    auto eval_q = [&](const std::vector<double>& q) {
        std::vector<double> p(L);
        for (size_t i = 0; i < L; ++i) p[i] = q[i] * q[i];
        return f(p);
    };
    auto project = [&](std::vector<double>& q) { optim::project_ball_nonneg(q, PR); };

    std::vector<std::vector<double>> seeds;
    seeds.emplace_back(L, std::sqrt(PR / double(L)));
    {
        auto cf = nonorth_beta1_alloc(t).powers;
        std::vector<double> q(L);
        for (size_t i = 0; i < L; ++i) q[i] = std::sqrt(std::max(0.0, cf[i]));
        seeds.push_back(std::move(q));
    }
    for (size_t i = 0; i < L && L > 1; ++i) {
        std::vector<double> q(L, 0.0);
        q[i] = std::sqrt(PR);
        seeds.push_back(std::move(q));
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_q(L, 0.0);
    for (auto& q : seeds) {
        const double v = optim::projected_gradient_max(eval_q, project, q);
        if (v > best) {
            best = v;
            best_q = q;
        }
    }
    best_p.assign(L, 0.0);
    for (size_t i = 0; i < L; ++i) best_p[i] = best_q[i] * best_q[i];
    return best;
}

/// Maximize f over the simplex {P >= 0, sum P = budget} (for objectives that
/// are nondecreasing in every power, so the budget binds).
template <class F>
double max_over_powers_simplex(F&& f, size_t L, double budget, std::vector<double>& best_p) {
    if (L == 0 || budget <= 0.0) {
        best_p.assign(L, 0.0);
        return f(best_p);
    }
    auto project = [&](std::vector<double>& p) { optim::project_simplex(p, budget); };
    std::vector<std::vector<double>> seeds;
    seeds.emplace_back(L, budget / double(L));
    for (size_t i = 0; i < L && L > 1; ++i) {
        std::vector<double> p(L, 0.0);
        p[i] = budget;
        seeds.push_back(std::move(p));
    }
    double best = -std::numeric_limits<double>::infinity();
    best_p.assign(L, budget / double(L));
    for (auto& p : seeds) {
        const double v = optim::projected_gradient_max(f, project, p);
        if (v > best) {
            best = v;
            best_p = p;
        }
    }
    return best;
}

}  // namespace detail

/// Necessary bound (1/4) min of the two maximized cut objectives. The two
/// maximizations use independent beta values; beta ranges over [0,1] (the
/// open end is attained by continuity of rho*).
[[nodiscard]] inline Rate halfduplex_necessary(const HalfDuplex& t) {
    const auto vr = validate(t);
    if (!vr.ok()) throw std::invalid_argument("halfduplex_necessary: " + vr.violations.front());

    // cut 1: concave in beta
    const double max_a = [&] {
        auto f = [&](double b) { return detail::hd_nec_broadcast(t, b); };
        const double f1 = f(1.0);
        if (std::isinf(f1)) return f1;
        const double b = optim::golden_section_max(f, 0.0, 1.0, 1e-9);
        return std::max({f(b), f(0.0), f1});
    }();

    // cut 2: concave and nondecreasing in powers for fixed beta, so the budget
    // binds; beta scanned then refined
    auto value_b = [&](double b) {
        if (t.relay_powers) return detail::hd_nec_mac(t, b, *t.relay_powers);
        std::vector<double> p;
        return detail::max_over_powers_simplex(
            [&](const std::vector<double>& pw) { return detail::hd_nec_mac(t, b, pw); },
            t.relay_noise.size(), t.relay_budget, p);
    };
    double max_b = std::max(value_b(0.0), value_b(1.0));
    max_b = std::max(max_b, value_b(optim::grid_then_golden_max(value_b, 0.0, 1.0, 32, 1e-6)));

    const double m = std::min(max_a, max_b);
    if (std::isinf(m)) return Rate::infinity();
    return Rate(std::max(0.0, m) / 4.0);
}

/// Sufficient bound of the half-duplex SK scheme, maximized over beta in
/// (0,1] and the relay-power ball (both honored if pinned on the topology).
[[nodiscard]] inline std::pair<Rate, AllocationResult> halfduplex_sufficient(const HalfDuplex& t) {
    const auto vr = validate(t);
    if (!vr.ok()) throw std::invalid_argument("halfduplex_sufficient: " + vr.violations.front());

    AllocationResult alloc;
    auto inner = [&](double beta, std::vector<double>& p_out) {
        if (t.relay_powers) {
            p_out = *t.relay_powers;
            return detail::hd_suff_rate(t, beta, p_out);
        }
        return detail::hd_max_over_powers_ball(
            [&](const std::vector<double>& p) { return detail::hd_suff_rate(t, beta, p); }, t,
            p_out);
    };

    double best_beta;
    if (t.beta) {
        best_beta = *t.beta;
    } else {
        auto outer = [&](double b) {
            std::vector<double> tmp;
            return inner(b, tmp);
        };
        best_beta = optim::grid_then_golden_max(outer, 1e-9, 1.0, 24, 1e-6);
    }

    std::vector<double> powers;
    const double rate_bits = inner(best_beta, powers);
    alloc.powers = std::move(powers);
    alloc.beta = best_beta;
    alloc.objective = Rate(std::max(0.0, rate_bits));
    return {alloc.objective, alloc};
}

/// Two-hop symmetric closed forms (h = 0, beta = 1, h_i = c).
[[nodiscard]] inline Rate twohop_gamma_nec_closed(double Ps, double Nr, double L) {
    return Rate(log2_1p(2.0 * L * Ps / Nr) / 4.0);
}
[[nodiscard]] inline Rate twohop_gamma_suf_closed(double Ps, double Pr, double Nr, double Nd,
                                                  double c, double L) {
    const double num = 4.0 * L * L * c * c * Ps * Pr;
    const double den = 2.0 * L * c * c * Pr * Nr + Nd * (2.0 * Ps + Nr);
    return Rate(log2_1p(num / den) / 4.0);
}

/// Symmetric two-hop gap closed form; approaches 0 as L or Pr grows.
[[nodiscard]] inline Rate twohop_gap_symmetric(double Ps, double Pr, double Nr, double Nd,
                                               double c, double L) {
    const double num = (4.0 * Ps * Ps * Nd + 2.0 * Ps * Nr * Nd) / L;
    const double den = 4.0 * c * c * Ps * Pr * Nr + 2.0 * c * c * Pr * Nr * Nr / L +
                       Nd * Nr * (2.0 * Ps + Nr) / (L * L);
    if (den <= 0.0) return Rate::infinity();
    return Rate(log2_1p(num / den) / 4.0);
}

// =============================================================================
// Non-orthogonal full-duplex
// =============================================================================

namespace detail {

inline double fd_nec_mac(const FullDuplex& t, const std::vector<double>& P) {
    const double Ps = t.sensor_power;
    const size_t L = P.size();
    std::vector<double> node_p(L + 1), node_n(L + 1), node_d(L + 1);
    for (size_t i = 0; i < L; ++i) {
        node_p[i] = P[i];
        node_n[i] = t.relay_noise[i];
        node_d[i] = std::abs(t.relay_gains[i]);
    }
    node_p[L] = Ps;
    node_n[L] = 0.0;
    node_d[L] = std::abs(t.direct_gain);

    double tot = 0.0;
    for (size_t i = 0; i <= L; ++i) tot += node_d[i] * node_d[i] * node_p[i];
    for (size_t i = 0; i <= L; ++i) {
        for (size_t k = i + 1; k <= L; ++k) {
            if (node_p[i] <= 0.0 || node_p[k] <= 0.0 || Ps <= 0.0) continue;
            const double rho = Ps / std::sqrt((Ps + node_n[i]) * (Ps + node_n[k]));
            tot += 2.0 * rho * node_d[i] * node_d[k] * std::sqrt(node_p[i] * node_p[k]);
        }
    }
    return log2_1p(tot / t.ctrl_noise);
}

inline double fd_suff_rate(const FullDuplex& t, const std::vector<double>& P) {
    const double Ps = t.sensor_power;
    const double Nd = t.ctrl_noise;
    const double h = std::abs(t.direct_gain);
    double sig = 0.0, noise_amp = 0.0;
    for (size_t i = 0; i < P.size(); ++i) {
        const double den = Ps + t.relay_noise[i];
        if (den <= 0.0) continue;
        const double hi2 = t.relay_gains[i] * t.relay_gains[i];
        sig += std::sqrt(hi2 * Ps * P[i] / den);
        noise_amp += hi2 * P[i] * t.relay_noise[i] / den;
    }
    const double eta = fullduplex_eta(t, P);
    const double num = std::pow(std::sqrt(h * h * Ps) + eta * sig, 2);
    return log2_1p(num / (Nd + noise_amp)) / 2.0;
}

template <class F>
double fd_max_over_powers_ball(F&& f, const FullDuplex& t, std::vector<double>& best_p) {
    const size_t L = t.relay_noise.size();
    if (L == 0 || t.relay_budget <= 0.0) {
        best_p.assign(L, 0.0);
        return f(best_p);
    }
    const double PR = t.relay_budget;
    auto eval_q = [&](const std::vector<double>& q) {
        std::vector<double> p(L);
        for (size_t i = 0; i < L; ++i) p[i] = q[i] * q[i];
        return f(p);
    };
    auto project = [&](std::vector<double>& q) { optim::project_ball_nonneg(q, PR); };
    std::vector<std::vector<double>> seeds;
    seeds.emplace_back(L, std::sqrt(PR / double(L)));
    for (size_t i = 0; i < L && L > 1; ++i) {
        std::vector<double> q(L, 0.0);
        q[i] = std::sqrt(PR);
        seeds.push_back(std::move(q));
    }
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_q(L, 0.0);
    for (auto& q : seeds) {
        const double v = optim::projected_gradient_max(eval_q, project, q);
        if (v > best) {
            best = v;
            best_q = q;
        }
    }
    best_p.assign(L, 0.0);
    for (size_t i = 0; i < L; ++i) best_p[i] = best_q[i] * best_q[i];
    return best;
}

}  // namespace detail

/// Necessary bound (1/2) min{broadcast cut, maximized correlation cut}.
[[nodiscard]] inline Rate fullduplex_necessary(const FullDuplex& t) {
    const auto vr = validate(t);
    if (!vr.ok()) throw std::invalid_argument("fullduplex_necessary: " + vr.violations.front());

    double inv = t.direct_gain * t.direct_gain / t.ctrl_noise;
    bool inf1 = false;
    for (double nr : t.relay_noise) {
        if (nr > 0.0) inv += 1.0 / nr;
        else if (t.sensor_power > 0.0) inf1 = true;
    }
    const double cut1 =
        inf1 ? std::numeric_limits<double>::infinity() : log2_1p(t.sensor_power * inv);

    double cut2;
    if (t.relay_powers) {
        cut2 = detail::fd_nec_mac(t, *t.relay_powers);
    } else {
        std::vector<double> p;
        cut2 = detail::max_over_powers_simplex(
            [&](const std::vector<double>& pw) { return detail::fd_nec_mac(t, pw); },
            t.relay_noise.size(), t.relay_budget, p);
    }

    const double m = std::min(cut1, cut2);
    if (std::isinf(m)) return Rate::infinity();
    return Rate(std::max(0.0, m) / 2.0);
}

/// Sufficient bound of the full-duplex linear scheme with the eta* correlation
/// root, maximized over the relay-power ball. The underlying theorem assumes a
/// noiseless plant (W_t = 0).
[[nodiscard]] inline std::pair<Rate, AllocationResult> fullduplex_sufficient(const FullDuplex& t) {
    const auto vr = validate(t);
    if (!vr.ok()) throw std::invalid_argument("fullduplex_sufficient: " + vr.violations.front());

    AllocationResult alloc;
    double bits;
    if (t.relay_powers) {
        alloc.powers = *t.relay_powers;
        bits = detail::fd_suff_rate(t, alloc.powers);
    } else {
        bits = detail::fd_max_over_powers_ball(
            [&](const std::vector<double>& p) { return detail::fd_suff_rate(t, p); }, t,
            alloc.powers);
    }
    alloc.eta_star = fullduplex_eta(t, alloc.powers);
    alloc.objective = Rate(std::max(0.0, bits));
    return {alloc.objective, alloc};
}

// =============================================================================
// Certificate / verdict
// =============================================================================

[[nodiscard]] inline StabilityCertificate certificate(const NetworkTopology& topo) {
    StabilityCertificate c;
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Cascade>) {
                c.necessary_rate = cascade_necessary(t);
                auto [r, a] = cascade_sufficient(t);
                c.sufficient_rate = r;
                c.achieving_alloc = std::move(a);
            } else if constexpr (std::is_same_v<T, Parallel>) {
                c.necessary_rate = parallel_necessary(t);
                c.sufficient_rate = parallel_sufficient(t);
                if (t.relay_powers) c.achieving_alloc.powers = *t.relay_powers;
                c.achieving_alloc.objective = c.sufficient_rate;
            } else if constexpr (std::is_same_v<T, HalfDuplex>) {
                c.necessary_rate = halfduplex_necessary(t);
                auto [r, a] = halfduplex_sufficient(t);
                c.sufficient_rate = r;
                c.achieving_alloc = std::move(a);
            } else {
                c.necessary_rate = fullduplex_necessary(t);
                auto [r, a] = fullduplex_sufficient(t);
                c.sufficient_rate = r;
                c.achieving_alloc = std::move(a);
            }
        },
        topo);
    return c;
}

/// Compare log2|det A| against the certificate. Rate equality is reported as
/// Indeterminate with the boundary flag set (the theorems alternate between
/// strict and non-strict inequalities at the boundary).
[[nodiscard]] inline StabilityVerdict verdict(const PlantModel& plant,
                                              const NetworkTopology& topo) {
    StabilityVerdict v;
    v.log2_det = unstable_log_volume(plant).bits();
    v.certificate = certificate(topo);
    const double suf = v.certificate.sufficient_rate.bits();
    const double nec = v.certificate.necessary_rate.bits();
    if (v.log2_det < suf) {
        v.status = Stabilizability::ProvablyStabilizable;
    } else if (v.log2_det > nec) {
        v.status = Stabilizability::ProvablyNotStabilizable;
    } else {
        v.status = Stabilizability::Indeterminate;
        v.certificate.boundary_flag = true;
    }
    return v;
}

}  // namespace relaynet

#pragma once

// =============================================================================
// relaynet - Monte Carlo harness
// =============================================================================
// Reproducible closed-loop trials, second-moment traces, stability
// classification, and empirical threshold search. Trials are embarrassingly
// parallel; determinism comes from the counter-based noise streams and a
// fixed-order pairwise reduction over the trial axis, never from the thread
// schedule.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "relaynet/bounds.hpp"
#include "relaynet/model.hpp"
#include "relaynet/optim.hpp"
#include "relaynet/rng.hpp"
#include "relaynet/schemes.hpp"

namespace relaynet {

enum class SchemeId { SkHalfDuplex, LinearCascade, LinearParallel, Timeshare };

struct SchemeParams {
    double lambda = 0.0;                           ///< scalar-plant lambda (scheme gain)
    std::optional<double> beta;                    ///< SK phase split override
    std::optional<std::vector<double>> powers;     ///< relay power override
    double capacity = 0.0;                         ///< timeshare channel capacity (bits)
};

struct TrialConfig {
    int64_t horizon = 20000;        ///< scheme steps (rounds for round-based schemes)
    int64_t trials = 256;
    int checkpoint_count = 64;
    double overflow_guard = 1e12;   ///< per-trial divergence guard on x^2
    double slope_per_step = 0.01;   ///< log-moment slope threshold (nats/slot)
    double tail_factor = 10.0;      ///< stable if tail < factor * reference
    int threads = 0;                ///< 0: RELAYNET_THREADS or hardware count
};

enum class Verdict { Stable, Divergent, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "Stable";
        case Verdict::Divergent: return "Divergent";
        default: return "Indeterminate";
    }
}

struct MomentTrace {
    std::vector<int64_t> checkpoints;       ///< slot indices
    std::vector<double> moments;            ///< mean of x^2 over trials
    std::vector<double> stderrs;            ///< standard error of that mean
    std::vector<int64_t> divergent_count;   ///< trials beyond the guard so far
    int64_t trials = 0;
    double initial_variance = 0.0;
    Verdict verdict = Verdict::Indeterminate;
};

// =============================================================================
// Classification
// =============================================================================

/// Divergent when any trial tripped the overflow guard or the least-squares
/// slope of the log moment over the last half exceeds the threshold; Stable
/// when the tail stays below tail_factor x max(analytic limit, initial
/// variance); Indeterminate otherwise (ties break toward Indeterminate).
[[nodiscard]] inline Verdict classify(const MomentTrace& trace,
                                      std::optional<double> analytic_limit,
                                      const TrialConfig& cfg = {}) {
    const size_t n = trace.checkpoints.size();
    if (n < 10) throw std::invalid_argument("classify: needs >= 10 checkpoints");
    if (!trace.divergent_count.empty() && trace.divergent_count.back() > 0)
        return Verdict::Divergent;

    const size_t half = n / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = double(n - half);
    for (size_t i = half; i < n; ++i) {
        const double x = double(trace.checkpoints[i]);
        const double y = std::log(std::max(trace.moments[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    if (slope > cfg.slope_per_step + 1e-12) return Verdict::Divergent;
    if (std::abs(slope - cfg.slope_per_step) <= 1e-12) return Verdict::Indeterminate;

    double tail_max = 0.0;
    for (size_t i = half; i < n; ++i) tail_max = std::max(tail_max, trace.moments[i]);
    const double reference =
        std::max(analytic_limit.value_or(0.0), std::max(trace.initial_variance, 1e-300));
    if (tail_max < cfg.tail_factor * reference) return Verdict::Stable;
    return Verdict::Indeterminate;
}

// =============================================================================
// Trial runner
// =============================================================================

namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RELAYNET_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

/// Resolve (beta, powers) for the SK scheme: explicit overrides win, then the
/// topology's pinned values, then the sufficient-bound optimizer.
inline std::pair<double, std::vector<double>> resolve_sk_operating(const HalfDuplex& t,
                                                                   const SchemeParams& p) {
    if (p.beta && p.powers) return {*p.beta, *p.powers};
    HalfDuplex pinned = t;
    if (p.beta) pinned.beta = *p.beta;
    if (p.powers) pinned.relay_powers = *p.powers;
    if (pinned.beta && pinned.relay_powers) return {*pinned.beta, *pinned.relay_powers};
    const auto [rate, alloc] = halfduplex_sufficient(pinned);
    (void)rate;
    return {alloc.beta.value_or(1.0), alloc.powers};
}

inline std::vector<double> resolve_powers(const std::optional<std::vector<double>>& override_p,
                                          const std::optional<std::vector<double>>& pinned,
                                          size_t count, double budget) {
    if (override_p) return *override_p;
    if (pinned) return *pinned;
    return std::vector<double>(count, count ? budget / double(count) : 0.0);
}

/// Analytic second-moment limit of the scheme's own variance recursion, when
/// it exists; used as the Stable reference level.
inline std::optional<double> analytic_limit(SchemeId id, const PlantModel& plant,
                                            const NetworkTopology& topo,
                                            const SchemeParams& p) {
    constexpr int kProbe = 60000;
    switch (id) {
        case SchemeId::SkHalfDuplex: {
            const auto& t = std::get<HalfDuplex>(topo);
            const auto [beta, powers] = resolve_sk_operating(t, p);
            const auto a = hd_variance_recursion(t, beta, powers, p.lambda,
                                                 plant.scalar_noise_var(),
                                                 plant.scalar_init_var(), kProbe);
            const double tail = *std::max_element(a.end() - 16, a.end());
            if (!std::isfinite(tail) || tail > 1e9 * (1.0 + plant.scalar_init_var()))
                return std::nullopt;
            return tail;
        }
        case SchemeId::LinearCascade: {
            const auto& t = std::get<Cascade>(topo);
            auto powers = resolve_powers(p.powers, t.relay_powers,
                                         size_t(std::max(0, t.hops - 1)), t.relay_budget);
            LinearCascadeScheme s(t, powers, p.lambda, plant.scalar_noise_var(),
                                  plant.scalar_init_var(), 0.0);
            ZeroNoise z;
            double last = plant.scalar_init_var();
            for (int i = 0; i < 20000; ++i) {
                s.step(z);
                if (!std::isfinite(s.alpha()) || s.alpha() > 1e9 * (1.0 + last))
                    return std::nullopt;
            }
            return s.alpha();
        }
        case SchemeId::LinearParallel: {
            const auto& t = std::get<Parallel>(topo);
            auto powers = resolve_powers(p.powers, t.relay_powers, t.relay_noise.size(),
                                         t.relay_budget);
            LinearParallelScheme s(t, powers, p.lambda, plant.scalar_noise_var(),
                                   plant.scalar_init_var(), 0.0);
            ZeroNoise z;
            for (int i = 0; i < 20000; ++i) {
                s.step(z);
                if (!std::isfinite(s.alpha()) || s.alpha() > 1e9) return std::nullopt;
            }
            return s.alpha();
        }
        case SchemeId::Timeshare: {
            std::vector<double> fractions;
            for (const auto& m : mode_decomposition(plant))
                for (int i = 0; i < m.multiplicity; ++i) fractions.push_back(m.time_fraction);
            TimeshareScheme s(plant, p.capacity, fractions);
            ZeroNoise z;
            for (int i = 0; i < 20000; ++i) {
                s.step(z);
                if (!std::isfinite(s.ledger_total()) || s.ledger_total() > 1e9)
                    return std::nullopt;
            }
            return s.ledger_total();
        }
    }
    return std::nullopt;
}

template <class MakeScheme>
MomentTrace run_trials_impl(MakeScheme&& make, int64_t horizon, int64_t trials,
                            const TrialConfig& cfg, SeedPolicy seed, double init_variance,
                            std::optional<double> limit) {
    if (horizon < 100) throw std::invalid_argument("run_trials: horizon < 100");
    if (trials < 1) throw std::invalid_argument("run_trials: trials < 1");

    const int ncp = std::min<int64_t>(cfg.checkpoint_count, horizon);
    std::vector<int64_t> cp_steps(size_t(ncp), 0);
    for (int i = 0; i < ncp; ++i)
        cp_steps[size_t(i)] = (horizon * (i + 1)) / ncp;  // step counts, ascending

    // per-trial storage, reduced in fixed order afterwards
    std::vector<double> values(size_t(trials) * size_t(ncp), 0.0);
    std::vector<int64_t> slot_at(size_t(ncp), 0);
    std::vector<uint8_t> diverged(size_t(trials), 0);
    std::vector<int64_t> diverged_at(size_t(trials), horizon + 1);

    auto run_block = [&](int64_t t0, int64_t t1) {
        for (int64_t trial = t0; trial < t1; ++trial) {
            auto scheme = make(uint64_t(trial));
            TrialNoise noise{seed, uint64_t(trial)};
            bool dead = false;
            double frozen = cfg.overflow_guard;
            int cpi = 0;
            for (int64_t st = 1; st <= horizon; ++st) {
                if (!dead) {
                    scheme.step(noise);
                    const double sq = scheme.state_sq();
                    if (!(sq < cfg.overflow_guard)) {
                        dead = true;
                        diverged[size_t(trial)] = 1;
                        diverged_at[size_t(trial)] = st;
                        frozen = cfg.overflow_guard;
                    }
                }
                if (cpi < ncp && st == cp_steps[size_t(cpi)]) {
                    values[size_t(trial) * size_t(ncp) + size_t(cpi)] =
                        dead ? frozen : scheme.state_sq();
                    if (trial == 0) slot_at[size_t(cpi)] = scheme.slots_elapsed();
                    ++cpi;
                }
            }
        }
    };

    const int nthreads = resolve_threads(cfg.threads);
    if (nthreads <= 1 || trials < 2 * nthreads) {
        run_block(0, trials);
    } else {
        std::vector<std::thread> pool;
        const int64_t chunk = (trials + nthreads - 1) / nthreads;
        for (int i = 0; i < nthreads; ++i) {
            const int64_t a = i * chunk;
            const int64_t b = std::min<int64_t>(trials, a + chunk);
            if (a >= b) break;
            pool.emplace_back(run_block, a, b);
        }
        for (auto& th : pool) th.join();
    }

    MomentTrace trace;
    trace.trials = trials;
    trace.initial_variance = init_variance;
    trace.checkpoints.resize(size_t(ncp));
    trace.moments.resize(size_t(ncp));
    trace.stderrs.resize(size_t(ncp));
    trace.divergent_count.resize(size_t(ncp));
    std::vector<double> col(size_t(trials), 0.0);
    for (int c = 0; c < ncp; ++c) {
        for (int64_t t = 0; t < trials; ++t)
            col[size_t(t)] = values[size_t(t) * size_t(ncp) + size_t(c)];
        const double mean = optim::pairwise_sum(col.data(), col.size()) / double(trials);
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var = trials > 1 ? var / double(trials - 1) : 0.0;
        trace.checkpoints[size_t(c)] = slot_at[size_t(c)];
        trace.moments[size_t(c)] = mean;
        trace.stderrs[size_t(c)] = std::sqrt(var / double(trials));
        int64_t ndiv = 0;
        for (int64_t t = 0; t < trials; ++t)
            if (diverged[size_t(t)] && diverged_at[size_t(t)] <= cp_steps[size_t(c)]) ++ndiv;
        trace.divergent_count[size_t(c)] = ndiv;
    }
    trace.verdict = classify(trace, limit, cfg);
    return trace;
}

// adapters exposing a uniform slots_elapsed()
struct SkRunner {
    SkHalfDuplexScheme s;
    template <class N> void step(N&& n) { s.step(n); }
    [[nodiscard]] double state_sq() const { return s.state_sq(); }
    [[nodiscard]] int64_t slots_elapsed() const { return s.t(); }
};
struct CascadeRunner {
    LinearCascadeScheme s;
    template <class N> void step(N&& n) { s.step(n); }
    [[nodiscard]] double state_sq() const { return s.state_sq(); }
    [[nodiscard]] int64_t slots_elapsed() const { return s.slots(); }
};
struct ParallelRunner {
    LinearParallelScheme s;
    template <class N> void step(N&& n) { s.step(n); }
    [[nodiscard]] double state_sq() const { return s.state_sq(); }
    [[nodiscard]] int64_t slots_elapsed() const { return s.slots(); }
};
struct TimeshareRunner {
    TimeshareScheme s;
    template <class N> void step(N&& n) { s.step(n); }
    [[nodiscard]] double state_sq() const { return s.state_sq(); }
    [[nodiscard]] int64_t slots_elapsed() const { return s.slots(); }
};

}  // namespace detail

/// Run R independent closed-loop trials of the selected scheme and aggregate
/// per-checkpoint second moments. Throws on a scheme/topology mismatch.
[[nodiscard]] inline MomentTrace run_trials(SchemeId id, const PlantModel& plant,
                                            const NetworkTopology& topo, const SchemeParams& p,
                                            const TrialConfig& cfg, SeedPolicy seed) {
    const auto limit = detail::analytic_limit(id, plant, topo, p);
    switch (id) {
        case SchemeId::SkHalfDuplex: {
            if (!std::holds_alternative<HalfDuplex>(topo))
                throw std::invalid_argument("run_trials: SK scheme needs a half-duplex topology");
            const auto& t = std::get<HalfDuplex>(topo);
            const auto [beta, powers] = detail::resolve_sk_operating(t, p);
            const double n_w = plant.scalar_noise_var();
            const double a0 = plant.scalar_init_var();
            auto make = [&, beta = beta, powers = powers](uint64_t trial) {
                TrialNoise noise{seed, trial};
                const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
                return detail::SkRunner{
                    SkHalfDuplexScheme(t, beta, powers, p.lambda, n_w, a0, x0)};
            };
            return detail::run_trials_impl(make, cfg.horizon, cfg.trials, cfg, seed, a0, limit);
        }
        case SchemeId::LinearCascade: {
            if (!std::holds_alternative<Cascade>(topo))
                throw std::invalid_argument("run_trials: cascade scheme needs a cascade topology");
            const auto& t = std::get<Cascade>(topo);
            auto powers = detail::resolve_powers(p.powers, t.relay_powers,
                                                 size_t(std::max(0, t.hops - 1)), t.relay_budget);
            const double n_w = plant.scalar_noise_var();
            const double a0 = plant.scalar_init_var();
            auto make = [&, powers](uint64_t trial) {
                TrialNoise noise{seed, trial};
                const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
                return detail::CascadeRunner{
                    LinearCascadeScheme(t, powers, p.lambda, n_w, a0, x0)};
            };
            return detail::run_trials_impl(make, cfg.horizon, cfg.trials, cfg, seed, a0, limit);
        }
        case SchemeId::LinearParallel: {
            if (!std::holds_alternative<Parallel>(topo))
                throw std::invalid_argument("run_trials: parallel scheme needs a parallel topology");
            const auto& t = std::get<Parallel>(topo);
            auto powers = detail::resolve_powers(p.powers, t.relay_powers, t.relay_noise.size(),
                                                 t.relay_budget);
            const double n_w = plant.scalar_noise_var();
            const double a0 = plant.scalar_init_var();
            auto make = [&, powers](uint64_t trial) {
                TrialNoise noise{seed, trial};
                const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
                return detail::ParallelRunner{
                    LinearParallelScheme(t, powers, p.lambda, n_w, a0, x0)};
            };
            return detail::run_trials_impl(make, cfg.horizon, cfg.trials, cfg, seed, a0, limit);
        }
        case SchemeId::Timeshare: {
            std::vector<double> fractions;
            for (const auto& m : mode_decomposition(plant))
                for (int i = 0; i < m.multiplicity; ++i) fractions.push_back(m.time_fraction);
            auto make = [&](uint64_t trial) {
                TimeshareScheme s(plant, p.capacity, fractions);
                TrialNoise noise{seed, trial};
                s.init_state(noise);
                return detail::TimeshareRunner{std::move(s)};
            };
            return detail::run_trials_impl(make, cfg.horizon, cfg.trials, cfg, seed,
                                           plant.init_cov.trace(), limit);
        }
    }
    throw std::invalid_argument("run_trials: unknown scheme");
}

// =============================================================================
// Threshold search
// =============================================================================

struct ThresholdResult {
    double lambda_hat = 0.0;
    double log2_lambda_hat = 0.0;
    double logdet_hat = 0.0;        ///< log2|det A(lambda_hat)| for the plant template
    Rate sufficient;
    Rate necessary;
    int evaluations = 0;
};

/// Bisection on lambda between a Stable low end and a Divergent high end,
/// refined to 1% relative width. The plant template is scalar lambda for the
/// scalar schemes and diag(lambda, lambda) for the timeshare scheme.
[[nodiscard]] inline ThresholdResult threshold_search(SchemeId id, const PlantModel& plant_proto,
                                                      const NetworkTopology& topo,
                                                      const SchemeParams& params, double lambda_lo,
                                                      double lambda_hi, SeedPolicy seed,
                                                      const TrialConfig& cfg = {}) {
    auto plant_at = [&](double lm) {
        PlantModel p = plant_proto;
        const int n = p.dim();
        for (int i = 0; i < n; ++i) p.a_matrix(i, i) = lm;
        return p;
    };
    ThresholdResult res;

    auto classify_at = [&](double lm) {
        SchemeParams p = params;
        p.lambda = lm;
        Verdict v = run_trials(id, plant_at(lm), topo, p, cfg, seed).verdict;
        ++res.evaluations;
        if (v == Verdict::Indeterminate) {
            TrialConfig longer = cfg;
            longer.horizon *= 2;
            v = run_trials(id, plant_at(lm), topo, p, longer, seed).verdict;
            ++res.evaluations;
            if (v == Verdict::Indeterminate) v = Verdict::Stable;  // conservative
        }
        return v;
    };

    if (classify_at(lambda_lo) != Verdict::Stable)
        throw std::runtime_error("threshold_search: low end not stable");
    if (classify_at(lambda_hi) != Verdict::Divergent)
        throw std::runtime_error("threshold_search: high end not divergent");

    double lo = lambda_lo, hi = lambda_hi;
    while (hi / lo > 1.01) {
        const double mid = std::sqrt(lo * hi);
        if (classify_at(mid) == Verdict::Divergent) hi = mid;
        else lo = mid;
    }
    res.lambda_hat = std::sqrt(lo * hi);
    res.log2_lambda_hat = std::log2(res.lambda_hat);
    res.logdet_hat = unstable_log_volume(plant_at(res.lambda_hat)).bits();

    if (id == SchemeId::Timeshare) {
        res.sufficient = Rate(params.capacity);
        res.necessary = Rate(params.capacity);
    } else {
        const auto cert = certificate(topo);
        res.sufficient = cert.sufficient_rate;
        res.necessary = cert.necessary_rate;
    }
    return res;
}

}  // namespace relaynet

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "relaynet/mc.hpp"

using namespace relaynet;
using Catch::Approx;

namespace {

NetworkTopology hd_l1() {
    HalfDuplex t;
    t.sensor_power = 10.0;
    t.relay_budget = 10.0;
    t.relay_powers = std::vector<double>{10.0};
    t.beta = 0.5;
    t.relay_noise = {1.0};
    t.ctrl_noise = 1.0;
    t.direct_gain = 1.0;
    t.relay_gains = {1.0};
    return t;
}

MomentTrace synthetic(const std::vector<double>& moments, double dt = 10.0) {
    MomentTrace t;
    t.trials = 100;
    t.initial_variance = 1.0;
    for (size_t i = 0; i < moments.size(); ++i) {
        t.checkpoints.push_back(int64_t(dt * double(i + 1)));
        t.moments.push_back(moments[i]);
        t.stderrs.push_back(0.0);
        t.divergent_count.push_back(0);
    }
    return t;
}

}  // namespace

TEST_CASE("classification rules", "[mc]") {
    SECTION("geometric growth is divergent") {
        std::vector<double> m;
        for (int i = 0; i < 20; ++i) m.push_back(std::exp(0.2 * 10.0 * (i + 1)));
        REQUIRE(classify(synthetic(m), std::nullopt) == Verdict::Divergent);
    }
    SECTION("flat noise floor is stable") {
        REQUIRE(classify(synthetic(std::vector<double>(20, 1.0)), 1.0) == Verdict::Stable);
    }
    SECTION("slope exactly at the threshold stays indeterminate") {
        std::vector<double> m;
        for (int i = 0; i < 20; ++i) m.push_back(std::exp(0.01 * 10.0 * (i + 1)));
        REQUIRE(classify(synthetic(m), std::nullopt) == Verdict::Indeterminate);
    }
    SECTION("bounded but far above the reference is indeterminate") {
        REQUIRE(classify(synthetic(std::vector<double>(20, 500.0)), 1.0) ==
                Verdict::Indeterminate);
    }
    SECTION("an overflowed trial forces divergent") {
        auto t = synthetic(std::vector<double>(20, 1.0));
        t.divergent_count.back() = 1;
        REQUIRE(classify(t, 1.0) == Verdict::Divergent);
    }
    SECTION("needs enough checkpoints") {
        REQUIRE_THROWS_AS(classify(synthetic(std::vector<double>(5, 1.0)), 1.0),
                          std::invalid_argument);
    }
}

TEST_CASE("trials are reproducible regardless of parallelism", "[mc]") {
    const auto plant = PlantModel::scalar(2.0, 1.0, 1.0);
    SchemeParams p;
    p.lambda = 2.0;
    TrialConfig cfg;
    cfg.horizon = 400;
    cfg.trials = 64;
    cfg.checkpoint_count = 16;

    cfg.threads = 1;
    const auto a = run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{123});
    cfg.threads = 4;
    const auto b = run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{123});
    cfg.threads = 7;
    const auto c = run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{123});

    REQUIRE(a.moments == b.moments);   // bit-identical
    REQUIRE(a.moments == c.moments);
    REQUIRE(a.stderrs == b.stderrs);
    REQUIRE(a.divergent_count == b.divergent_count);

    const auto d = run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{124});
    REQUIRE(a.moments != d.moments);
}

TEST_CASE("dead plant sits at the noise floor", "[mc][stochastic]") {
    const auto plant = PlantModel::scalar(0.0, 1.0, 1.0);
    SchemeParams p;
    p.lambda = 0.0;
    TrialConfig cfg;
    cfg.horizon = 400;
    cfg.trials = 400;
    const auto t = run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{5});
    REQUIRE(t.verdict == Verdict::Stable);
    const double tol = 5.0 / std::sqrt(double(cfg.trials));
    for (size_t i = 2; i < t.moments.size(); ++i)
        REQUIRE(t.moments[i] == Approx(1.0).margin(tol));
}

TEST_CASE("moment standard error scales as 1/sqrt(R)", "[mc][stochastic]") {
    const auto plant = PlantModel::scalar(0.0, 1.0, 1.0);
    SchemeParams p;
    p.lambda = 0.0;
    double prev = 0.0;
    for (int64_t r : {100, 1000, 10000}) {
        TrialConfig cfg;
        cfg.horizon = 120;
        cfg.trials = r;
        cfg.checkpoint_count = 12;
        const auto t =
            run_trials(SchemeId::SkHalfDuplex, plant, hd_l1(), p, cfg, SeedPolicy{17});
        const double se = t.stderrs.back();
        if (prev > 0.0) {
            const double ratio = prev / se;
            REQUIRE(ratio == Approx(std::sqrt(10.0)).epsilon(0.5));
        }
        prev = se;
    }
}

TEST_CASE("verdicts are monotone along a lambda sweep", "[mc][stochastic]") {
    const auto topo = hd_l1();
    TrialConfig cfg;
    cfg.horizon = 1200;
    cfg.trials = 48;
    const double suff = 1.615765046017;
    int last_rank = 0;  // Stable=0, Indeterminate=1, Divergent=2
    for (double f : {0.5, 0.75, 0.9, 1.05, 1.2, 1.5}) {
        const double lm = std::pow(2.0, f * suff);
        SchemeParams p;
        p.lambda = lm;
        const auto t = run_trials(SchemeId::SkHalfDuplex, PlantModel::scalar(lm, 1.0, 1.0), topo,
                                  p, cfg, SeedPolicy{29});
        const int rank = t.verdict == Verdict::Stable ? 0
                         : t.verdict == Verdict::Indeterminate ? 1 : 2;
        REQUIRE(rank >= last_rank);
        last_rank = rank;
    }
    REQUIRE(last_rank == 2);
}

TEST_CASE("scheme/topology mismatch is rejected", "[mc]") {
    SchemeParams p;
    p.lambda = 1.5;
    TrialConfig cfg;
    cfg.horizon = 200;
    cfg.trials = 4;
    Cascade c;
    c.hops = 1;
    c.sensor_power = 10.0;
    c.noise_vars = {1.0};
    REQUIRE_THROWS_AS(run_trials(SchemeId::SkHalfDuplex, PlantModel::scalar(1.5, 1, 1),
                                 NetworkTopology(c), p, cfg, SeedPolicy{1}),
                      std::invalid_argument);
}

TEST_CASE("threshold search brackets the point-to-point boundary", "[mc][stochastic]") {
    Cascade t;
    t.hops = 1;
    t.sensor_power = 10.0;
    t.relay_budget = 0.0;
    t.noise_vars = {1.0};
    TrialConfig cfg;
    cfg.horizon = 1500;
    cfg.trials = 32;
    SchemeParams p;
    const auto res =
        threshold_search(SchemeId::LinearCascade, PlantModel::scalar(2.0, 1.0, 1.0),
                         NetworkTopology(t), p, 2.0, 4.5, SeedPolicy{41}, cfg);
    const double classic = 0.5 * std::log2(11.0);
    REQUIRE(res.log2_lambda_hat == Approx(classic).margin(0.1));
}

// =============================================================================
// relaynet CLI
// =============================================================================
// Subcommands: bounds, alloc, sweep, simulate, rate, threshold.
// Exit codes: 0 success, 2 config/validation error, 3 dispatch error.
// =============================================================================

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "relaynet/relaynet.hpp"

namespace {

using namespace relaynet;

struct DispatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::string format = "table";
    std::string out;
    std::string trace_out;
    std::string scheme;
    std::string sweep_var;
    uint64_t seed = 0;
    int64_t trials = 256;
    int64_t horizon = 20000;
    double lambda = 0.0;
    bool lambda_set = false;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
};

void emit(const Options& opt, const std::string& text) {
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(opt.out);
    if (!f) throw std::runtime_error("cannot open output file: " + opt.out);
    f << text;
}

const char* verdict_name(Stabilizability s) {
    switch (s) {
        case Stabilizability::ProvablyStabilizable: return "ProvablyStabilizable";
        case Stabilizability::ProvablyNotStabilizable: return "ProvablyNotStabilizable";
        default: return "Indeterminate";
    }
}

std::string rate_str(const Rate& r) {
    return r.is_infinite() ? "inf" : csv_num(r.bits());
}

void require_valid(const RunConfig& cfg) {
    const auto report = validate(cfg.plant, cfg.topology);
    if (!report.ok()) {
        std::ostringstream msg;
        msg << "validation failed:";
        for (const auto& v : report.violations) msg << "\n  - " << v;
        throw ConfigError(msg.str());
    }
}

std::string kv_rows(const std::vector<std::pair<std::string, std::string>>& rows, bool csv) {
    std::ostringstream out;
    if (csv) {
        out << "metric,value\n";
        for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
    } else {
        size_t w = 0;
        for (const auto& [k, v] : rows) w = std::max(w, k.size());
        for (const auto& [k, v] : rows)
            out << k << std::string(w - k.size() + 2, ' ') << v << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

int cmd_bounds(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);
    const auto v = verdict(cfg.plant, cfg.topology);
    const auto& c = v.certificate;

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("nec", rate_str(c.necessary_rate));
    rows.emplace_back("suf", rate_str(c.sufficient_rate));
    if (!c.necessary_rate.is_infinite())
        rows.emplace_back("gap",
                          csv_num(c.necessary_rate.bits() - c.sufficient_rate.bits()));
    rows.emplace_back("logdet", csv_num(v.log2_det));
    rows.emplace_back("verdict", verdict_name(v.status));
    rows.emplace_back("boundary", c.boundary_flag ? "true" : "false");
    if (c.achieving_alloc.beta) rows.emplace_back("beta", csv_num(*c.achieving_alloc.beta));
    if (c.achieving_alloc.eta_star)
        rows.emplace_back("eta_star", csv_num(*c.achieving_alloc.eta_star));
    for (size_t i = 0; i < c.achieving_alloc.powers.size(); ++i)
        rows.emplace_back("power_" + std::to_string(i + 1),
                          csv_num(c.achieving_alloc.powers[i]));
    emit(opt, kv_rows(rows, opt.format == "csv"));
    return 0;
}

int cmd_alloc(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);
    std::vector<std::pair<std::string, std::string>> rows;
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Cascade>) {
                std::vector<double> hop_noise(t.noise_vars.begin() + 1, t.noise_vars.end());
                const auto a = cascade_alloc(hop_noise, t.relay_budget, t.hops);
                rows.emplace_back("method", "cascade_lagrangian");
                rows.emplace_back("gamma", csv_num(a.multiplier));
                for (size_t i = 0; i < a.powers.size(); ++i)
                    rows.emplace_back("power_" + std::to_string(i + 1), csv_num(a.powers[i]));
            } else if constexpr (std::is_same_v<T, Parallel>) {
                const auto a = waterfill(t.ctrl_noise, t.relay_budget);
                rows.emplace_back("method", "waterfill");
                rows.emplace_back("water_level", csv_num(a.multiplier));
                rows.emplace_back("objective_bits", csv_num(a.objective.bits()));
                for (size_t i = 0; i < a.powers.size(); ++i)
                    rows.emplace_back("power_" + std::to_string(i + 1), csv_num(a.powers[i]));
            } else if constexpr (std::is_same_v<T, HalfDuplex>) {
                const auto [rate, a] = halfduplex_sufficient(t);
                rows.emplace_back("method", "ball_projected_gradient");
                rows.emplace_back("beta", csv_num(a.beta.value_or(1.0)));
                rows.emplace_back("objective_bits", rate_str(rate));
                for (size_t i = 0; i < a.powers.size(); ++i)
                    rows.emplace_back("power_" + std::to_string(i + 1), csv_num(a.powers[i]));
                const auto closed = nonorth_beta1_alloc(t);
                for (size_t i = 0; i < closed.powers.size(); ++i)
                    rows.emplace_back("beta1_closed_power_" + std::to_string(i + 1),
                                      csv_num(closed.powers[i]));
            } else {
                const auto [rate, a] = fullduplex_sufficient(t);
                rows.emplace_back("method", "ball_projected_gradient");
                rows.emplace_back("eta_star", csv_num(a.eta_star.value_or(1.0)));
                rows.emplace_back("objective_bits", rate_str(rate));
                for (size_t i = 0; i < a.powers.size(); ++i)
                    rows.emplace_back("power_" + std::to_string(i + 1), csv_num(a.powers[i]));
            }
        },
        cfg.topology);
    emit(opt, kv_rows(rows, opt.format == "csv"));
    return 0;
}

// sweep helpers -------------------------------------------------------------

NetworkTopology resize_topology(const NetworkTopology& proto, int L) {
    NetworkTopology out = proto;
    std::visit(
        [&](auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Cascade>) {
                const double n0 = t.noise_vars.front();
                const double nr = t.noise_vars.back();
                t.hops = L;
                t.noise_vars.assign(size_t(L), nr);
                t.noise_vars.front() = n0;
                if (t.relay_powers && !t.relay_powers->empty()) {
                    const double p = t.relay_powers->front();
                    t.relay_powers->assign(size_t(std::max(0, L - 1)), p);
                    t.relay_budget = p * double(std::max(0, L - 1));
                }
            } else if constexpr (std::is_same_v<T, Cascade>) {
            } else if constexpr (!std::is_same_v<T, Cascade>) {
                const double nr = t.relay_noise.front();
                t.relay_noise.assign(size_t(L), nr);
                if constexpr (std::is_same_v<T, Parallel>) {
                    const double nd = t.ctrl_noise.front();
                    t.ctrl_noise.assign(size_t(L), nd);
                } else {
                    const double g = t.relay_gains.empty() ? 1.0 : t.relay_gains.front();
                    t.relay_gains.assign(size_t(L), g);
                }
                if (t.relay_powers && !t.relay_powers->empty()) {
                    const double p = t.relay_powers->front();
                    t.relay_powers->assign(size_t(L), p);
                    t.relay_budget = p * double(L);
                }
            }
        },
        out);
    return out;
}

void set_relay_power(NetworkTopology& topo, double p) {
    std::visit(
        [&](auto& t) {
            using T = std::decay_t<decltype(t)>;
            size_t n;
            if constexpr (std::is_same_v<T, Cascade>) n = size_t(std::max(0, t.hops - 1));
            else n = t.relay_noise.size();
            t.relay_powers = std::vector<double>(n, p);
            t.relay_budget = p * double(n);
        },
        topo);
}

void set_sensor_power(NetworkTopology& topo, double p) {
    std::visit([&](auto& t) { t.sensor_power = p; }, topo);
}

int cmd_sweep(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);

    SweepSpec sw;
    if (!opt.sweep_var.empty()) {
        sw.variable = opt.sweep_var;
        sw.from = opt.sweep_from;
        sw.to = opt.sweep_to;
        sw.steps = opt.sweep_steps;
    } else if (cfg.sweep) {
        sw = *cfg.sweep;
    } else {
        throw ConfigError("sweep: no sweep spec (config \"sweep\" or --var/--from/--to/--steps)");
    }
    if (sw.steps < 1 || !(sw.to >= sw.from)) throw ConfigError("sweep: empty grid");
    if (sw.variable != "L" && sw.variable != "Pr" && sw.variable != "Ps" &&
        sw.variable != "lambda")
        throw ConfigError("sweep: variable must be one of L, Pr, Ps, lambda");

    std::ostringstream out;
    out << sw.variable << ",nec,suf,gap,logdet,verdict\n";
    for (int i = 0; i <= sw.steps; ++i) {
        const double x = sw.from + (sw.to - sw.from) * double(i) / double(sw.steps);
        NetworkTopology topo = cfg.topology;
        PlantModel plant = cfg.plant;
        double shown = x;
        if (sw.variable == "L") {
            const int L = int(std::lround(x));
            if (L < 1) continue;
            shown = L;
            topo = resize_topology(topo, L);
        } else if (sw.variable == "Pr") {
            set_relay_power(topo, x);
        } else if (sw.variable == "Ps") {
            set_sensor_power(topo, x);
        } else {
            for (int d = 0; d < plant.dim(); ++d) plant.a_matrix(d, d) = x;
        }
        const auto v = verdict(plant, topo);
        const double nec = v.certificate.necessary_rate.bits();
        const double suf = v.certificate.sufficient_rate.bits();
        out << csv_num(shown) << ',' << rate_str(v.certificate.necessary_rate) << ','
            << rate_str(v.certificate.sufficient_rate) << ','
            << (std::isinf(nec) ? "inf" : csv_num(nec - suf)) << ',' << csv_num(v.log2_det)
            << ',' << verdict_name(v.status) << '\n';
    }
    emit(opt, out.str());
    return 0;
}

// simulate ------------------------------------------------------------------

SchemeId scheme_from_name(const std::string& name) {
    if (name == "sk_half_duplex") return SchemeId::SkHalfDuplex;
    if (name == "linear_cascade") return SchemeId::LinearCascade;
    if (name == "linear_parallel") return SchemeId::LinearParallel;
    if (name == "timeshare") return SchemeId::Timeshare;
    throw DispatchError("unknown scheme \"" + name + "\"");
}

std::string detail_trace_csv(SchemeId id, const RunConfig& cfg, const SchemeParams& params,
                             int64_t horizon, SeedPolicy seed) {
    std::ostringstream out;
    TrialNoise noise{seed, 0};
    out << "t,x,x_hat,u,alpha_analytic,s_power\n";
    auto row = [&](int64_t t, double x, double xh, double u, double a, double sp) {
        out << t << ',' << csv_num(x) << ',' << csv_num(xh) << ',' << csv_num(u) << ','
            << csv_num(a) << ',' << csv_num(sp) << '\n';
    };
    if (id == SchemeId::SkHalfDuplex) {
        const auto& t = std::get<HalfDuplex>(cfg.topology);
        const auto [beta, powers] = detail::resolve_sk_operating(t, params);
        const double a0 = cfg.plant.scalar_init_var();
        const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
        SkHalfDuplexScheme s(t, beta, powers, params.lambda, cfg.plant.scalar_noise_var(), a0, x0);
        for (int64_t i = 0; i < horizon; ++i) {
            s.step(noise);
            row(s.t(), s.state(), s.estimate(), s.control(), s.alpha(),
                s.declared_sensor_power());
        }
    } else if (id == SchemeId::LinearCascade) {
        const auto& t = std::get<Cascade>(cfg.topology);
        auto powers = detail::resolve_powers(params.powers, t.relay_powers,
                                             size_t(std::max(0, t.hops - 1)), t.relay_budget);
        const double a0 = cfg.plant.scalar_init_var();
        const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
        LinearCascadeScheme s(t, powers, params.lambda, cfg.plant.scalar_noise_var(), a0, x0);
        for (int64_t i = 0; i < horizon; ++i) {
            s.step(noise);
            row(s.slots(), s.state(), s.estimate(), s.control(), s.alpha(),
                s.declared_sensor_power());
        }
    } else if (id == SchemeId::LinearParallel) {
        const auto& t = std::get<Parallel>(cfg.topology);
        auto powers = detail::resolve_powers(params.powers, t.relay_powers,
                                             t.relay_noise.size(), t.relay_budget);
        const double a0 = cfg.plant.scalar_init_var();
        const double x0 = noise.normal(~uint64_t(0), kChanProcessBase) * std::sqrt(a0);
        LinearParallelScheme s(t, powers, params.lambda, cfg.plant.scalar_noise_var(), a0, x0);
        for (int64_t i = 0; i < horizon; ++i) {
            s.step(noise);
            row(s.slots(), s.state(), s.estimate(), s.control(), s.alpha(),
                s.declared_sensor_power());
        }
    } else {
        std::vector<double> fr;
        for (const auto& m : mode_decomposition(cfg.plant))
            for (int i = 0; i < m.multiplicity; ++i) fr.push_back(m.time_fraction);
        TimeshareScheme s(cfg.plant, params.capacity, fr);
        s.init_state(noise);
        out.str("");
        out << "t,x1,x2,state_sq,ledger_total\n";
        for (int64_t i = 0; i < horizon; ++i) {
            s.step(noise);
            out << s.slots() << ',' << csv_num(s.component(0)) << ','
                << csv_num(cfg.plant.dim() > 1 ? s.component(1) : 0.0) << ','
                << csv_num(s.state_sq()) << ',' << csv_num(s.ledger_total()) << '\n';
        }
    }
    return out.str();
}

int cmd_simulate(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);
    const std::string scheme_name =
        !opt.scheme.empty() ? opt.scheme : cfg.scheme.value_or("");
    if (scheme_name.empty()) throw DispatchError("simulate: no scheme selected");
    const SchemeId id = scheme_from_name(scheme_name);

    SchemeParams params;
    if (opt.lambda_set) params.lambda = opt.lambda;
    else if (cfg.lambda) params.lambda = *cfg.lambda;
    else if (cfg.plant.is_scalar()) params.lambda = cfg.plant.scalar_lambda();
    params.capacity = cfg.capacity.value_or(0.0);
    if (id == SchemeId::Timeshare && params.capacity <= 0.0)
        throw DispatchError("simulate: timeshare needs \"capacity\" in the config");

    TrialConfig tc;
    tc.horizon = opt.horizon;
    tc.trials = opt.trials;
    SeedPolicy seed{opt.seed};

    MomentTrace trace;
    try {
        trace = run_trials(id, cfg.plant, cfg.topology, params, tc, seed);
    } catch (const std::invalid_argument& e) {
        throw DispatchError(e.what());
    }
    std::ostringstream out;
    out << "verdict," << to_string(trace.verdict) << '\n' << moment_trace_csv(trace);
    emit(opt, out.str());
    if (!opt.trace_out.empty()) {
        std::ofstream f(opt.trace_out);
        if (!f) throw std::runtime_error("cannot open trace file: " + opt.trace_out);
        f << detail_trace_csv(id, cfg, params, std::min<int64_t>(opt.horizon, 4096), seed);
    }
    return 0;
}

int cmd_rate(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);
    if (!std::holds_alternative<HalfDuplex>(cfg.topology))
        throw DispatchError("rate: information rate is defined for half-duplex topologies");
    const auto& t = std::get<HalfDuplex>(cfg.topology);
    const auto [suff, alloc] = halfduplex_sufficient(t);
    const double beta = alloc.beta.value_or(1.0);
    const Rate info = info_rate_halfduplex(t, beta, alloc.powers);
    const bool equal = std::abs(info.bits() - suff.bits()) <= 1e-12;

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("info_rate", rate_str(info));
    rows.emplace_back("sufficient_rate", rate_str(suff));
    rows.emplace_back("equal", equal ? "true" : "false");
    rows.emplace_back("beta", csv_num(beta));
    for (size_t i = 0; i < alloc.powers.size(); ++i)
        rows.emplace_back("power_" + std::to_string(i + 1), csv_num(alloc.powers[i]));
    emit(opt, kv_rows(rows, opt.format == "csv"));
    return 0;
}

int cmd_threshold(const Options& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    require_valid(cfg);
    const std::string scheme_name =
        !opt.scheme.empty() ? opt.scheme : cfg.scheme.value_or("");
    if (scheme_name.empty()) throw DispatchError("threshold: no scheme selected");
    const SchemeId id = scheme_from_name(scheme_name);
    if (!(opt.lambda_min > 0.0) || !(opt.lambda_max > opt.lambda_min))
        throw ConfigError("threshold: needs --lambda-min < --lambda-max, both > 0");

    SchemeParams params;
    params.capacity = cfg.capacity.value_or(0.0);
    if (id == SchemeId::Timeshare && params.capacity <= 0.0)
        throw DispatchError("threshold: timeshare needs \"capacity\" in the config");
    TrialConfig tc;
    tc.horizon = opt.horizon;
    tc.trials = opt.trials;

    ThresholdResult res;
    try {
        res = threshold_search(id, cfg.plant, cfg.topology, params, opt.lambda_min,
                               opt.lambda_max, SeedPolicy{opt.seed}, tc);
    } catch (const std::invalid_argument& e) {
        throw DispatchError(e.what());
    } catch (const std::runtime_error& e) {
        throw DispatchError(e.what());
    }

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("lambda_hat", csv_num(res.lambda_hat));
    rows.emplace_back("log2_lambda_hat", csv_num(res.log2_lambda_hat));
    rows.emplace_back("logdet_hat", csv_num(res.logdet_hat));
    rows.emplace_back("sufficient_rate", rate_str(res.sufficient));
    rows.emplace_back("necessary_rate", rate_str(res.necessary));
    rows.emplace_back("evaluations", std::to_string(res.evaluations));
    emit(opt, kv_rows(rows, opt.format == "csv"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stabilization bounds and closed-loop simulation over Gaussian relay networks"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config path")->required();
        sub->add_option("--format", opt.format, "output format")
            ->check(CLI::IsMember({"table", "csv"}));
        sub->add_option("--out", opt.out, "write output to this file");
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--trials", opt.trials, "Monte Carlo trials");
        sub->add_option("--horizon", opt.horizon, "steps per trial");
    };

    auto* bounds_cmd = app.add_subcommand("bounds", "necessary/sufficient rates and verdict");
    add_common(bounds_cmd);
    auto* alloc_cmd = app.add_subcommand("alloc", "power allocation for the topology");
    add_common(alloc_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "bound curves over a parameter grid");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--var", opt.sweep_var, "sweep variable: L, Pr, Ps, lambda");
    sweep_cmd->add_option("--from", opt.sweep_from, "grid start");
    sweep_cmd->add_option("--to", opt.sweep_to, "grid end");
    sweep_cmd->add_option("--steps", opt.sweep_steps, "grid intervals");
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo closed-loop trials");
    add_common(sim_cmd);
    sim_cmd->add_option("--scheme", opt.scheme,
                        "sk_half_duplex | linear_cascade | linear_parallel | timeshare");
    sim_cmd->add_option("--lambda", opt.lambda, "plant eigenvalue")
        ->each([&](const std::string&) { opt.lambda_set = true; });
    sim_cmd->add_option("--trace-out", opt.trace_out, "write a single-trial detailed trace CSV");
    auto* rate_cmd = app.add_subcommand("rate", "half-duplex information rate");
    add_common(rate_cmd);
    auto* thr_cmd = app.add_subcommand("threshold", "empirical stability threshold search");
    add_common(thr_cmd);
    thr_cmd->add_option("--scheme", opt.scheme, "scheme id");
    thr_cmd->add_option("--lambda-min", opt.lambda_min, "stable bracket end")->required();
    thr_cmd->add_option("--lambda-max", opt.lambda_max, "divergent bracket end")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (bounds_cmd->parsed()) return cmd_bounds(opt);
        if (alloc_cmd->parsed()) return cmd_alloc(opt);
        if (sweep_cmd->parsed()) return cmd_sweep(opt);
        if (sim_cmd->parsed()) return cmd_simulate(opt);
        if (rate_cmd->parsed()) return cmd_rate(opt);
        if (thr_cmd->parsed()) return cmd_threshold(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DispatchError& e) {
        std::cerr << "dispatch error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#pragma once

// =============================================================================
// relaynet - Plant and network domain types
// =============================================================================
// PlantModel holds the discrete LTI plant x_{t+1} = A x_t + B u_t + w_t with
// every eigenvalue of A on or outside the unit circle. NetworkTopology is the
// tagged union of the five supported network parameterizations. Validation is
// report-style: it returns the list of violated invariants instead of throwing.
// =============================================================================

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

// =============================================================================
// Plant
// =============================================================================

struct PlantModel {
    Eigen::MatrixXd a_matrix;          ///< system matrix A (n x n)
    Eigen::MatrixXd b_matrix;          ///< input matrix B (n x m)
    Eigen::MatrixXd process_noise;     ///< noise covariance K_W (n x n)
    Eigen::MatrixXd init_cov;          ///< initial-state covariance (n x n)

    [[nodiscard]] int dim() const { return static_cast<int>(a_matrix.rows()); }

    [[nodiscard]] bool is_scalar() const { return dim() == 1; }

    /// Scalar-plant accessor: A = lambda.
    [[nodiscard]] double scalar_lambda() const { return a_matrix(0, 0); }
    [[nodiscard]] double scalar_noise_var() const { return process_noise(0, 0); }
    [[nodiscard]] double scalar_init_var() const { return init_cov(0, 0); }

    [[nodiscard]] static PlantModel scalar(double lambda, double noise_var, double init_var) {
        PlantModel p;
        p.a_matrix = Eigen::MatrixXd::Constant(1, 1, lambda);
        p.b_matrix = Eigen::MatrixXd::Constant(1, 1, 1.0);
        p.process_noise = Eigen::MatrixXd::Constant(1, 1, noise_var);
        p.init_cov = Eigen::MatrixXd::Constant(1, 1, init_var);
        return p;
    }
};

// =============================================================================
// Topologies
// =============================================================================

/// Serial chain of hops relays; noise_vars holds N_1..N_L (L = hops).
/// L-1 relays sit between sensor and controller; L = 1 is the direct link.
struct Cascade {
    int hops = 1;                                    ///< L >= 1
    double sensor_power = 0.0;                       ///< Ps
    double relay_budget = 0.0;                       ///< PR, sum of relay powers
    std::optional<std::vector<double>> relay_powers; ///< Pr^1..Pr^{L-1} if pinned
    std::vector<double> noise_vars;                  ///< N_1..N_L
};

/// Relays on mutually orthogonal channels to the controller (L = relay count).
struct Parallel {
    double sensor_power = 0.0;
    double relay_budget = 0.0;
    std::optional<std::vector<double>> relay_powers;
    std::vector<double> relay_noise;                 ///< Nr^1..Nr^L
    std::vector<double> ctrl_noise;                  ///< Nd^1..Nd^L
};

/// Non-orthogonal half-duplex network: two alternating transmission phases,
/// relays listen in phase 1 and transmit (superimposed at the controller) in
/// phase 2. two_hop marks the h = 0, beta = 1 specialization.
struct HalfDuplex {
    double sensor_power = 0.0;
    double relay_budget = 0.0;
    std::optional<std::vector<double>> relay_powers;
    std::optional<double> beta;                      ///< phase power split, in (0,1]
    std::vector<double> relay_noise;                 ///< Nr^1..Nr^L
    double ctrl_noise = 1.0;                         ///< Nd
    double direct_gain = 0.0;                        ///< h
    std::vector<double> relay_gains;                 ///< h_1..h_L
    bool two_hop = false;

    [[nodiscard]] int relays() const { return static_cast<int>(relay_noise.size()); }
};

/// Two-hop network = half-duplex with no direct link and beta pinned at 1.
[[nodiscard]] inline HalfDuplex make_two_hop(double sensor_power, double relay_budget,
                                             std::vector<double> relay_noise, double ctrl_noise,
                                             std::vector<double> relay_gains,
                                             std::optional<std::vector<double>> relay_powers = {}) {
    HalfDuplex t;
    t.sensor_power = sensor_power;
    t.relay_budget = relay_budget;
    t.relay_powers = std::move(relay_powers);
    t.beta = 1.0;
    t.relay_noise = std::move(relay_noise);
    t.ctrl_noise = ctrl_noise;
    t.direct_gain = 0.0;
    t.relay_gains = std::move(relay_gains);
    t.two_hop = true;
    return t;
}

/// Non-orthogonal full-duplex network: every node transmits and receives in
/// every slot.
struct FullDuplex {
    double sensor_power = 0.0;
    double relay_budget = 0.0;
    std::optional<std::vector<double>> relay_powers;
    std::vector<double> relay_noise;
    double ctrl_noise = 1.0;
    double direct_gain = 0.0;
    std::vector<double> relay_gains;

    [[nodiscard]] int relays() const { return static_cast<int>(relay_noise.size()); }
};

using NetworkTopology = std::variant<Cascade, Parallel, HalfDuplex, FullDuplex>;

// =============================================================================
// Validation
// =============================================================================

struct ValidationReport {
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }

    void require(bool cond, const std::string& what) {
        if (!cond) violations.push_back(what);
    }
};

namespace detail {

inline Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues();
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-9) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

inline bool is_psd(const Eigen::MatrixXd& m) {
    if (!is_symmetric(m)) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff() >= -1e-9 * scale;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double vec_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace detail

inline ValidationReport validate(const PlantModel& plant) {
    ValidationReport r;
    const auto n = plant.a_matrix.rows();
    r.require(n >= 1 && plant.a_matrix.cols() == n, "system matrix not square");
    if (!r.ok()) return r;
    r.require(plant.b_matrix.rows() == n && plant.b_matrix.cols() >= 1,
              "input matrix dimension mismatch");
    r.require(plant.process_noise.rows() == n && plant.process_noise.cols() == n,
              "noise covariance dimension mismatch");
    r.require(plant.init_cov.rows() == n && plant.init_cov.cols() == n,
              "initial covariance dimension mismatch");
    if (!r.ok()) return r;

    const auto ev = detail::eigenvalues(plant.a_matrix);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) < 1.0 - 1e-12) {
            r.violations.push_back("eigenvalue inside unit disc: |" +
                                   std::to_string(std::abs(ev[i])) + "| < 1");
            break;
        }
    }

    // controllability: rank [B AB ... A^{n-1}B] == n
    if (plant.b_matrix.rows() == n) {
        const auto m = plant.b_matrix.cols();
        Eigen::MatrixXd ctrb(n, n * m);
        Eigen::MatrixXd block = plant.b_matrix;
        for (Eigen::Index i = 0; i < n; ++i) {
            ctrb.middleCols(i * m, m) = block;
            block = plant.a_matrix * block;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ctrb);
        qr.setThreshold(1e-10);
        r.require(qr.rank() == n, "(A,B) not controllable");
    }

    r.require(detail::is_psd(plant.process_noise), "noise covariance not symmetric PSD");
    r.require(detail::is_psd(plant.init_cov), "initial covariance not symmetric PSD");
    return r;
}

namespace detail {

inline void check_powers(ValidationReport& r, double sensor_power, double budget,
                         const std::optional<std::vector<double>>& powers, size_t expect) {
    r.require(sensor_power >= 0.0 && std::isfinite(sensor_power), "sensor power negative");
    r.require(budget >= 0.0 && std::isfinite(budget), "relay budget negative");
    if (powers) {
        r.require(powers->size() == expect, "per-relay power count mismatch");
        for (double p : *powers) r.require(p >= 0.0 && std::isfinite(p), "relay power negative");
        if (powers->size() == expect)
            r.require(vec_sum(*powers) <= budget + 1e-12, "budget exceeded");
    }
}

inline void check_noises(ValidationReport& r, const std::vector<double>& v, bool strictly_positive,
                         const std::string& name) {
    for (double x : v) {
        r.require(std::isfinite(x) && x >= 0.0, name + " negative");
        if (strictly_positive) r.require(x > 0.0, name + " must be > 0");
    }
}

}  // namespace detail

inline ValidationReport validate(const Cascade& t) {
    ValidationReport r;
    r.require(t.hops >= 1, "cascade hop count < 1");
    r.require(t.noise_vars.size() == size_t(t.hops), "cascade needs one noise per hop");
    detail::check_powers(r, t.sensor_power, t.relay_budget, t.relay_powers,
                         t.hops >= 1 ? size_t(t.hops - 1) : 0);
    if (!t.noise_vars.empty()) {
        r.require(std::isfinite(t.noise_vars.front()) && t.noise_vars.front() >= 0.0,
                  "hop noise negative");
        std::vector<double> rest(t.noise_vars.begin() + 1, t.noise_vars.end());
        detail::check_noises(r, rest, /*strictly_positive=*/true, "relay-chain noise");
    }
    return r;
}

inline ValidationReport validate(const Parallel& t) {
    ValidationReport r;
    const size_t L = t.relay_noise.size();
    r.require(L >= 1, "parallel relay count < 1");
    r.require(t.ctrl_noise.size() == L, "parallel needs Nd per relay");
    detail::check_powers(r, t.sensor_power, t.relay_budget, t.relay_powers, L);
    // zero relay / controller noise is allowed here: the noiseless
    // specializations are part of the model
    detail::check_noises(r, t.relay_noise, false, "relay noise");
    detail::check_noises(r, t.ctrl_noise, false, "controller noise");
    return r;
}

inline ValidationReport validate(const HalfDuplex& t) {
    ValidationReport r;
    const size_t L = t.relay_noise.size();
    r.require(t.relay_gains.size() == L, "relay gain count mismatch");
    detail::check_powers(r, t.sensor_power, t.relay_budget, t.relay_powers, L);
    detail::check_noises(r, t.relay_noise, false, "relay noise");
    r.require(std::isfinite(t.ctrl_noise) && t.ctrl_noise > 0.0, "controller noise must be > 0");
    r.require(std::isfinite(t.direct_gain), "direct gain not finite");
    r.require(detail::all_finite(t.relay_gains), "relay gain not finite");
    if (t.beta) r.require(*t.beta > 0.0 && *t.beta <= 1.0, "beta outside (0,1]");
    if (t.two_hop) {
        r.require(t.direct_gain == 0.0, "two-hop requires h = 0");
        r.require(t.beta && *t.beta == 1.0, "two-hop requires beta = 1");
    }
    return r;
}

inline ValidationReport validate(const FullDuplex& t) {
    ValidationReport r;
    const size_t L = t.relay_noise.size();
    r.require(t.relay_gains.size() == L, "relay gain count mismatch");
    detail::check_powers(r, t.sensor_power, t.relay_budget, t.relay_powers, L);
    detail::check_noises(r, t.relay_noise, false, "relay noise");
    r.require(std::isfinite(t.ctrl_noise) && t.ctrl_noise > 0.0, "controller noise must be > 0");
    r.require(std::isfinite(t.direct_gain), "direct gain not finite");
    r.require(detail::all_finite(t.relay_gains), "relay gain not finite");
    return r;
}

inline ValidationReport validate(const NetworkTopology& t) {
    return std::visit([](const auto& x) { return validate(x); }, t);
}

inline ValidationReport validate(const PlantModel& plant, const NetworkTopology& topo) {
    ValidationReport r = validate(plant);
    ValidationReport rt = validate(topo);
    r.violations.insert(r.violations.end(), rt.violations.begin(), rt.violations.end());
    return r;
}

// =============================================================================
// Spectral preprocessing
// =============================================================================

/// log2|det A| = sum_i log2|lambda_i|, the total unstable log-volume growth
/// per step. Throws on a (numerically) singular A.
[[nodiscard]] inline Rate unstable_log_volume(const PlantModel& plant) {
    const auto ev = detail::eigenvalues(plant.a_matrix);
    double bits = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double mag = std::abs(ev[i]);
        if (mag < 1e-12) throw std::domain_error("unstable_log_volume: singular system matrix");
        bits += std::log2(mag);
    }
    return Rate(clamp_nonneg(bits, 1e-9));
}

struct Mode {
    std::complex<double> eigenvalue;
    int multiplicity = 1;
    double log2_mag = 0.0;
    double time_fraction = 0.0;  ///< per instance; sum of mult*fraction == 1
};

using ModeList = std::vector<Mode>;

/// Eigenvalues grouped by multiplicity with the per-mode share of channel
/// time, log|lambda_m| / sum_i log|lambda_i|. Modes exactly on the unit
/// circle have zero log and no defined share.
[[nodiscard]] inline ModeList mode_decomposition(const PlantModel& plant) {
    const auto ev = detail::eigenvalues(plant.a_matrix);
    ModeList modes;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const std::complex<double> v = ev[i];
        if (std::abs(std::abs(v) - 1.0) < 1e-12)
            throw std::domain_error("mode_decomposition: marginally unstable mode |lambda| = 1");
        bool grouped = false;
        for (auto& m : modes) {
            const double scale = std::max(1.0, std::abs(m.eigenvalue));
            if (std::abs(m.eigenvalue - v) <= 1e-9 * scale) {
                ++m.multiplicity;
                grouped = true;
                break;
            }
        }
        if (!grouped) modes.push_back({v, 1, std::log2(std::abs(v)), 0.0});
    }
    double total = 0.0;
    for (const auto& m : modes) total += m.multiplicity * m.log2_mag;
    for (auto& m : modes) m.time_fraction = m.log2_mag / total;
    return modes;
}

}  // namespace relaynet

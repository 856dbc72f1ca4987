#pragma once

// =============================================================================
// relaynet - Closed-loop communication-and-control schemes
// =============================================================================
// Executable protocols driven by externally supplied noise draws:
//  * SkHalfDuplexScheme  - the two-phase SK-style protocol with amplify-and-
//    forward relays and an innovation estimator at the controller
//  * LinearCascadeScheme - memoryless per-hop amplify-and-forward with one
//    end-of-round MMSE estimate and delay-compensated control
//  * LinearParallelScheme- broadcast + orthogonal relay channels, MMSE-combined
//  * TimeshareScheme     - one state component per slot over a scalar channel
//    of capacity C, each mode served in proportion to log|lambda_m|
//
// A noise source is anything with `double normal(uint64_t step, uint32_t
// channel)`; all randomness enters through it, so replaying a seed replays
// the trajectory bit for bit.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "relaynet/analysis.hpp"
#include "relaynet/model.hpp"
#include "relaynet/rng.hpp"

namespace relaynet {

enum class Phase { Init, Phase1, Phase2 };

struct InnovationRecord {
    double predicted = 0.0;   ///< R-hat
    double innovation = 0.0;  ///< I = R - R-hat
    double gain_l1 = 0.0;
    double gain_l2 = 0.0;
};

// =============================================================================
// SK half-duplex
// =============================================================================

class SkHalfDuplexScheme {
public:
    SkHalfDuplexScheme(const HalfDuplex& topo, double beta, std::vector<double> powers,
                       double lambda, double n_w, double init_var, double x0)
        : topo_(topo),
          beta_(beta),
          powers_(std::move(powers)),
          lambda_(lambda),
          n_w_(n_w),
          x_(x0),
          alpha_(init_var),
          stored_(topo.relay_noise.size(), 0.0),
          relay_tx_(topo.relay_noise.size(), 0.0) {
        if (powers_.size() != topo_.relay_noise.size())
            throw std::invalid_argument("SkHalfDuplexScheme: power count mismatch");
        if (!(init_var > 0.0)) throw std::invalid_argument("SkHalfDuplexScheme: init_var <= 0");
    }

    /// Advance one slot. Slot roles: t=0 initialization, odd t phase 1
    /// (sensor -> relays + controller), even t>=2 phase 2 (sensor + relays ->
    /// controller, innovation estimate).
    template <class Noise>
    void step(Noise&& noise) {
        const double Ps = topo_.sensor_power;
        const double Nd = topo_.ctrl_noise;
        const double h = topo_.direct_gain;
        const double lm = lambda_;
        const size_t L = powers_.size();
        const double w_t = noise.normal(uint64_t(t_), kChanProcessBase) * std::sqrt(n_w_);

        if (t_ == 0) {
            phase_ = Phase::Init;
            if (h * h * Ps > 0.0) {
                require_alpha();
                sensor_tx_ = std::sqrt(Ps / alpha_) * x_;
                const double r = h * sensor_tx_ + noise.normal(0, kChanCtrl) * std::sqrt(Nd);
                x_hat_ = (1.0 / h) * std::sqrt(alpha_ / Ps) * r;
                u_ = -lm * x_hat_;
                push_alpha(lm * lm * Nd / (h * h * Ps) * alpha_ + n_w_);
            } else {
                sensor_tx_ = 0.0;
                x_hat_ = 0.0;
                u_ = 0.0;
                push_alpha(lm * lm * alpha_ + n_w_);
            }
            x_ = lm * x_ + u_ + w_t;
        } else if (t_ % 2 == 1) {
            phase_ = Phase::Phase1;
            require_alpha();
            sensor_tx_ = std::sqrt(2.0 * beta_ * Ps / alpha_) * x_;
            for (size_t i = 0; i < L; ++i) {
                stored_[i] = sensor_tx_ +
                             noise.normal(uint64_t(t_), kChanRelayBase + uint32_t(i)) *
                                 std::sqrt(topo_.relay_noise[i]);
            }
            const double z = noise.normal(uint64_t(t_), kChanCtrl) * std::sqrt(Nd);
            const double r = h * sensor_tx_ + z;
            x_hat_ = h * std::sqrt(2.0 * beta_ * Ps * alpha_) /
                     (2.0 * h * h * beta_ * Ps + Nd) * r;
            x_hat_phase1_ = x_hat_;
            u_ = -lm * x_hat_;
            x_ = lm * (x_ - x_hat_) + w_t;
            const double k = Nd / (2.0 * h * h * beta_ * Ps + Nd);
            push_alpha(lm * lm * k * alpha_ + n_w_);
        } else {
            phase_ = Phase::Phase2;
            require_alpha();
            const double tx_pow = 2.0 * (1.0 - beta_) * Ps;
            sensor_tx_ = tx_pow > 0.0 ? std::sqrt(tx_pow / alpha_) * x_ : 0.0;
            double r = h * sensor_tx_ + noise.normal(uint64_t(t_), kChanCtrl) * std::sqrt(Nd);
            double n_tilde = Nd;
            double l2 = 0.0;
            for (size_t i = 0; i < L; ++i) {
                const double den = 2.0 * beta_ * Ps + topo_.relay_noise[i];
                if (den <= 0.0) {
                    relay_tx_[i] = 0.0;
                    continue;
                }
                const double gi = std::sqrt(2.0 * powers_[i] / den);
                relay_tx_[i] = gi * stored_[i];
                r += topo_.relay_gains[i] * relay_tx_[i];
                const double hi2 = topo_.relay_gains[i] * topo_.relay_gains[i];
                n_tilde += 2.0 * hi2 * powers_[i] * topo_.relay_noise[i] / den;
                l2 += std::sqrt(4.0 * beta_ * hi2 * Ps * powers_[i] / (den * alpha_prev_));
            }
            const double l1 = std::sqrt(2.0 * (1.0 - beta_) * h * h * Ps / alpha_);
            innovation_.gain_l1 = l1;
            innovation_.gain_l2 = l2;
            innovation_.predicted = l2 * x_hat_phase1_;
            innovation_.innovation = r - innovation_.predicted;
            const double lam_l = lm * l1 + l2;
            const double den = lam_l * lam_l * alpha_ + l2 * l2 * n_w_ + lm * lm * n_tilde;
            const double gain = den > 0.0 ? lm * lam_l * alpha_ / den : 0.0;
            x_hat_ = gain * innovation_.innovation;
            u_ = -lm * x_hat_;
            x_ = lm * (x_ - x_hat_) + w_t;
            push_alpha(den > 0.0
                           ? lm * lm * alpha_ * (l2 * l2 * n_w_ + lm * lm * n_tilde) / den + n_w_
                           : lm * lm * alpha_ + n_w_);
        }
        ++t_;
    }

    [[nodiscard]] int64_t t() const { return t_; }
    [[nodiscard]] double state() const { return x_; }
    [[nodiscard]] double state_sq() const { return x_ * x_; }
    [[nodiscard]] double estimate() const { return x_hat_; }
    [[nodiscard]] double control() const { return u_; }
    [[nodiscard]] double alpha() const { return alpha_; }        ///< var of the current state
    [[nodiscard]] Phase phase() const { return phase_; }         ///< phase of the last step
    [[nodiscard]] const InnovationRecord& innovation() const { return innovation_; }
    [[nodiscard]] double sensor_tx() const { return sensor_tx_; }
    [[nodiscard]] double relay_tx(size_t i) const { return relay_tx_[i]; }

    /// Declared sensor power of the last executed slot.
    [[nodiscard]] double declared_sensor_power() const {
        const int64_t done = t_ - 1;
        if (done <= 0) return topo_.sensor_power;
        return done % 2 == 1 ? 2.0 * beta_ * topo_.sensor_power
                             : 2.0 * (1.0 - beta_) * topo_.sensor_power;
    }
    [[nodiscard]] double declared_relay_power(size_t i) const { return 2.0 * powers_[i]; }

private:
    void require_alpha() const {
        if (!(alpha_ > 0.0)) throw std::logic_error("SkHalfDuplexScheme: alpha <= 0");
    }
    void push_alpha(double next) {
        alpha_prev_ = alpha_;
        alpha_ = next;
    }

    HalfDuplex topo_;
    double beta_;
    std::vector<double> powers_;
    double lambda_;
    double n_w_;

    int64_t t_ = 0;
    double x_;
    double x_hat_ = 0.0;
    double x_hat_phase1_ = 0.0;
    double u_ = 0.0;
    double alpha_;
    double alpha_prev_ = 0.0;
    Phase phase_ = Phase::Init;
    InnovationRecord innovation_;
    std::vector<double> stored_;
    double sensor_tx_ = 0.0;
    std::vector<double> relay_tx_;
};

// =============================================================================
// Linear cascade
// =============================================================================

/// One round = L slots: the sensor scales the state to power L Ps, each relay
/// amplify-forwards to power L Pr^i, and the controller MMSE-estimates from
/// the single end-of-chain sample, applying u = -lambda^L x-hat at the round
/// boundary (the plant runs open-loop during the L-1 silent slots).
class LinearCascadeScheme {
public:
    LinearCascadeScheme(const Cascade& topo, std::vector<double> powers, double lambda,
                        double n_w, double init_var, double x0)
        : topo_(topo),
          powers_(std::move(powers)),
          lambda_(lambda),
          n_w_(n_w),
          x_(x0),
          alpha_(init_var) {
        if (powers_.size() + 1 != size_t(topo_.hops))
            throw std::invalid_argument("LinearCascadeScheme: need L-1 relay powers");
    }

    template <class Noise>
    void step(Noise&& noise) {
        const int L = topo_.hops;
        const double Ld = double(L);
        const double lm = lambda_;
        const uint64_t base = uint64_t(round_) * uint64_t(L);

        // signal chain: x -> sensor -> relays -> controller sample
        double sig_gain = alpha_ > 0.0 ? std::sqrt(Ld * topo_.sensor_power / alpha_) : 0.0;
        sensor_tx_ = sig_gain * x_;
        double sample = sensor_tx_ +
                        noise.normal(base, kChanRelayBase) * std::sqrt(topo_.noise_vars[0]);
        double rx_power = Ld * topo_.sensor_power + topo_.noise_vars[0];
        double chain_gain = sig_gain;
        for (int i = 0; i < L - 1; ++i) {
            const double g =
                rx_power > 0.0 ? std::sqrt(Ld * powers_[size_t(i)] / rx_power) : 0.0;
            sample = g * sample + noise.normal(base, kChanRelayBase + uint32_t(i) + 1) *
                                      std::sqrt(topo_.noise_vars[size_t(i) + 1]);
            chain_gain *= g;
            rx_power = g * g * rx_power + topo_.noise_vars[size_t(i) + 1];
        }

        // MMSE estimate of the round-start state from the chain sample
        const double exr = chain_gain * alpha_;
        const double gain = rx_power > 0.0 ? exr / rx_power : 0.0;
        x_hat_ = gain * sample;
        const double err_var = alpha_ - (rx_power > 0.0 ? exr * exr / rx_power : 0.0);

        // plant runs L slots; control enters at the last slot of the round
        const double ctrl = -std::pow(lm, L) * x_hat_;
        u_ = ctrl;
        double x = x_;
        double noise_var = 0.0;
        for (int j = 0; j < L; ++j) {
            const double w = noise.normal(base + uint64_t(j), kChanProcessBase) * std::sqrt(n_w_);
            x = lm * x + w + (j == L - 1 ? ctrl : 0.0);
            noise_var = lm * lm * noise_var + n_w_;
        }
        x_ = x;
        alpha_ = std::pow(lm, 2 * L) * err_var + noise_var;
        ++round_;
    }

    [[nodiscard]] int64_t round() const { return round_; }
    [[nodiscard]] int64_t slots() const { return round_ * topo_.hops; }
    [[nodiscard]] double state() const { return x_; }
    [[nodiscard]] double state_sq() const { return x_ * x_; }
    [[nodiscard]] double estimate() const { return x_hat_; }
    [[nodiscard]] double control() const { return u_; }
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double sensor_tx() const { return sensor_tx_; }
    [[nodiscard]] double declared_sensor_power() const {
        return double(topo_.hops) * topo_.sensor_power;
    }

private:
    Cascade topo_;
    std::vector<double> powers_;
    double lambda_;
    double n_w_;
    int64_t round_ = 0;
    double x_;
    double x_hat_ = 0.0;
    double u_ = 0.0;
    double alpha_;
    double sensor_tx_ = 0.0;
};

// =============================================================================
// Linear parallel
// =============================================================================

/// One round = 2 slots: broadcast at power 2Ps, simultaneous orthogonal relay
/// transmissions at powers 2Pr^i, and an MMSE combination of the L controller
/// observations; u = -lambda^2 x-hat at the second slot.
class LinearParallelScheme {
public:
    LinearParallelScheme(const Parallel& topo, std::vector<double> powers, double lambda,
                         double n_w, double init_var, double x0)
        : topo_(topo),
          powers_(std::move(powers)),
          lambda_(lambda),
          n_w_(n_w),
          x_(x0),
          alpha_(init_var),
          relay_tx_(topo.relay_noise.size(), 0.0) {
        if (powers_.size() != topo_.relay_noise.size())
            throw std::invalid_argument("LinearParallelScheme: power count mismatch");
    }

    template <class Noise>
    void step(Noise&& noise) {
        const size_t L = powers_.size();
        const double lm = lambda_;
        const uint64_t base = uint64_t(round_) * 2;

        const double g0 = alpha_ > 0.0 ? std::sqrt(2.0 * topo_.sensor_power / alpha_) : 0.0;
        sensor_tx_ = g0 * x_;

        double num = 0.0;
        double precision = alpha_ > 0.0 ? 1.0 / alpha_ : 0.0;
        bool exact = false;
        double exact_value = 0.0;
        for (size_t i = 0; i < L; ++i) {
            const double y = sensor_tx_ + noise.normal(base, kChanRelayBase + uint32_t(i)) *
                                              std::sqrt(topo_.relay_noise[i]);
            const double rx = 2.0 * topo_.sensor_power + topo_.relay_noise[i];
            const double gi = rx > 0.0 ? std::sqrt(2.0 * powers_[i] / rx) : 0.0;
            relay_tx_[i] = gi * y;
            const double obs =
                relay_tx_[i] + noise.normal(base + 1, kChanRelayBase + uint32_t(L) + uint32_t(i)) *
                                   std::sqrt(topo_.ctrl_noise[i]);
            const double a = gi * g0;
            const double s2 = gi * gi * topo_.relay_noise[i] + topo_.ctrl_noise[i];
            if (s2 > 0.0) {
                num += a * obs / s2;
                precision += a * a / s2;
            } else if (a > 0.0) {
                exact = true;  // noiseless branch observes the state exactly
                exact_value = obs / a;
            }
        }
        double err_var;
        if (exact) {
            x_hat_ = exact_value;
            err_var = 0.0;
        } else {
            x_hat_ = precision > 0.0 ? num / precision : 0.0;
            err_var = precision > 0.0 ? 1.0 / precision : alpha_;
        }

        const double w1 = noise.normal(base, kChanProcessBase) * std::sqrt(n_w_);
        const double w2 = noise.normal(base + 1, kChanProcessBase) * std::sqrt(n_w_);
        u_ = -lm * lm * x_hat_;
        x_ = lm * (lm * x_ + w1) + u_ + w2;
        alpha_ = std::pow(lm, 4) * err_var + (lm * lm + 1.0) * n_w_;
        ++round_;
    }

    [[nodiscard]] int64_t round() const { return round_; }
    [[nodiscard]] int64_t slots() const { return round_ * 2; }
    [[nodiscard]] double state() const { return x_; }
    [[nodiscard]] double state_sq() const { return x_ * x_; }
    [[nodiscard]] double estimate() const { return x_hat_; }
    [[nodiscard]] double control() const { return u_; }
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double sensor_tx() const { return sensor_tx_; }
    [[nodiscard]] double relay_tx(size_t i) const { return relay_tx_[i]; }
    [[nodiscard]] double declared_sensor_power() const { return 2.0 * topo_.sensor_power; }
    [[nodiscard]] double declared_relay_power(size_t i) const { return 2.0 * powers_[i]; }

private:
    Parallel topo_;
    std::vector<double> powers_;
    double lambda_;
    double n_w_;
    int64_t round_ = 0;
    double x_;
    double x_hat_ = 0.0;
    double u_ = 0.0;
    double alpha_;
    double sensor_tx_ = 0.0;
    std::vector<double> relay_tx_;
};

// =============================================================================
// Time-sharing scheme for vector plants
// =============================================================================

/// Scalar-channel time sharing. Two operating modes:
///  * 2-D plants in real Jordan form (diagonal or one coupled block): one
///    round = 2 slots; x2 is sent first with same-slot control, the
///    round-start x1 is sent second with the delay- and coupling-compensated
///    control. The exact joint covariance is tracked and shared by sensor and
///    controller for power scaling.
///  * diagonal n-D plants: a proportional schedule sends the current value of
///    one mode per slot with same-slot control u_m = -lambda_m x-hat_m.
/// The channel is parameterized by its capacity C: unit transmit power and
/// noise 1/(2^{2C}-1), so each transmission contracts the sent component's
/// variance by 2^{-2C}.
class TimeshareScheme {
public:
    TimeshareScheme(const PlantModel& plant, double capacity,
                    const std::vector<double>& schedule_fractions)
        : capacity_(capacity) {
        const int n = plant.dim();
        if (capacity <= 0.0) throw std::invalid_argument("TimeshareScheme: capacity <= 0");
        // verify the schedule against the plant's mode decomposition
        const auto modes = mode_decomposition(plant);
        std::vector<double> mode_fracs;
        for (const auto& m : modes)
            for (int i = 0; i < m.multiplicity; ++i) mode_fracs.push_back(m.time_fraction);
        if (schedule_fractions.size() != mode_fracs.size())
            throw std::invalid_argument("TimeshareScheme: schedule does not match mode list");
        // compare as multisets up to tolerance
        auto a = schedule_fractions;
        auto b = mode_fracs;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > 1e-9)
                throw std::invalid_argument("TimeshareScheme: schedule does not match mode list");

        noise_var_ = 1.0 / (std::pow(2.0, 2.0 * capacity) - 1.0);
        contraction_ = std::pow(2.0, -2.0 * capacity);

        lambda_.resize(size_t(n));
        nw_.resize(size_t(n));
        for (int i = 0; i < n; ++i) {
            lambda_[size_t(i)] = plant.a_matrix(i, i);
            nw_[size_t(i)] = plant.process_noise(i, i);
        }
        bool diag = true;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && plant.a_matrix(i, j) != 0.0) diag = false;

        if (n == 2 && !diag) {
            if (plant.a_matrix(1, 0) != 0.0 || plant.a_matrix(0, 1) == 0.0)
                throw std::invalid_argument(
                    "TimeshareScheme: 2-D plants must be upper-triangular real Jordan");
            coupled_ = true;
            coupling_ = plant.a_matrix(0, 1);
        } else if (!diag) {
            throw std::invalid_argument("TimeshareScheme: n-D plants must be diagonal");
        }

        x_.assign(size_t(n), 0.0);
        if (coupled_) {
            cov11_ = plant.init_cov(0, 0);
            cov22_ = plant.init_cov(1, 1);
            cov12_ = plant.init_cov(0, 1);
        } else {
            var_.resize(size_t(n));
            for (int i = 0; i < n; ++i) var_[size_t(i)] = plant.init_cov(i, i);
            build_schedule(schedule_fractions);
        }
        init_var_ = plant.init_cov.trace();
    }

    /// Draw the initial state (modes independent; coupled case uses the
    /// diagonal of the initial covariance).
    template <class Noise>
    void init_state(Noise&& noise) {
        for (size_t m = 0; m < x_.size(); ++m) {
            const double v = coupled_ ? (m == 0 ? cov11_ : cov22_) : var_[m];
            x_[m] = noise.normal(~uint64_t(0), kChanProcessBase + uint32_t(m)) * std::sqrt(v);
        }
    }

    /// Advance one slot (coupled 2-D advances one two-slot round).
    template <class Noise>
    void step(Noise&& noise) {
        if (coupled_) step_pair(noise);
        else step_diag(noise);
    }

    [[nodiscard]] int64_t slots() const { return slot_; }
    [[nodiscard]] double state_sq() const {
        double s = 0.0;
        for (double v : x_) s += v * v;
        return s;
    }
    [[nodiscard]] double ledger_total() const {
        if (coupled_) return cov11_ + cov22_;
        double s = 0.0;
        for (double v : var_) s += v;
        return s;
    }
    [[nodiscard]] double ledger_mode(size_t m) const {
        if (coupled_) return m == 0 ? cov11_ : cov22_;
        return var_[m];
    }
    [[nodiscard]] double init_var() const { return init_var_; }
    [[nodiscard]] double component(size_t m) const { return x_[m]; }
    [[nodiscard]] bool coupled() const { return coupled_; }
    [[nodiscard]] int round_length() const {
        return coupled_ ? 2 : int(schedule_.size());
    }

private:
    void build_schedule(const std::vector<double>& fractions) {
        // smallest period q <= 64 with near-integer mode quotas, then a
        // largest-remainder apportionment spread round-robin
        const size_t n = fractions.size();
        int q = int(n);
        for (int cand = int(n); cand <= 64; ++cand) {
            bool ok = true;
            for (double f : fractions) {
                const double c = f * cand;
                if (std::abs(c - std::round(c)) > 1e-6) ok = false;
            }
            if (ok) {
                q = cand;
                break;
            }
        }
        std::vector<int> quota(n);
        int assigned = 0;
        for (size_t m = 0; m < n; ++m) {
            quota[m] = std::max(1, int(std::round(fractions[m] * q)));
            assigned += quota[m];
        }
        while (assigned > q) {  // trim overshoot from the largest quota
            auto it = std::max_element(quota.begin(), quota.end());
            --*it;
            --assigned;
        }
        while (assigned < q) {
            auto it = std::min_element(quota.begin(), quota.end());
            ++*it;
            ++assigned;
        }
        schedule_.clear();
        std::vector<double> credit(n, 0.0);
        for (int s = 0; s < q; ++s) {
            for (size_t m = 0; m < n; ++m) credit[m] += double(quota[m]) / q;
            size_t pick = 0;
            for (size_t m = 1; m < n; ++m)
                if (credit[m] > credit[pick]) pick = m;
            credit[pick] -= 1.0;
            schedule_.push_back(pick);
        }
    }

    template <class Noise>
    void step_diag(Noise&& noise) {
        const size_t m = schedule_[size_t(slot_ % int64_t(schedule_.size()))];
        const uint64_t s = uint64_t(slot_);
        // transmit the current value of mode m, MMSE-estimate, control in-slot
        const double xm = x_[m];
        const double vm = var_[m];
        double x_hat = 0.0;
        if (vm > 0.0) {
            const double tx = std::sqrt(1.0 / vm) * xm;
            const double r = tx + noise.normal(s, kChanCtrl) * std::sqrt(noise_var_);
            x_hat = std::sqrt(vm) / (1.0 + noise_var_) * r;
        }
        for (size_t i = 0; i < x_.size(); ++i) {
            const double w =
                noise.normal(s, kChanProcessBase + uint32_t(i)) * std::sqrt(nw_[i]);
            if (i == m) {
                x_[i] = lambda_[i] * (x_[i] - x_hat) + w;
                var_[i] = lambda_[i] * lambda_[i] * contraction_ * var_[i] + nw_[i];
            } else {
                x_[i] = lambda_[i] * x_[i] + w;
                var_[i] = lambda_[i] * lambda_[i] * var_[i] + nw_[i];
            }
        }
        ++slot_;
    }

    template <class Noise>
    void step_pair(Noise&& noise) {
        const double l1 = lambda_[0], l2 = lambda_[1];
        const double c = coupling_;
        const uint64_t s = uint64_t(slot_);
        const double n1 = nw_[0], n2 = nw_[1];

        // slot t: current x2, same-slot control on mode 2
        double x2h = 0.0;
        if (cov22_ > 0.0) {
            const double tx = std::sqrt(1.0 / cov22_) * x_[1];
            const double r = tx + noise.normal(s, kChanCtrl) * std::sqrt(noise_var_);
            x2h = std::sqrt(cov22_) / (1.0 + noise_var_) * r;
        }
        const double x1_old = x_[0];
        const double e2 = x_[1] - x2h;
        const double w2a = noise.normal(s, kChanProcessBase + 1) * std::sqrt(n2);
        const double w1a = noise.normal(s, kChanProcessBase) * std::sqrt(n1);
        const double x2_mid = l2 * e2 + w2a;
        const double x1_mid = l1 * x_[0] + c * x_[1] + w1a;

        // slot t+1: the round-start x1, delay- and coupling-compensated control
        double x1h = 0.0;
        if (cov11_ > 0.0) {
            const double tx = std::sqrt(1.0 / cov11_) * x1_old;
            const double r = tx + noise.normal(s + 1, kChanCtrl) * std::sqrt(noise_var_);
            x1h = std::sqrt(cov11_) / (1.0 + noise_var_) * r;
        }
        const double w1b = noise.normal(s + 1, kChanProcessBase) * std::sqrt(n1);
        const double w2b = noise.normal(s + 1, kChanProcessBase + 1) * std::sqrt(n2);
        const double u1 = -l1 * l1 * x1h - l1 * c * x2h;
        x_[0] = l1 * x1_mid + c * x2_mid + u1 + w1b;
        x_[1] = l2 * x2_mid + w2b;

        // exact covariance ledger (errors e1, e2 from own-transmission MMSE)
        const double ve1 = contraction_ * cov11_;
        const double ve2 = contraction_ * cov22_;
        const double ce12 = contraction_ * contraction_ * cov12_;
        const double cross = l1 * c + c * l2;  // coefficient of e2 in x1'
        const double new11 = l1 * l1 * l1 * l1 * ve1 + 2.0 * l1 * l1 * cross * ce12 +
                             cross * cross * ve2 + (l1 * l1 + 1.0) * n1 + c * c * n2;
        const double new12 =
            l1 * l1 * l2 * l2 * ce12 + cross * l2 * l2 * ve2 + c * l2 * n2;
        const double new22 = l2 * l2 * l2 * l2 * ve2 + (l2 * l2 + 1.0) * n2;
        cov11_ = new11;
        cov12_ = new12;
        cov22_ = new22;
        slot_ += 2;
    }

    double capacity_;
    double noise_var_ = 1.0;
    double contraction_ = 1.0;
    bool coupled_ = false;
    double coupling_ = 0.0;
    std::vector<double> lambda_, nw_;
    std::vector<size_t> schedule_;
    int64_t slot_ = 0;
    std::vector<double> x_;
    std::vector<double> var_;                      // diagonal ledger
    double cov11_ = 0.0, cov12_ = 0.0, cov22_ = 0.0;  // coupled ledger
    double init_var_ = 0.0;
};

}  // namespace relaynet

#pragma once

// =============================================================================
// relaynet - Common numeric types
// =============================================================================
// Rate (bits per channel use) plus the small numeric helpers shared by the
// bound formulas. All rates in this library are base-2 logarithms.
// =============================================================================

#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>
#include <string>

namespace relaynet {

/// A stabilization / communication rate in bits per channel use.
/// Non-negative; +infinity represents degenerate noiseless limits.
class Rate {
public:
    constexpr Rate() = default;

    explicit Rate(double bits) : bits_(bits) {
        if (std::isnan(bits)) {
            throw std::invalid_argument("Rate: NaN");
        }
        if (bits < 0.0) {
            throw std::invalid_argument("Rate: negative (" + std::to_string(bits) + ")");
        }
    }

    [[nodiscard]] static Rate infinity() {
        return Rate(std::numeric_limits<double>::infinity());
    }

    [[nodiscard]] double bits() const { return bits_; }
    [[nodiscard]] bool is_infinite() const { return std::isinf(bits_); }

    auto operator<=>(const Rate&) const = default;

private:
    double bits_ = 0.0;
};

/// log2(1+x) for x >= 0; maps x = +inf to +inf.
inline double log2_1p(double x) {
    if (std::isinf(x)) return std::numeric_limits<double>::infinity();
    return std::log2(1.0 + x);
}

/// Clamp tiny negatives produced by float cancellation to zero.
inline double clamp_nonneg(double x, double tol = 1e-15) {
    return (x < 0.0 && x > -tol) ? 0.0 : x;
}

inline constexpr double kTinyPower = 0.0;  // powers compare exactly against 0

}  // namespace relaynet

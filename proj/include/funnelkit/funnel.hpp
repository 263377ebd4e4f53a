#pragma once

#include <string>
#include <string_view>

#include "funnelkit/matrix.hpp"

namespace funnelkit {

enum class FunnelFamily {
    /// ψ(t) = c_amp·e^{-c_rate·t} + c_inf, φ = 1/ψ.
    ExpBoundary,
    /// φ(t) = t / (c_inf·t + c_amp); φ(0) = 0, so the boundary 1/φ has a pole at t = 0.
    RationalPole,
};

std::string_view to_string(FunnelFamily f);
FunnelFamily funnel_family_from_string(std::string_view s);

struct FunnelParams {
    FunnelFamily family = FunnelFamily::ExpBoundary;
    double c_inf = 1.0;
    double c_amp = 0.0;
    double c_rate = 1.0;
};

/// A funnel function φ with exact derivatives up to `max_order()`.
///
/// A spec may carry a positive scale factor so that φ₁ = φ/ρ shares its
/// parameters with φ; the ratio of the two is then ρ up to one rounding.
class FunnelSpec {
public:
    static constexpr int kDefaultMaxOrder = 8;

    /// Throws InvalidArgument when the parameters leave the admissible range.
    static FunnelSpec make(const FunnelParams& params, int max_order = kDefaultMaxOrder);

    [[nodiscard]] const FunnelParams& params() const noexcept { return params_; }
    [[nodiscard]] FunnelFamily family() const noexcept { return params_.family; }
    [[nodiscard]] int max_order() const noexcept { return max_order_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }

    /// Same shape, multiplied by `factor` > 0.
    [[nodiscard]] FunnelSpec scaled(double factor) const;

    [[nodiscard]] double value(double t) const;
    /// (φ(t), φ'(t), ..., φ^{(order)}(t)).
    [[nodiscard]] Vec derivs(double t, int order) const;
    /// Derivatives of the unscaled boundary ψ = 1/φ (ψ may be +inf for the pole family at 0).
    [[nodiscard]] Vec boundary_derivs(double t, int order) const;
    /// 1/φ(t); +inf where φ vanishes.
    [[nodiscard]] double boundary(double t) const;

    /// The infimum of 1/φ for large t, i.e. 1/liminf φ.
    [[nodiscard]] double asymptotic_boundary() const;

private:
    FunnelSpec(FunnelParams p, int max_order, double scale)
        : params_(p), max_order_(max_order), scale_(scale) {}

    FunnelParams params_;
    int max_order_;
    double scale_;
};

/// Sampled bound c in |φ'(s)| ≤ c(1 + φ(s)) over [0, horizon] (1000 + 1 points).
double controller_funnel_constant(const FunnelSpec& f, double horizon, int samples = 1000);

/// A funnel used by the controller only needs the weaker class: positive for s > 0, positive
/// liminf and a finite sampled constant c. Returns that constant; throws when violated.
double validate_controller_funnel(const FunnelSpec& f, double horizon);

} // namespace funnelkit

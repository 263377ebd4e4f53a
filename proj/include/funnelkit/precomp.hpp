#pragma once

#include <span>

#include "funnelkit/design.hpp"

namespace funnelkit {

/// Guard threshold on φ‖e‖ for the gain singularity.
inline constexpr double kGuardThreshold = 1.0 - 1e-8;

/// Indexing of the flattened cascade state z[i][j] ∈ ℝ^m, i = 1…r-1, j = 1…r (both 1-based).
struct CascadeLayout {
    int r = 2;
    std::size_t m = 1;

    [[nodiscard]] int levels() const noexcept { return r - 1; }
    [[nodiscard]] std::size_t size() const noexcept {
        return m * static_cast<std::size_t>(r) * static_cast<std::size_t>(r - 1);
    }
    [[nodiscard]] std::size_t offset(int i, int j) const noexcept {
        return (static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(r) + static_cast<std::size_t>(j - 1)) * m;
    }
    [[nodiscard]] std::span<const double> z(std::span<const double> state, int i, int j) const {
        return state.subspan(offset(i, j), m);
    }
    [[nodiscard]] std::span<double> z(std::span<double> state, int i, int j) const {
        return state.subspan(offset(i, j), m);
    }
    [[nodiscard]] std::span<const double> z(const Vec& state, int i, int j) const {
        return z(std::span<const double>(state), i, j);
    }
    [[nodiscard]] std::span<double> z(Vec& state, int i, int j) const { return z(std::span<double>(state), i, j); }
};

/// h = 1/(1 - φ²‖e‖²). Throws FunnelViolation("funnel constraint violated (gain singularity)")
/// when φ‖e‖ ≥ 1 - 1e-8; `level` is recorded in the exception.
double fp_gain(double phi_t, std::span<const double> err, int level = 1);

/// φ_i(t) for cascade level i: φ₁ for i = 1, φ otherwise.
double level_funnel(const DesignParams& d, int level, double t);

/// Normalized margins 1 - φ_i(t)‖e_i‖ for i = 1…r-1, with e₁ = y - z[1][1] and
/// e_i = z[i-1][1] - z[i][1].
Vec cascade_margins(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y);

/// Right-hand side of the cascade driven by (u, y); writes dstate and returns the gains h₁…h_{r-1}.
/// Throws FunnelViolation naming the offending level.
Vec cascade_rhs(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y,
                std::span<const double> u, std::span<double> dstate);

} // namespace funnelkit

#pragma once

#include <functional>
#include <span>

#include "funnelkit/funnel.hpp"

namespace funnelkit {

/// w = ρ_r(η) with ρ₁(η₁) = η₁ and ρ_k = η_k + γ(ρ_{k-1}), γ(v) = v/(1 - ‖v‖²).
/// `eta` is the stacked (η₁, …, η_r), each of length m. Throws ControllerDomainError
/// ("error vector outside controller domain 𝒟_k") when ‖ρ_k‖ ≥ 1 - 1e-8 for some k.
Vec rho_chain(std::span<const double> eta, std::size_t m);

struct ControllerConfig {
    int r = 1;
    std::size_t m = 1;
    FunnelSpec phi_fc = FunnelSpec::make({});
    /// Surjection N and bijection α of u = N(α(‖w‖²))·w; defaults N(s) = -s, α(s) = 1/(1-s).
    std::function<double(double)> N = [](double s) { return -s; };
    std::function<double(double)> alpha = [](double s) { return 1.0 / (1.0 - s); };
};

/// u = -w/(1 - ‖w‖²) with w = ρ_r(φ_fc(t)·𝐞), 𝐞 = (e, ė, …, e^{(r-1)}).
Vec funnel_control(std::span<const double> errvec, const ControllerConfig& cfg, double t);

/// u = N(α(‖w‖²))·w through the configured hooks.
Vec funnel_control_generic(std::span<const double> errvec, const ControllerConfig& cfg, double t);

/// Normalized controller margins 1 - ‖ρ_k‖ for k = 1…r (no throw; values ≤ 0 mark the domain exit).
Vec controller_margins(std::span<const double> errvec, const ControllerConfig& cfg, double t);

} // namespace funnelkit

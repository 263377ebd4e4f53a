#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funnelkit/design.hpp"
#include "funnelkit/simloop.hpp"

namespace funnelkit {

/// Kronecker lifts of a design to m outputs.
struct KroneckerKit {
    Mat A_hat; // A ⊗ I_m
    Mat P_hat; // P ⊗ I_m
    Mat Q_hat; // Q ⊗ I_m
    Mat P_bar; // p ⊗ I_m, rm×m
    double p_tilde = 0.0;

    // present only when Γ is supplied and ΓΓ̃⁻¹ is symmetric positive definite
    std::optional<Mat> M;        // ΓΓ̃⁻¹
    std::optional<Mat> P_hat1;   // (I_r ⊗ M^{-1/2}) P̂ (I_r ⊗ M^{-1/2})
    std::optional<Mat> Q_hat1;   // (I_r ⊗ M^{-1/2}) Q̂ (I_r ⊗ M^{-1/2})

    static KroneckerKit build(const DesignParams& d, const std::optional<Mat>& gamma = std::nullopt);
};

struct KronIdentityReport {
    /// ‖ÂᵀP̂ + P̂Â + Q̂‖_F
    double lyapunov_residual = 0.0;
    /// ‖P̂P̄ - [p̃I_m; 0; …; 0]‖_F
    double pbar_residual = 0.0;
    /// Scale used for relative residuals: 1 + ‖Q̂‖ + 2‖Â‖‖P̂‖ (Frobenius).
    double scale = 1.0;

    bool gamma_supplied = false;
    bool a3_holds = false;
    /// ‖ÂᵀP̂₁ + P̂₁Â + Q̂₁‖_F, ‖P̂₁P̄ - [p̃M⁻¹; 0; …]‖_F and λ_min(Q̂₁), when (A.3) holds.
    double lyapunov1_residual = 0.0;
    double pbar1_residual = 0.0;
    double q1_min_eig = 0.0;
    bool q1_spd = false;
    std::string message;
};

/// Builds the kit and evaluates its identities. When Γ is supplied but (A.3) fails, the P̂₁
/// construction is refused and `message` says so.
KronIdentityReport kron_identities(const DesignParams& d, const std::optional<Mat>& gamma = std::nullopt);

/// Error coordinates of the cascade along a stored run.
struct ErrorCoordinates {
    std::vector<double> t;
    /// Stacked w = (w_1, …, w_{r-1}), w_i = (w_{i,1}, …, w_{i,r}), per sample.
    std::vector<Vec> w;
    /// ‖x_i‖ per sample and level, with x₁ = w̄ = w_{1,1} - Gw̃ and x_i = w_{i,1}.
    std::vector<Vec> x_norm;
    /// V = wᵀ𝒫w and its lower bound λ_min(𝒫)‖w‖² (NaN when 𝒫 cannot be formed).
    Vec V;
    Vec V_lower;
    /// ‖y - ṽ - z‖ per sample.
    Vec identity_residual;
    /// ‖w̄ - e_{1,1}‖ per sample.
    Vec wbar_residual;
    /// κ̂_i = min_t (1/φ_i(t) - ‖x_i(t)‖), i = 1…r-1.
    Vec kappa;
    /// Time of the last row (where an aborted run stopped).
    double t_end = 0.0;
};

/// Requires white-box access: the plant chain states (closed loop) or the analytic input signal
/// (open loop). Derivatives the cascade table does not provide are taken by finite differences
/// on the sample grid. Throws InvalidArgument("white-box diagnostics require integrator-chain
/// states") when the run carries no plant states.
ErrorCoordinates error_coordinates(const Scenario& sc, const SimResult& sim);

struct MarginReport {
    Vec kappa;
    Vec sup_h;
    Vec sup_w_norm; // per level, sup_t ‖w_i‖
    double sup_V = 0.0;
    double min_V_gap = 0.0; // min_t (V - λ_min(𝒫)‖w‖²), must be ≥ 0 up to rounding
    double max_identity_residual = 0.0;
    bool all_margins_positive = true;
    bool ordering_holds = true; // κ̂_{r-1} < … < κ̂₁
    std::vector<std::string> flags;
};

MarginReport margin_report(const ErrorCoordinates& coords, const SimResult& sim);

} // namespace funnelkit

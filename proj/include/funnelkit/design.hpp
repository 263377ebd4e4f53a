#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funnelkit/funnel.hpp"
#include "funnelkit/matrix.hpp"

namespace funnelkit {

/// Pre-compensator design tuple (a, p, A, P, Q, p̃, ρ, Γ̃, φ, φ₁).
struct DesignParams {
    int r = 0;
    int m = 0;
    Vec a;
    Vec p;
    Mat A;
    Mat P;
    Mat Q;
    double p_tilde = 0.0;
    double rho = 0.0;
    Mat gamma_tilde;
    FunnelSpec phi = FunnelSpec::make({});
    FunnelSpec phi1 = FunnelSpec::make({}); // phi.scaled(1/rho)
};

enum class CheckStatus { Pass, Fail, Boundary, Skipped };

std::string_view to_string(CheckStatus s);

struct ConditionCheck {
    std::string condition; // "A.1" … "A.4"
    std::string name;
    CheckStatus status = CheckStatus::Skipped;
    double measured = 0.0;
    double bound = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<ConditionCheck> checks;

    /// No check failed (boundary counts as a pass with warning).
    [[nodiscard]] bool ok() const;
    [[nodiscard]] bool has_boundary() const;
    [[nodiscard]] const ConditionCheck* find(std::string_view name) const;
    /// Worst status among the checks for one condition label.
    [[nodiscard]] CheckStatus condition_status(std::string_view condition) const;
    [[nodiscard]] std::string to_text() const;
};

/// a_i = C(r,i)·s0^i, the coefficients of (s + s0)^r.
Vec hurwitz_coefficients(int r, double s0);

/// r×r companion matrix: first column -a, ones on the superdiagonal.
Mat companion_matrix(std::span<const double> a);

struct PVector {
    Vec p;
    double p_tilde = 0.0;
};

/// p = (1, -P₄⁻¹P₂ᵀ) and p̃ = P₁ - P₂P₄⁻¹P₂ᵀ from the block split of an SPD P.
PVector derive_p(const Mat& P);

/// min{(ρ-1)/(r-2), ρ/(4ρ²(ρ+1)^{r-2} - 1)}; the first term is dropped for r = 2.
double gain_mismatch_bound(double rho, int r);

/// |‖G‖ - bound| at or below this reports as "boundary".
inline constexpr double kGainBoundaryTol = 1e-12;

ValidationReport validate_design(const DesignParams& params, const std::optional<Mat>& gamma = std::nullopt);

struct DesignRequest {
    int r = 2;
    int m = 1;
    std::optional<double> s0;       // either s0 …
    std::optional<Vec> a;           // … or explicit coefficients
    double rho = 1.5;
    Mat gamma_tilde;
    FunnelParams funnel;
    std::optional<Mat> Q;
    std::optional<Mat> gamma;
};

/// hurwitz_coefficients → companion_matrix → solve_lyapunov → derive_p → funnels → validate_design.
/// Throws InvalidArgument on precondition violations; design-condition failures land in the report.
std::pair<DesignParams, ValidationReport> design(const DesignRequest& req);

} // namespace funnelkit

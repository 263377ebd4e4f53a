#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funnelkit/matrix.hpp"
#include "funnelkit/reference.hpp"

namespace funnelkit {

/// A plant of relative degree r with m inputs and outputs, in Byrnes–Isidori coordinates.
///
/// State layout: x = (ξ₁, …, ξ_r, η) with ξ_j ∈ ℝ^m the integrator chain (ξ_j = y^{(j-1)})
/// and η ∈ ℝ^{n_η} the internal state. The output is ξ₁.
class Plant {
public:
    virtual ~Plant() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::size_t m() const = 0;
    [[nodiscard]] virtual int r() const = 0;
    [[nodiscard]] virtual std::size_t internal_dim() const = 0;
    [[nodiscard]] std::size_t state_dim() const { return m() * static_cast<std::size_t>(r()) + internal_dim(); }

    /// High-frequency gain Γ (m×m).
    [[nodiscard]] virtual const Mat& gamma() const = 0;
    /// Linear chain gains R₁…R_r of the top row.
    [[nodiscard]] virtual const std::vector<Mat>& R() const = 0;

    [[nodiscard]] virtual Vec initial_state() const { return Vec(state_dim(), 0.0); }

    virtual void rhs(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx) const = 0;

    [[nodiscard]] Vec output(std::span<const double> x) const { return chain_state(x, 1); }
    /// ξ_j, 1-based.
    [[nodiscard]] Vec chain_state(std::span<const double> x, int j) const;
    [[nodiscard]] Vec internal_state(std::span<const double> x) const;
};

/// ξ̇_i = ξ_{i+1}, ξ̇_r = Σ R_j ξ_j + Sη + Γu + d_r(t), η̇ = Q_int η + P_int ξ₁ + d_η(t).
class BifPlant final : public Plant {
public:
    /// Throws InvalidArgument on dimension mismatch, when Q_int is not Hurwitz or Γ is not
    /// symmetric and sign definite.
    BifPlant(std::vector<Mat> R, Mat S, Mat Q_int, Mat P_int, Mat Gamma, VectorSignal d_r = {},
             VectorSignal d_eta = {});

    [[nodiscard]] std::string name() const override { return "bif"; }
    [[nodiscard]] std::size_t m() const override { return gamma_.rows(); }
    [[nodiscard]] int r() const override { return static_cast<int>(R_.size()); }
    [[nodiscard]] std::size_t internal_dim() const override { return Q_.rows(); }
    [[nodiscard]] const Mat& gamma() const override { return gamma_; }

    void rhs(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx) const override;

    [[nodiscard]] const std::vector<Mat>& R() const override { return R_; }
    [[nodiscard]] const Mat& S() const noexcept { return S_; }
    [[nodiscard]] const Mat& Q_int() const noexcept { return Q_; }
    [[nodiscard]] const Mat& P_int() const noexcept { return P_; }

    /// Pure integrator chain y^{(r)} = Γu.
    static BifPlant integrator_chain(int r, const Mat& Gamma);

private:
    std::vector<Mat> R_;
    Mat S_;
    Mat Q_;
    Mat P_;
    Mat gamma_;
    VectorSignal d_r_;
    VectorSignal d_eta_;
};

/// The nonlinear two-input two-output tracking plant of relative degree 3:
///   y''' = R₁y + R₂ẏ + R₃ÿ + f(d(t), T) + Γu,
///   T = (ξ₁₁² + exp(ξ₁₁ - |ξ₂₁|), ξ₁₂³ - sin ξ₂₂, η),
///   f = (d₁ + T₁ + η³, d₂ + T₂ - η),
/// with the memory term realized as η̇ = -η + ‖ξ₁‖² tanh(‖ξ₃‖²), η(0) = 0.
class Example2Plant final : public Plant {
public:
    Example2Plant();

    [[nodiscard]] std::string name() const override { return "example2"; }
    [[nodiscard]] std::size_t m() const override { return 2; }
    [[nodiscard]] int r() const override { return 3; }
    [[nodiscard]] std::size_t internal_dim() const override { return 1; }
    [[nodiscard]] const Mat& gamma() const override { return gamma_; }

    void rhs(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx) const override;

    [[nodiscard]] const std::vector<Mat>& R() const override { return R_; }
    [[nodiscard]] const VectorSignal& disturbance() const noexcept { return d_; }

    static VectorSignal default_disturbance();

private:
    std::vector<Mat> R_;
    Mat gamma_;
    VectorSignal d_;
};

/// Result of transforming ẋ = Ax + Bu, y = Cx into Byrnes–Isidori form.
struct LinearBif {
    BifPlant plant;
    int r = 0;
    Mat U; // (ξ; η) = U x
    Mat V; // basis of ker 𝓒
    Mat N;

    [[nodiscard]] Vec to_bif(std::span<const double> x) const { return U * x; }
};

/// Throws InvalidArgument with "no well-defined relative degree", "Γ singular" or
/// "system not minimum phase (internal dynamics not Hurwitz)".
LinearBif linear_to_bif(const Mat& A, const Mat& B, const Mat& C, std::optional<int> declared_r = std::nullopt);

} // namespace funnelkit

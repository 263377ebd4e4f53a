#pragma once

#include <span>
#include <vector>

#include "funnelkit/precomp.hpp"

namespace funnelkit {

/// Total time derivatives of every cascade quantity that can be formed from the cascade state
/// and y alone, for the output derivatives z, ż, …, z^{(jmax)} of z = z[r-1][1].
///
/// Level i (1-based) holds states up to order budget(i) = jmax - (r-1-i) and e_i, g_i, h_i up to
/// budget(i) - 1. Nothing at level 1 ever needs a derivative of y.
class DerivTable {
public:
    DerivTable(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y, int jmax);

    [[nodiscard]] int jmax() const noexcept { return jmax_; }
    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t m() const noexcept { return m_; }
    [[nodiscard]] int budget(int level) const noexcept { return jmax_ - (levels_ - level); }

    /// D^k z[i][j]; throws InternalError outside the budget.
    [[nodiscard]] std::span<const double> z(int i, int j, int k) const;
    [[nodiscard]] std::span<const double> e(int i, int k) const;
    [[nodiscard]] double h(int i, int k) const;
    [[nodiscard]] double g(int i, int k) const;

    /// (z, ż, …, z^{(jmax)}) stacked, each block of length m.
    [[nodiscard]] Vec output() const;

private:
    struct Level {
        int budget = -1;
        // zs[k][j-1] = D^k z[i][j] (only j + k <= r is filled)
        std::vector<std::vector<Vec>> zs;
        std::vector<Vec> es;
        Vec hs;
        Vec gs;
    };

    void build_level(int i, const DesignParams& d, double t, std::span<const double> state,
                     std::span<const double> y);

    int jmax_;
    int levels_;
    int r_;
    std::size_t m_;
    std::vector<Level> L_;
};

/// Stacked (z, ż, …, z^{(jmax)}) with jmax ≤ r-1.
Vec output_derivatives(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y,
                       int jmax);

enum class ClosedFormIndex {
    /// Coefficient of the k-th derivative term is (a_{j-k}, p_{j-k}); follows from the first cascade row.
    JMinusK,
    /// Coefficient (a_{r-k}, p_{r-k}), as printed for the closed formula.
    RMinusK,
};

/// z^{(j)} = z[r-1][j+1] + Σ_{k=0}^{j-1} D^k[(a_c + p_c h_{r-1}) e_{r-1}], with c chosen by `index`.
/// Requires 1 ≤ j ≤ table.jmax().
Vec closed_form_derivative(const DesignParams& d, const DerivTable& table, int j, ClosedFormIndex index);

} // namespace funnelkit

#include "funnelkit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funnelkit/precomp.hpp"
#include "funnelkit/zderiv.hpp"

namespace funnelkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Mat stacked_first_block(double s, const Mat& B, std::size_t r) {
    const std::size_t m = B.rows();
    Mat out(r * m, m);
    out.set_block(0, 0, s * B);
    return out;
}

std::optional<Mat> gain_ratio(const DesignParams& d, const std::optional<Mat>& gamma) {
    if (!gamma) {
        return std::nullopt;
    }
    const Mat M = *gamma * inverse(d.gamma_tilde);
    if (!is_symmetric(M) || !is_spd(M)) {
        return std::nullopt;
    }
    return M;
}

} // namespace

KroneckerKit KroneckerKit::build(const DesignParams& d, const std::optional<Mat>& gamma) {
    const auto m = static_cast<std::size_t>(d.m);
    const auto r = static_cast<std::size_t>(d.r);
    const Mat Im = Mat::identity(m);
    KroneckerKit k;
    k.A_hat = kron(d.A, Im);
    k.P_hat = kron(d.P, Im);
    k.Q_hat = kron(d.Q, Im);
    k.P_bar = kron(Mat::column(d.p), Im);
    k.p_tilde = d.p_tilde;
    if (auto M = gain_ratio(d, gamma)) {
        const Mat T = kron(Mat::identity(r), sym_inv_sqrt(*M));
        k.P_hat1 = T * k.P_hat * T;
        k.Q_hat1 = T * k.Q_hat * T;
        k.M = std::move(M);
    }
    return k;
}

KronIdentityReport kron_identities(const DesignParams& d, const std::optional<Mat>& gamma) {
    const auto r = static_cast<std::size_t>(d.r);
    const auto m = static_cast<std::size_t>(d.m);
    const KroneckerKit k = KroneckerKit::build(d, gamma);
    KronIdentityReport rep;
    const Mat At = k.A_hat.transpose();
    rep.lyapunov_residual = (At * k.P_hat + k.P_hat * k.A_hat + k.Q_hat).frobenius_norm();
    rep.pbar_residual =
        (k.P_hat * k.P_bar - stacked_first_block(k.p_tilde, Mat::identity(m), r)).frobenius_norm();
    rep.scale = 1.0 + k.Q_hat.frobenius_norm() + 2.0 * k.A_hat.frobenius_norm() * k.P_hat.frobenius_norm();
    rep.gamma_supplied = gamma.has_value();
    if (!gamma) {
        rep.message = "Γ not supplied; P̂₁ and Q̂₁ not formed";
        return rep;
    }
    if (!k.P_hat1) {
        rep.message = "(A.3) violated: ΓΓ̃⁻¹ is not symmetric positive definite; P̂₁ construction refused";
        return rep;
    }
    rep.a3_holds = true;
    rep.lyapunov1_residual = (At * *k.P_hat1 + *k.P_hat1 * k.A_hat + *k.Q_hat1).frobenius_norm();
    rep.pbar1_residual =
        (*k.P_hat1 * k.P_bar - stacked_first_block(k.p_tilde, inverse(*k.M), r)).frobenius_norm();
    rep.q1_min_eig = sym_eigenvalues(*k.Q_hat1).front();
    rep.q1_spd = rep.q1_min_eig > 0.0;
    return rep;
}

namespace {

// First derivative of a sampled series (np.gradient: second-order interior and ends).
std::vector<Vec> gradient(const std::vector<double>& t, const std::vector<Vec>& f) {
    const std::size_t n = f.size();
    std::vector<Vec> out(n);
    if (n < 3) {
        for (auto& v : out) {
            v.assign(f.empty() ? 0 : f[0].size(), kNaN);
        }
        return out;
    }
    const std::size_t m = f[0].size();
    for (std::size_t s = 0; s < n; ++s) {
        out[s].assign(m, 0.0);
        double c0 = 0.0, c1 = 0.0, c2 = 0.0;
        std::size_t i0 = 0, i1 = 0, i2 = 0;
        if (s == 0) {
            const double h1 = t[1] - t[0], h2 = t[2] - t[1];
            i0 = 0, i1 = 1, i2 = 2;
            c0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
            c1 = (h1 + h2) / (h1 * h2);
            c2 = -h1 / (h2 * (h1 + h2));
        } else if (s == n - 1) {
            const double h1 = t[n - 2] - t[n - 3], h2 = t[n - 1] - t[n - 2];
            i0 = n - 3, i1 = n - 2, i2 = n - 1;
            c0 = h2 / (h1 * (h1 + h2));
            c1 = -(h1 + h2) / (h1 * h2);
            c2 = (2.0 * h2 + h1) / (h2 * (h1 + h2));
        } else {
            const double hs = t[s] - t[s - 1], hd = t[s + 1] - t[s];
            i0 = s - 1, i1 = s, i2 = s + 1;
            c0 = -hd / (hs * (hs + hd));
            c1 = (hd - hs) / (hs * hd);
            c2 = hs / (hd * (hs + hd));
        }
        for (std::size_t c = 0; c < m; ++c) {
            out[s][c] = c0 * f[i0][c] + c1 * f[i1][c] + c2 * f[i2][c];
        }
    }
    return out;
}

std::vector<Vec> nth_derivative(const std::vector<double>& t, std::vector<Vec> f, int order) {
    for (int q = 0; q < order; ++q) {
        f = gradient(t, f);
    }
    return f;
}

void axpy(Vec& y, double a, std::span<const double> x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += a * x[i];
    }
}

Vec sub(std::span<const double> a, std::span<const double> b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

} // namespace

ErrorCoordinates error_coordinates(const Scenario& sc, const SimResult& sim) {
    const DesignParams& d = sc.design;
    const int r = d.r;
    const int L = r - 1;
    const auto m = static_cast<std::size_t>(d.m);
    const auto rr = static_cast<std::size_t>(r);
    const bool closed = sc.mode == SimMode::ClosedLoop;
    const std::size_t n = sim.rows.size();
    if (sim.cascade_states.size() != n) {
        throw InvalidArgument("run carries no cascade states");
    }
    if (closed && (!sc.plant || sim.plant_states.size() != n ||
                   (n > 0 && sim.plant_states[0].size() != sc.plant->state_dim()))) {
        throw InvalidArgument("white-box diagnostics require integrator-chain states");
    }

    const Mat Gamma = closed ? sc.plant->gamma() : d.gamma_tilde;
    const std::vector<Mat> R = closed ? sc.plant->R() : std::vector<Mat>(rr, Mat(m, m));
    const Mat M = Gamma * inverse(d.gamma_tilde);
    const Mat G = Mat::identity(m) - M;
    const CascadeLayout lay{r, m};

    ErrorCoordinates ec;
    ec.t.reserve(n);
    for (const auto& row : sim.rows) {
        ec.t.push_back(row[0]);
    }
    ec.t_end = n ? ec.t.back() : 0.0;

    // y^{(k)} and D^q z[i][1] (analytic within the table budget, NaN otherwise), h₁, per sample.
    std::vector<std::vector<Vec>> yd(n);
    std::vector<std::vector<std::vector<Vec>>> zd1(n); // [s][i-1][q]
    std::vector<double> h1(n, kNaN);
    for (std::size_t s = 0; s < n; ++s) {
        const double t = ec.t[s];
        for (int k = 0; k < r; ++k) {
            if (closed) {
                yd[s].push_back(sc.plant->chain_state(sim.plant_states[s], k + 1));
            } else {
                yd[s].push_back(sc.y_signal.deriv(t, k));
            }
        }
        zd1[s].assign(static_cast<std::size_t>(L), std::vector<Vec>(rr, Vec(m, kNaN)));
        try {
            const DerivTable tab(d, t, sim.cascade_states[s], yd[s][0], r - 1);
            for (int i = 1; i <= L; ++i) {
                for (int q = 0; q <= tab.budget(i); ++q) {
                    const auto v = tab.z(i, 1, q);
                    zd1[s][static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(q)].assign(v.begin(), v.end());
                }
            }
            h1[s] = tab.h(1, 0);
        } catch (const GuardViolation&) {
            for (int i = 1; i <= L; ++i) {
                const auto v = lay.z(sim.cascade_states[s], i, 1);
                zd1[s][static_cast<std::size_t>(i - 1)][0].assign(v.begin(), v.end());
            }
        }
    }

    // v_{k,1}^{(q)} for k = 2…L, q = 0…r-2: analytic when q ≤ k-1, finite differences otherwise.
    auto vk1 = [&](std::size_t s, int k, int q) -> Vec {
        return sub(zd1[s][static_cast<std::size_t>(k - 2)][static_cast<std::size_t>(q)],
                   zd1[s][static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(q)]);
    };
    std::vector<std::vector<std::vector<Vec>>> vk1_fd(static_cast<std::size_t>(L + 1)); // [k][q][s]
    for (int k = 2; k <= L; ++k) {
        std::vector<Vec> base(n);
        for (std::size_t s = 0; s < n; ++s) {
            base[s] = vk1(s, k, 0);
        }
        auto& per_q = vk1_fd[static_cast<std::size_t>(k)];
        per_q.resize(rr);
        for (int q = k; q <= r - 2; ++q) {
            per_q[static_cast<std::size_t>(q)] = nth_derivative(ec.t, base, q);
        }
    }
    auto vk1_deriv = [&](std::size_t s, int k, int q) -> Vec {
        if (q <= k - 1) {
            return vk1(s, k, q);
        }
        return vk1_fd[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)][s];
    };

    // c_l = (a_l + p_l h₁) v_{1,1}, l = 1…r-2, and its derivatives by finite differences.
    std::vector<std::vector<std::vector<Vec>>> c_fd(rr); // [l][q][s]
    for (int l = 1; l <= r - 2; ++l) {
        std::vector<Vec> base(n);
        for (std::size_t s = 0; s < n; ++s) {
            const Vec e11 = sub(yd[s][0], lay.z(sim.cascade_states[s], 1, 1));
            base[s] = Vec(m, 0.0);
            axpy(base[s], d.a[static_cast<std::size_t>(l - 1)] + d.p[static_cast<std::size_t>(l - 1)] * h1[s], e11);
        }
        auto& per_q = c_fd[static_cast<std::size_t>(l)];
        per_q.push_back(base);
        for (int q = 1; q <= r - 2; ++q) {
            per_q.push_back(gradient(ec.t, per_q.back()));
        }
    }

    std::optional<Mat> P1;
    double lmin = kNaN;
    {
        const KroneckerKit kit = KroneckerKit::build(d, Gamma);
        if (kit.P_hat1) {
            P1 = kit.P_hat1;
            lmin = std::min(sym_eigenvalues(*kit.P_hat1).front(), sym_eigenvalues(kit.P_hat).front());
        }
    }
    const Mat P_hat = kron(d.P, Mat::identity(m));

    ec.kappa.assign(static_cast<std::size_t>(L), std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < n; ++s) {
        const auto zs = std::span<const double>(sim.cascade_states[s]);
        // e_{1,j} and ṽ^{(k)}
        std::vector<Vec> e1(rr);
        for (int j = 1; j <= r; ++j) {
            if (j < r) {
                e1[static_cast<std::size_t>(j - 1)] = sub(yd[s][static_cast<std::size_t>(j - 1)], lay.z(zs, 1, j));
            } else {
                e1[rr - 1] = sub(yd[s][rr - 1], M * lay.z(zs, 1, r));
            }
        }
        std::vector<Vec> vt(rr);
        for (std::size_t k = 0; k < rr; ++k) {
            vt[k] = sub(yd[s][k], zd1[s][static_cast<std::size_t>(L - 1)][k]);
        }
        // v_{1,j}
        std::vector<Vec> v1(rr);
        v1[0] = e1[0];
        for (int j = 2; j <= r; ++j) {
            Vec v = e1[static_cast<std::size_t>(j - 1)];
            for (int k = 1; k <= j - 1; ++k) {
                const Vec Rv = R[static_cast<std::size_t>(r - j + k)] * vt[static_cast<std::size_t>(k - 1)];
                axpy(v, -1.0, Rv);
            }
            v1[static_cast<std::size_t>(j - 1)] = std::move(v);
        }
        // w
        Vec w(rr * m * static_cast<std::size_t>(L), 0.0);
        auto wblock = [&](int i, int j) {
            return std::span<double>(w).subspan(((static_cast<std::size_t>(i - 1) * rr) + static_cast<std::size_t>(j - 1)) * m,
                                                m);
        };
        for (int i = 2; i <= L; ++i) {
            for (int j = 1; j <= r; ++j) {
                const Vec v = sub(lay.z(zs, i - 1, j), lay.z(zs, i, j));
                std::copy(v.begin(), v.end(), wblock(i, j).begin());
            }
        }
        std::copy(v1[rr - 1].begin(), v1[rr - 1].end(), wblock(1, r).begin());
        for (int j = 1; j <= r - 1; ++j) {
            Vec acc(m, 0.0);
            for (int k = 2; k <= L; ++k) {
                axpy(acc, 1.0, vk1_deriv(s, k, r - 1 - j));
            }
            for (int k = j; k <= r - 2; ++k) {
                axpy(acc, -1.0, c_fd[static_cast<std::size_t>(r - k - 1)][static_cast<std::size_t>(k - j)][s]);
            }
            Vec v = v1[static_cast<std::size_t>(r - j - 1)];
            axpy(v, 1.0, G * acc);
            std::copy(v.begin(), v.end(), wblock(1, r - j).begin());
        }
        // w̄ and x_i
        Vec wt(m, 0.0);
        for (int i = 2; i <= L; ++i) {
            axpy(wt, 1.0, wblock(i, 1));
        }
        Vec wbar(wblock(1, 1).begin(), wblock(1, 1).end());
        axpy(wbar, -1.0, G * wt);
        Vec xn(static_cast<std::size_t>(L));
        xn[0] = norm(wbar);
        for (int i = 2; i <= L; ++i) {
            xn[static_cast<std::size_t>(i - 1)] = norm(wblock(i, 1));
        }
        const double t = ec.t[s];
        for (int i = 1; i <= L; ++i) {
            const double phi_i = level_funnel(d, i, t);
            if (phi_i > 0.0) {
                auto& kp = ec.kappa[static_cast<std::size_t>(i - 1)];
                kp = std::min(kp, 1.0 / phi_i - xn[static_cast<std::size_t>(i - 1)]);
            }
        }
        ec.x_norm.push_back(std::move(xn));
        ec.wbar_residual.push_back(norm(sub(wbar, e1[0])));

        // y - ṽ - z with ṽ = Σ v_{i,1}
        Vec vsum = sub(yd[s][0], lay.z(zs, 1, 1));
        for (int i = 2; i <= L; ++i) {
            axpy(vsum, 1.0, sub(lay.z(zs, i - 1, 1), lay.z(zs, i, 1)));
        }
        Vec idr = sub(yd[s][0], vsum);
        axpy(idr, -1.0, lay.z(zs, L, 1));
        ec.identity_residual.push_back(norm(idr));

        if (P1) {
            const std::size_t bl = rr * m;
            const std::span<const double> ws(w);
            double V = dot(ws.subspan(0, bl), *P1 * ws.subspan(0, bl));
            for (int i = 2; i <= L; ++i) {
                const auto wi = ws.subspan(static_cast<std::size_t>(i - 1) * bl, bl);
                V += dot(wi, P_hat * wi);
            }
            ec.V.push_back(V);
            ec.V_lower.push_back(lmin * norm_sq(w));
        } else {
            ec.V.push_back(kNaN);
            ec.V_lower.push_back(kNaN);
        }
        ec.w.push_back(std::move(w));
    }
    return ec;
}

MarginReport margin_report(const ErrorCoordinates& coords, const SimResult& sim) {
    MarginReport rep;
    rep.kappa = coords.kappa;
    const std::size_t L = coords.kappa.size();
    rep.sup_w_norm.assign(L, 0.0);
    rep.min_V_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L; ++i) {
        const auto it = sim.summary.find("sup_h_" + std::to_string(i + 1));
        rep.sup_h.push_back(it == sim.summary.end() ? kNaN : it->second);
    }
    for (std::size_t s = 0; s < coords.w.size(); ++s) {
        const auto& w = coords.w[s];
        const std::size_t bl = L ? w.size() / L : 0;
        for (std::size_t i = 0; i < L; ++i) {
            rep.sup_w_norm[i] = std::max(rep.sup_w_norm[i], norm(std::span<const double>(w).subspan(i * bl, bl)));
        }
        if (std::isfinite(coords.V[s])) {
            rep.sup_V = std::max(rep.sup_V, coords.V[s]);
            rep.min_V_gap = std::min(rep.min_V_gap, coords.V[s] - coords.V_lower[s]);
        }
        rep.max_identity_residual = std::max(rep.max_identity_residual, coords.identity_residual[s]);
    }
    for (std::size_t i = 0; i < L; ++i) {
        if (!(rep.kappa[i] > 0.0)) {
            rep.all_margins_positive = false;
            rep.flags.push_back("kappa_" + std::to_string(i + 1) + " <= 0");
        }
        if (!std::isfinite(rep.sup_h[i])) {
            rep.flags.push_back("sup h_" + std::to_string(i + 1) + " not finite");
        }
        if (i + 1 < L && !(rep.kappa[i + 1] < rep.kappa[i])) {
            rep.ordering_holds = false;
        }
    }
    if (!rep.ordering_holds) {
        rep.flags.push_back("empirical margins not strictly decreasing along the cascade");
    }
    return rep;
}

} // namespace funnelkit

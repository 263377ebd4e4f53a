#include "funnelkit/zderiv.hpp"

#include <string>

#include "funnelkit/combinatorics.hpp"

namespace funnelkit {

namespace {

[[noreturn]] void unavailable(const std::string& what) {
    throw InternalError("derivative recursion requested unavailable " + what);
}

} // namespace

DerivTable::DerivTable(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y,
                       int jmax)
    : jmax_(jmax), levels_(d.r - 1), r_(d.r), m_(static_cast<std::size_t>(d.m)) {
    if (jmax < 0 || jmax > d.r - 1) {
        throw InvalidArgument("output derivative order must lie in [0, r-1]");
    }
    const CascadeLayout lay{d.r, m_};
    if (state.size() != lay.size() || y.size() != m_) {
        throw InvalidArgument("cascade: dimension mismatch");
    }
    L_.resize(static_cast<std::size_t>(levels_));
    for (int i = 1; i <= levels_; ++i) {
        build_level(i, d, t, state, y);
    }
}

void DerivTable::build_level(int i, const DesignParams& d, double t, std::span<const double> state,
                             std::span<const double> y) {
    const CascadeLayout lay{d.r, m_};
    Level& lv = L_[static_cast<std::size_t>(i - 1)];
    lv.budget = budget(i);
    if (lv.budget < 0) {
        return;
    }
    const int B = lv.budget;
    const FunnelSpec& fs = i == 1 ? d.phi1 : d.phi;
    const Vec phi = fs.derivs(t, std::max(B - 1, 0));

    lv.zs.assign(static_cast<std::size_t>(B) + 1, std::vector<Vec>(static_cast<std::size_t>(r_)));
    for (int j = 1; j <= r_; ++j) {
        const auto zij = lay.z(state, i, j);
        lv.zs[0][static_cast<std::size_t>(j - 1)].assign(zij.begin(), zij.end());
    }

    // D^k of the input v_i.
    auto dv = [&](int k) -> std::span<const double> {
        if (i == 1) {
            if (k != 0) {
                unavailable("y derivative");
            }
            return y;
        }
        return z(i - 1, 1, k);
    };

    for (int k = 0; k <= B; ++k) {
        if (k >= 1) {
            // States of order k from e, h of orders < k.
            const int km = k - 1;
            for (int j = 1; j + k <= r_; ++j) {
                Vec out(m_, 0.0);
                const double aj = d.a[static_cast<std::size_t>(j - 1)];
                const double pj = d.p[static_cast<std::size_t>(j - 1)];
                const Vec& next = lv.zs[static_cast<std::size_t>(km)][static_cast<std::size_t>(j)];
                for (std::size_t c = 0; c < m_; ++c) {
                    double s = 0.0;
                    for (int l = 0; l <= km; ++l) {
                        s += binomial(km, l) * lv.hs[static_cast<std::size_t>(l)] *
                             lv.es[static_cast<std::size_t>(km - l)][c];
                    }
                    out[c] = aj * lv.es[static_cast<std::size_t>(km)][c] + pj * s + next[c];
                }
                lv.zs[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)] = std::move(out);
            }
        }
        if (k == B) {
            break;
        }
        // e, g, h of order k.
        const auto v = dv(k);
        Vec e(m_);
        const Vec& z1 = lv.zs[static_cast<std::size_t>(k)][0];
        for (std::size_t c = 0; c < m_; ++c) {
            e[c] = v[c] - z1[c];
        }
        lv.es.push_back(std::move(e));
        if (k == 0) {
            const double h = fp_gain(phi[0], lv.es[0], i);
            lv.hs.push_back(h);
            lv.gs.push_back(1.0 / h);
            continue;
        }
        // D^k g = -Σ_l C(k,l) D^l(φ²) D^{k-l}(‖e‖²).
        double gk = 0.0;
        for (int l = 0; l <= k; ++l) {
            double phi2 = 0.0;
            for (int q = 0; q <= l; ++q) {
                phi2 += binomial(l, q) * phi[static_cast<std::size_t>(q)] * phi[static_cast<std::size_t>(l - q)];
            }
            const int n = k - l;
            double e2 = 0.0;
            for (int q = 0; q <= n; ++q) {
                e2 += binomial(n, q) * dot(lv.es[static_cast<std::size_t>(q)], lv.es[static_cast<std::size_t>(n - q)]);
            }
            gk -= binomial(k, l) * phi2 * e2;
        }
        lv.gs.push_back(gk);
        // D^k h = -h Σ_{l<k} C(k,l) D^l h D^{k-l} g.
        double s = 0.0;
        for (int l = 0; l < k; ++l) {
            s += binomial(k, l) * lv.hs[static_cast<std::size_t>(l)] * lv.gs[static_cast<std::size_t>(k - l)];
        }
        lv.hs.push_back(-lv.hs[0] * s);
    }
}

std::span<const double> DerivTable::z(int i, int j, int k) const {
    if (i < 1 || i > levels_ || j < 1 || j > r_ || k < 0) {
        throw InvalidArgument("cascade index out of range");
    }
    const Level& lv = L_[static_cast<std::size_t>(i - 1)];
    if (k > lv.budget || j + k > r_) {
        unavailable("state derivative");
    }
    return lv.zs[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)];
}

std::span<const double> DerivTable::e(int i, int k) const {
    if (i < 1 || i > levels_ || k < 0) {
        throw InvalidArgument("cascade index out of range");
    }
    const Level& lv = L_[static_cast<std::size_t>(i - 1)];
    if (static_cast<std::size_t>(k) >= lv.es.size()) {
        unavailable("error derivative");
    }
    return lv.es[static_cast<std::size_t>(k)];
}

double DerivTable::h(int i, int k) const {
    (void)e(i, k);
    return L_[static_cast<std::size_t>(i - 1)].hs[static_cast<std::size_t>(k)];
}

double DerivTable::g(int i, int k) const {
    (void)e(i, k);
    return L_[static_cast<std::size_t>(i - 1)].gs[static_cast<std::size_t>(k)];
}

Vec DerivTable::output() const {
    Vec out;
    out.reserve(m_ * static_cast<std::size_t>(jmax_ + 1));
    for (int k = 0; k <= jmax_; ++k) {
        const auto zk = z(levels_, 1, k);
        out.insert(out.end(), zk.begin(), zk.end());
    }
    return out;
}

Vec output_derivatives(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y,
                       int jmax) {
    return DerivTable(d, t, state, y, jmax).output();
}

Vec closed_form_derivative(const DesignParams& d, const DerivTable& table, int j, ClosedFormIndex index) {
    if (j < 1 || j > table.jmax()) {
        throw InvalidArgument("closed-form derivative order out of range");
    }
    const int L = table.levels();
    const std::size_t m = table.m();
    const auto top = table.z(L, j + 1, 0);
    Vec out(top.begin(), top.end());
    for (int k = 0; k < j; ++k) {
        const int c = index == ClosedFormIndex::JMinusK ? j - k : d.r - k;
        const double ac = d.a[static_cast<std::size_t>(c - 1)];
        const double pc = d.p[static_cast<std::size_t>(c - 1)];
        for (std::size_t q = 0; q < m; ++q) {
            double s = 0.0;
            for (int l = 0; l <= k; ++l) {
                s += binomial(k, l) * table.h(L, l) * table.e(L, k - l)[q];
            }
            out[q] += ac * table.e(L, k)[q] + pc * s;
        }
    }
    return out;
}

} // namespace funnelkit

#include "funnelkit/precomp.hpp"

#include <cmath>

namespace funnelkit {

double fp_gain(double phi_t, std::span<const double> err, int level) {
    const double s = std::abs(phi_t) * norm(err);
    if (!(s < kGuardThreshold)) {
        throw FunnelViolation("funnel constraint violated (gain singularity)", level, 1.0 - s);
    }
    return 1.0 / (1.0 - s * s);
}

double level_funnel(const DesignParams& d, int level, double t) {
    return level == 1 ? d.phi1.value(t) : d.phi.value(t);
}

namespace {

void check_dims(const DesignParams& d, std::span<const double> state, std::span<const double> y) {
    const CascadeLayout L{d.r, static_cast<std::size_t>(d.m)};
    if (state.size() != L.size() || y.size() != L.m) {
        throw InvalidArgument("cascade: dimension mismatch");
    }
}

} // namespace

Vec cascade_margins(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y) {
    check_dims(d, state, y);
    const CascadeLayout L{d.r, static_cast<std::size_t>(d.m)};
    Vec out(static_cast<std::size_t>(L.levels()));
    Vec e(L.m);
    for (int i = 1; i <= L.levels(); ++i) {
        const auto v = i == 1 ? y : L.z(state, i - 1, 1);
        const auto z1 = L.z(state, i, 1);
        for (std::size_t k = 0; k < L.m; ++k) {
            e[k] = v[k] - z1[k];
        }
        out[static_cast<std::size_t>(i - 1)] = 1.0 - level_funnel(d, i, t) * norm(e);
    }
    return out;
}

Vec cascade_rhs(const DesignParams& d, double t, std::span<const double> state, std::span<const double> y,
                std::span<const double> u, std::span<double> dstate) {
    check_dims(d, state, y);
    const CascadeLayout L{d.r, static_cast<std::size_t>(d.m)};
    if (u.size() != L.m || dstate.size() != L.size()) {
        throw InvalidArgument("cascade: dimension mismatch");
    }
    const Vec gu = d.gamma_tilde * u;
    Vec gains(static_cast<std::size_t>(L.levels()));
    Vec e(L.m);
    const double phi = d.phi.value(t);
    const double phi1 = d.phi1.value(t);
    for (int i = 1; i <= L.levels(); ++i) {
        const auto v = i == 1 ? y : L.z(state, i - 1, 1);
        const auto z1 = L.z(state, i, 1);
        for (std::size_t k = 0; k < L.m; ++k) {
            e[k] = v[k] - z1[k];
        }
        const double h = fp_gain(i == 1 ? phi1 : phi, e, i);
        gains[static_cast<std::size_t>(i - 1)] = h;
        for (int j = 1; j <= d.r; ++j) {
            const double c = d.a[static_cast<std::size_t>(j - 1)] + d.p[static_cast<std::size_t>(j - 1)] * h;
            auto dz = L.z(dstate, i, j);
            for (std::size_t k = 0; k < L.m; ++k) {
                const double next = j < d.r ? L.z(state, i, j + 1)[k] : gu[k];
                dz[k] = c * e[k] + next;
            }
        }
    }
    return gains;
}

} // namespace funnelkit

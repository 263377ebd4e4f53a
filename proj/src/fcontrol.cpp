#include "funnelkit/fcontrol.hpp"

#include <cmath>
#include <limits>

#include "funnelkit/precomp.hpp"

namespace funnelkit {

namespace {

std::size_t chain_length(std::size_t n, std::size_t m) {
    if (m == 0 || n == 0 || n % m != 0) {
        throw InvalidArgument("error vector length must be a positive multiple of m");
    }
    return n / m;
}

} // namespace

Vec rho_chain(std::span<const double> eta, std::size_t m) {
    const std::size_t r = chain_length(eta.size(), m);
    Vec w(eta.begin(), eta.begin() + static_cast<std::ptrdiff_t>(m));
    for (std::size_t k = 1;; ++k) {
        const double nw = norm(w);
        if (!(nw < kGuardThreshold)) {
            throw ControllerDomainError("error vector outside controller domain 𝒟_" + std::to_string(k),
                                        static_cast<int>(k), 1.0 - nw);
        }
        if (k == r) {
            return w;
        }
        const double f = 1.0 / (1.0 - nw * nw);
        for (std::size_t c = 0; c < m; ++c) {
            w[c] = eta[k * m + c] + f * w[c];
        }
    }
}

namespace {

Vec scaled_error(std::span<const double> errvec, const ControllerConfig& cfg, double t) {
    if (errvec.size() != cfg.m * static_cast<std::size_t>(cfg.r)) {
        throw InvalidArgument("error vector must have r·m entries");
    }
    const double phi = cfg.phi_fc.value(t);
    Vec s(errvec.begin(), errvec.end());
    for (auto& v : s) {
        v *= phi;
    }
    return s;
}

} // namespace

Vec funnel_control(std::span<const double> errvec, const ControllerConfig& cfg, double t) {
    Vec w = rho_chain(scaled_error(errvec, cfg, t), cfg.m);
    const double f = -1.0 / (1.0 - norm_sq(w));
    for (auto& v : w) {
        v *= f;
    }
    return w;
}

Vec funnel_control_generic(std::span<const double> errvec, const ControllerConfig& cfg, double t) {
    Vec w = rho_chain(scaled_error(errvec, cfg, t), cfg.m);
    const double f = cfg.N(cfg.alpha(norm_sq(w)));
    for (auto& v : w) {
        v *= f;
    }
    return w;
}

Vec controller_margins(std::span<const double> errvec, const ControllerConfig& cfg, double t) {
    const Vec eta = scaled_error(errvec, cfg, t);
    const std::size_t m = cfg.m;
    const auto r = static_cast<std::size_t>(cfg.r);
    Vec out(r, -std::numeric_limits<double>::infinity());
    Vec w(eta.begin(), eta.begin() + static_cast<std::ptrdiff_t>(m));
    for (std::size_t k = 0; k < r; ++k) {
        if (k > 0) {
            const double n2 = norm_sq(w);
            if (!(n2 < 1.0)) {
                break;
            }
            const double f = 1.0 / (1.0 - n2);
            for (std::size_t c = 0; c < m; ++c) {
                w[c] = eta[k * m + c] + f * w[c];
            }
        }
        out[k] = 1.0 - norm(w);
    }
    return out;
}

} // namespace funnelkit

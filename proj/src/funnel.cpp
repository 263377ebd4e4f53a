#include "funnelkit/funnel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "funnelkit/combinatorics.hpp"

namespace funnelkit {

std::string_view to_string(FunnelFamily f) {
    switch (f) {
    case FunnelFamily::ExpBoundary:
        return "exp-boundary";
    case FunnelFamily::RationalPole:
        return "rational-pole";
    }
    return "?";
}

FunnelFamily funnel_family_from_string(std::string_view s) {
    if (s == "exp-boundary") {
        return FunnelFamily::ExpBoundary;
    }
    if (s == "rational-pole") {
        return FunnelFamily::RationalPole;
    }
    throw InvalidArgument("unknown funnel family '" + std::string(s) + "'");
}

FunnelSpec FunnelSpec::make(const FunnelParams& p, int max_order) {
    if (!std::isfinite(p.c_inf) || !std::isfinite(p.c_amp) || !std::isfinite(p.c_rate)) {
        throw InvalidArgument("funnel parameters must be finite");
    }
    if (p.c_inf <= 0.0) {
        throw InvalidArgument("boundary floor must be positive");
    }
    if (max_order < 1) {
        throw InvalidArgument("funnel smoothness budget must be at least 1");
    }
    switch (p.family) {
    case FunnelFamily::ExpBoundary:
        if (p.c_rate <= 0.0) {
            throw InvalidArgument("decay rate must be positive");
        }
        if (p.c_amp < 0.0) {
            throw InvalidArgument("boundary amplitude must be non-negative");
        }
        break;
    case FunnelFamily::RationalPole:
        if (p.c_amp <= 0.0) {
            throw InvalidArgument("rational-pole funnel needs a positive c_amp");
        }
        break;
    }
    return FunnelSpec(p, max_order, 1.0);
}

FunnelSpec FunnelSpec::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw InvalidArgument("funnel scale factor must be positive");
    }
    return FunnelSpec(params_, max_order_, scale_ * factor);
}

Vec FunnelSpec::boundary_derivs(double t, int order) const {
    if (order > max_order_) {
        throw InvalidArgument("derivative order exceeds funnel smoothness budget");
    }
    Vec psi(static_cast<std::size_t>(order) + 1);
    const auto& p = params_;
    switch (p.family) {
    case FunnelFamily::ExpBoundary: {
        const double ex = p.c_amp * std::exp(-p.c_rate * t);
        double pw = 1.0;
        for (int k = 0; k <= order; ++k) {
            psi[k] = ex * pw;
            pw *= -p.c_rate;
        }
        psi[0] += p.c_inf;
        break;
    }
    case FunnelFamily::RationalPole: {
        if (t <= 0.0) {
            for (auto& v : psi) {
                v = std::numeric_limits<double>::infinity();
            }
            break;
        }
        psi[0] = p.c_inf + p.c_amp / t;
        double term = p.c_amp / t; // a·(-1)^k k! t^{-k-1}
        for (int k = 1; k <= order; ++k) {
            term *= -static_cast<double>(k) / t;
            psi[k] = term;
        }
        break;
    }
    }
    return psi;
}

Vec FunnelSpec::derivs(double t, int order) const {
    if (order > max_order_) {
        throw InvalidArgument("derivative order exceeds funnel smoothness budget");
    }
    if (order < 0) {
        throw InvalidArgument("negative derivative order");
    }
    Vec phi(static_cast<std::size_t>(order) + 1, 0.0);
    const auto& p = params_;
    switch (p.family) {
    case FunnelFamily::ExpBoundary: {
        const Vec psi = boundary_derivs(t, order);
        // Σ_{l=0}^{k} C(k,l) φ^{(l)} ψ^{(k-l)} = 0 for k ≥ 1.
        phi[0] = 1.0 / psi[0];
        for (int k = 1; k <= order; ++k) {
            double s = 0.0;
            for (int l = 0; l < k; ++l) {
                s += binomial(k, l) * phi[l] * psi[k - l];
            }
            phi[k] = -s / psi[0];
        }
        break;
    }
    case FunnelFamily::RationalPole: {
        const double den = p.c_inf * t + p.c_amp;
        phi[0] = t / den;
        // φ = (1/c)(1 - a/(ct + a)); the k-th derivative of -(a/c)(ct+a)^{-1}.
        double term = -(p.c_amp / p.c_inf) / den;
        for (int k = 1; k <= order; ++k) {
            term *= -static_cast<double>(k) * p.c_inf / den;
            phi[k] = term;
        }
        break;
    }
    }
    for (auto& v : phi) {
        v *= scale_;
    }
    return phi;
}

double FunnelSpec::value(double t) const {
    return derivs(t, 0)[0];
}

double FunnelSpec::boundary(double t) const {
    const double v = value(t);
    if (v <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / v;
}

double FunnelSpec::asymptotic_boundary() const {
    return params_.c_inf / scale_;
}

double controller_funnel_constant(const FunnelSpec& f, double horizon, int samples) {
    double c = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double t = horizon * static_cast<double>(k) / samples;
        const Vec d = f.derivs(t, 1);
        c = std::max(c, std::abs(d[1]) / (1.0 + d[0]));
    }
    return c;
}

double validate_controller_funnel(const FunnelSpec& f, double horizon) {
    if (!(horizon > 0.0)) {
        throw InvalidArgument("controller funnel horizon must be positive");
    }
    if (!(f.asymptotic_boundary() > 0.0) || !std::isfinite(f.asymptotic_boundary())) {
        throw InvalidArgument("controller funnel needs a positive liminf");
    }
    for (int k = 1; k <= 1000; ++k) {
        if (!(f.value(horizon * k / 1000.0) > 0.0)) {
            throw InvalidArgument("controller funnel must be positive for t > 0");
        }
    }
    const double c = controller_funnel_constant(f, horizon);
    if (!std::isfinite(c)) {
        throw InvalidArgument("controller funnel derivative bound is not finite");
    }
    return c;
}

} // namespace funnelkit

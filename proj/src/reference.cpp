#include "funnelkit/reference.hpp"

#include <cmath>
#include <string>

namespace funnelkit {

std::string_view to_string(TermKind k) {
    switch (k) {
    case TermKind::Constant:
        return "constant";
    case TermKind::Gaussian:
        return "gaussian";
    case TermKind::Sine:
        return "sine";
    case TermKind::Cosine:
        return "cosine";
    }
    return "?";
}

TermKind term_kind_from_string(std::string_view s) {
    if (s == "constant") {
        return TermKind::Constant;
    }
    if (s == "gaussian") {
        return TermKind::Gaussian;
    }
    if (s == "sine") {
        return TermKind::Sine;
    }
    if (s == "cosine") {
        return TermKind::Cosine;
    }
    throw InvalidArgument("unknown signal term '" + std::string(s) + "'");
}

SignalTerm SignalTerm::constant(double value) {
    SignalTerm s;
    s.kind = TermKind::Constant;
    s.amplitude = value;
    return s;
}

SignalTerm SignalTerm::gaussian(double center, double amplitude, double width) {
    if (!(width > 0.0)) {
        throw InvalidArgument("gaussian width must be positive");
    }
    SignalTerm s;
    s.kind = TermKind::Gaussian;
    s.center = center;
    s.amplitude = amplitude;
    s.width = width;
    return s;
}

SignalTerm SignalTerm::sine(double omega, double amplitude, double phase) {
    SignalTerm s;
    s.kind = TermKind::Sine;
    s.omega = omega;
    s.amplitude = amplitude;
    s.phase = phase;
    return s;
}

SignalTerm SignalTerm::cosine(double omega, double amplitude, double phase) {
    SignalTerm s = sine(omega, amplitude, phase);
    s.kind = TermKind::Cosine;
    return s;
}

namespace {

// d^k/ds^k sin(s) as one of ±sin, ±cos.
double sin_deriv(double s, int k) {
    switch (k % 4) {
    case 0:
        return std::sin(s);
    case 1:
        return std::cos(s);
    case 2:
        return -std::sin(s);
    default:
        return -std::cos(s);
    }
}

} // namespace

double SignalTerm::deriv(double t, int k) const {
    if (k < 0 || k > kMaxSignalOrder) {
        throw InvalidArgument("unsupported signal derivative order");
    }
    switch (kind) {
    case TermKind::Constant:
        return k == 0 ? amplitude : 0.0;
    case TermKind::Gaussian: {
        // d^k/ds^k e^{-s²} = (-1)^k H_k(s) e^{-s²}, physicists' Hermite polynomials.
        const double s = (t - center) / width;
        double h_prev = 1.0;
        double h = 2.0 * s;
        double hk = 1.0;
        if (k == 1) {
            hk = h;
        } else if (k >= 2) {
            for (int n = 1; n < k; ++n) {
                const double next = 2.0 * s * h - 2.0 * n * h_prev;
                h_prev = h;
                h = next;
            }
            hk = h;
        }
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return amplitude * sign * hk * std::exp(-s * s) / std::pow(width, k);
    }
    case TermKind::Sine:
        return amplitude * std::pow(omega, k) * sin_deriv(omega * t + phase, k);
    case TermKind::Cosine:
        return amplitude * std::pow(omega, k) * sin_deriv(omega * t + phase, k + 1);
    }
    return 0.0;
}

double ScalarSignal::deriv(double t, int k) const {
    double s = 0.0;
    for (const auto& term : terms) {
        s += term.deriv(t, k);
    }
    return s;
}

VectorSignal VectorSignal::zero(std::size_t dim) {
    return VectorSignal(std::vector<ScalarSignal>(dim));
}

Vec VectorSignal::deriv(double t, int k) const {
    Vec out(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
        out[i] = components[i].deriv(t, k);
    }
    return out;
}

bool VectorSignal::is_zero() const {
    for (const auto& c : components) {
        for (const auto& term : c.terms) {
            if (term.amplitude != 0.0) {
                return false;
            }
        }
    }
    return true;
}

Vec reference_derivs(const VectorSignal& ref, double t, int order) {
    if (order < 0 || order > kMaxSignalOrder) {
        throw InvalidArgument("unsupported reference derivative order");
    }
    const std::size_t m = ref.dim();
    Vec out(m * static_cast<std::size_t>(order + 1));
    for (int k = 0; k <= order; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            out[static_cast<std::size_t>(k) * m + i] = ref.components[i].deriv(t, k);
        }
    }
    return out;
}

} // namespace funnelkit

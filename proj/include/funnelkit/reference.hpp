#pragma once

#include <string_view>
#include <vector>

#include "funnelkit/matrix.hpp"

namespace funnelkit {

enum class TermKind { Constant, Gaussian, Sine, Cosine };

std::string_view to_string(TermKind k);
TermKind term_kind_from_string(std::string_view s);

/// One analytic term:
///   constant   amplitude
///   gaussian   amplitude·exp(-((t - center)/width)²)
///   sine       amplitude·sin(omega·t + phase)
///   cosine     amplitude·cos(omega·t + phase)
struct SignalTerm {
    TermKind kind = TermKind::Constant;
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;
    double omega = 1.0;
    double phase = 0.0;

    static SignalTerm constant(double value);
    static SignalTerm gaussian(double center, double amplitude = 1.0, double width = 1.0);
    static SignalTerm sine(double omega, double amplitude = 1.0, double phase = 0.0);
    static SignalTerm cosine(double omega, double amplitude = 1.0, double phase = 0.0);

    /// k-th time derivative at t.
    [[nodiscard]] double deriv(double t, int k) const;
};

/// Sum of terms; the empty sum is the zero signal.
struct ScalarSignal {
    std::vector<SignalTerm> terms;

    [[nodiscard]] double value(double t) const { return deriv(t, 0); }
    [[nodiscard]] double deriv(double t, int k) const;
};

/// Vector-valued analytic signal, one ScalarSignal per component.
struct VectorSignal {
    std::vector<ScalarSignal> components;

    VectorSignal() = default;
    explicit VectorSignal(std::vector<ScalarSignal> c) : components(std::move(c)) {}
    static VectorSignal zero(std::size_t dim);

    [[nodiscard]] std::size_t dim() const noexcept { return components.size(); }
    [[nodiscard]] Vec value(double t) const { return deriv(t, 0); }
    [[nodiscard]] Vec deriv(double t, int k) const;
    [[nodiscard]] bool is_zero() const;
};

/// Maximum derivative order served by reference_derivs.
inline constexpr int kMaxSignalOrder = 12;

/// Stacked (y_ref, ẏ_ref, …, y_ref^{(order)}), each block of length dim().
Vec reference_derivs(const VectorSignal& ref, double t, int order);

} // namespace funnelkit

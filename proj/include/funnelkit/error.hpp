#pragma once

#include <stdexcept>
#include <string>

namespace funnelkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configuration, violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class LinAlgError : public Error {
public:
    using Error::Error;
};

/// Raised when a state leaves a funnel (or the controller domain). The integrator treats
/// these as step rejections rather than hard failures.
class GuardViolation : public Error {
public:
    GuardViolation(const std::string& what, int level, double margin)
        : Error(what), level_(level), margin_(margin) {}
    [[nodiscard]] int level() const noexcept { return level_; }
    /// Normalized margin 1 - φ‖e‖ (or 1 - ‖ρ_k‖) at the offending evaluation.
    [[nodiscard]] double margin() const noexcept { return margin_; }

private:
    int level_;
    double margin_;
};

/// φ(t)‖e(t)‖ reached the gain singularity in cascade level `level()` (1-based).
class FunnelViolation : public GuardViolation {
public:
    using GuardViolation::GuardViolation;
};

/// An intermediate ρ_k left the open unit ball (level() is k, 1-based).
class ControllerDomainError : public GuardViolation {
public:
    using GuardViolation::GuardViolation;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

/// The step size collapsed (consecutive guard rejections or h below the resolution of t).
class StepUnderflow : public IntegrationError {
public:
    StepUnderflow(const std::string& what, double t, double margin, int level)
        : IntegrationError(what), t_(t), margin_(margin), level_(level) {}
    [[nodiscard]] double t() const noexcept { return t_; }
    [[nodiscard]] double margin() const noexcept { return margin_; }
    [[nodiscard]] int level() const noexcept { return level_; }

private:
    double t_;
    double margin_;
    int level_;
};

/// A condition that the code itself guarantees; seeing one means a bug.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace funnelkit

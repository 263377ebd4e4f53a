#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funnelkit/matrix.hpp"

namespace funnelkit {

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Initial step; 0 selects one automatically.
    double h0 = 0.0;
    double hmax = std::numeric_limits<double>::infinity();
    /// Consecutive guard rejections (each halving the step) before the run is aborted.
    int max_halvings = 40;
    /// A guard-halved step below this size also aborts the run; 0 selects 1e-12·max(1, t1 - t0).
    double min_guard_step = 0.0;
    std::size_t max_steps = 5'000'000;
    /// When set, take steps of exactly this size (the last one truncated) with no error control.
    std::optional<double> fixed_step;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t guard_rejections = 0;
    std::size_t rhs_evals = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0.0;
};

struct OdeSolution {
    std::vector<double> t;
    std::vector<Vec> x;
    IntegratorStats stats;

    bool completed = true;
    std::string message;
    /// Last accepted time and state (equal to the final sample on success).
    double t_last = 0.0;
    Vec x_last;
    /// Guard diagnostics of the last rejection (NaN when no guard fired).
    double guard_margin = std::numeric_limits<double>::quiet_NaN();
    int guard_level = 0;

    /// Throws StepUnderflow or IntegrationError carrying `message` when the run did not complete.
    void throw_if_failed() const;
};

/// Dormand–Prince 5(4) with dense output at the requested sample times (sorted, inside [t0, t1]).
///
/// The rhs may throw GuardViolation; the trial step is then rejected and halved. After
/// `max_halvings` consecutive halvings the run stops with completed = false and the message
/// "step size underflow at t = …, funnel margin = …". Other exceptions propagate.
OdeSolution integrate(const OdeRhs& rhs, Vec x0, double t0, double t1, std::span<const double> sample_times,
                      const IntegratorOptions& opts = {});

/// Uniform grid t0, t0 + dt, …, t1 (the last point is t1 exactly).
std::vector<double> uniform_grid(double t0, double t1, double dt);

} // namespace funnelkit

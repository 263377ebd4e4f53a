#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "funnelkit/design.hpp"
#include "funnelkit/fcontrol.hpp"
#include "funnelkit/integrator.hpp"
#include "funnelkit/plants.hpp"
#include "funnelkit/reference.hpp"

namespace funnelkit {

enum class SimMode { OpenLoop, ClosedLoop };

std::string_view to_string(SimMode m);

struct Scenario {
    std::string name = "scenario";
    SimMode mode = SimMode::OpenLoop;
    DesignParams design;
    ValidationReport report;

    // open loop: the cascade is driven by given signals (u, y)
    VectorSignal u_signal;
    VectorSignal y_signal;

    // closed loop
    std::shared_ptr<const Plant> plant;
    std::optional<FunnelSpec> phi_fc;
    VectorSignal reference;
    std::optional<Vec> plant_x0;

    /// Initial cascade state (zeros when unset).
    std::optional<Vec> cascade_z0;

    /// When false the run proceeds even if the design report contains failures.
    bool enforce_design = true;

    double t0 = 0.0;
    double t1 = 10.0;
    double sample_step = 0.01;
    /// Explicit sample times (sorted, inside [t0, t1]); replace the uniform grid when non-empty.
    std::vector<double> sample_times;
    IntegratorOptions tolerances;

    [[nodiscard]] ControllerConfig controller() const;
};

/// Uniformly sampled trajectory table plus run summary.
struct SimResult {
    std::vector<std::string> columns;
    std::vector<Vec> rows;

    /// Raw states at each row, kept for post-processing.
    std::vector<Vec> cascade_states;
    std::vector<Vec> plant_states;

    bool completed = true;
    std::string message;
    IntegratorStats stats;

    /// Sups, minimum margins and counts, keyed by name ("sup_h_1", "min_margin_1", …).
    std::map<std::string, double> summary;

    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] bool has_column(const std::string& name) const;
    [[nodiscard]] Vec col(const std::string& name) const;

    void write_csv(std::ostream& os) const;
};

/// Checks the initial conditions φ₁(t0)‖y(t0) - z[1][1]‖ < 1 and φ(t0)‖z[i-1][1] - z[i][1]‖ < 1;
/// throws InvalidArgument naming the level otherwise.
void check_initial_conditions(const DesignParams& d, double t0, std::span<const double> z0,
                              std::span<const double> y0);

SimResult run_open_loop(const Scenario& sc);
SimResult run_closed_loop(const Scenario& sc);
SimResult run(const Scenario& sc);

/// Composite bound factor ρ + r - 2 of ‖y - z‖ < (ρ + r - 2)/φ.
double composite_factor(const DesignParams& d);

} // namespace funnelkit

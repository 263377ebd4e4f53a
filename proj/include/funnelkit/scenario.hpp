#pragma once

#include <string>

#include "funnelkit/diagnostics.hpp"
#include "funnelkit/simloop.hpp"

namespace funnelkit {

/// Schema violation; the message starts with the JSON pointer of the offending node.
class ScenarioError : public InvalidArgument {
public:
    ScenarioError(const std::string& pointer, const std::string& reason)
        : InvalidArgument((pointer.empty() ? std::string("/") : pointer) + ": " + reason), pointer_(pointer) {}
    [[nodiscard]] const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

struct LoadedScenario {
    Scenario scenario;
    /// Output directory requested by the file (empty when absent).
    std::string out_dir;
};

/// Parses and validates a scenario document, runs the design pipeline and attaches its report.
/// Throws ScenarioError for schema problems and InvalidArgument for unreadable files.
LoadedScenario parse_scenario_text(const std::string& text, const std::string& source = "<string>");
LoadedScenario parse_scenario(const std::string& path);

/// Open-loop signal study: y = exp(-(t-5)²), u = sin t, r = 3, m = 1, ρ = 1.5, Γ̃ = 1,
/// φ = 1/(e^{-2t} + 0.05), companion roots at -s0.
Scenario example1_scenario(double s0);

/// Closed-loop tracking study on Example2Plant: s0 = 7, ρ = 1.1, Γ̃ = 2I, φ = 1/(e^{-3t} + 0.05),
/// φ_FC = 1/(2e^{-t} + 0.05), y_ref = (exp(-(t-5)²), sin t).
Scenario example2_scenario();

/// JSON renderings for the CLI.
std::string design_report_json(const DesignParams& d, const ValidationReport& rep);
std::string run_report_json(const Scenario& sc, const SimResult& res);
std::string diagnostics_report_json(const KronIdentityReport& kron, const MarginReport& margins,
                                    const ErrorCoordinates& coords);

} // namespace funnelkit

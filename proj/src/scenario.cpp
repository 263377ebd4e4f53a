#include "funnelkit/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "funnelkit/csv.hpp"
#include "funnelkit/precomp.hpp"
#include "json.hpp"

namespace funnelkit {

using nlohmann::json;

namespace {

/// A JSON node together with its pointer, for error reporting.
struct Node {
    const json& j;
    std::string ptr;

    [[noreturn]] void fail(const std::string& reason) const { throw ScenarioError(ptr, reason); }

    [[nodiscard]] bool has(const char* key) const { return j.is_object() && j.contains(key); }

    [[nodiscard]] Node at(const char* key) const {
        if (!has(key)) {
            throw ScenarioError(ptr + "/" + key, "required key missing");
        }
        return {j.at(key), ptr + "/" + key};
    }

    [[nodiscard]] Node at(std::size_t i) const { return {j.at(i), ptr + "/" + std::to_string(i)}; }

    void object(std::initializer_list<const char*> allowed) const {
        if (!j.is_object()) {
            fail("expected an object");
        }
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& item : j.items()) {
            if (!ok.count(item.key())) {
                throw ScenarioError(ptr + "/" + item.key(), "unknown key");
            }
        }
    }

    [[nodiscard]] double number() const {
        if (!j.is_number()) {
            fail("expected a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            fail("expected a finite number");
        }
        return v;
    }

    [[nodiscard]] int integer() const {
        if (!j.is_number_integer()) {
            fail("expected an integer");
        }
        return j.get<int>();
    }

    [[nodiscard]] std::string string() const {
        if (!j.is_string()) {
            fail("expected a string");
        }
        return j.get<std::string>();
    }

    [[nodiscard]] bool boolean() const {
        if (!j.is_boolean()) {
            fail("expected a boolean");
        }
        return j.get<bool>();
    }

    [[nodiscard]] std::size_t array_size() const {
        if (!j.is_array()) {
            fail("expected an array");
        }
        return j.size();
    }

    [[nodiscard]] Vec vector() const {
        Vec v;
        for (std::size_t i = 0; i < array_size(); ++i) {
            v.push_back(at(i).number());
        }
        return v;
    }

    /// Array of rows, or a number s meaning s·I_n when n is given.
    [[nodiscard]] Mat matrix(std::size_t rows, std::size_t cols) const {
        if (j.is_number()) {
            if (rows != cols) {
                fail("a scalar stands for a multiple of the identity and needs a square shape");
            }
            return number() * Mat::identity(rows);
        }
        if (array_size() != rows) {
            fail("expected " + std::to_string(rows) + " rows");
        }
        Mat M(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const Node row = at(i);
            if (row.array_size() != cols) {
                row.fail("expected " + std::to_string(cols) + " columns");
            }
            for (std::size_t k = 0; k < cols; ++k) {
                M(i, k) = row.at(k).number();
            }
        }
        return M;
    }

    /// Matrix of unknown shape (array of equal-length rows).
    [[nodiscard]] Mat matrix_any() const {
        const std::size_t rows = array_size();
        if (rows == 0) {
            fail("empty matrix");
        }
        const std::size_t cols = at(std::size_t{0}).array_size();
        return matrix(rows, cols);
    }
};

FunnelParams parse_funnel(const Node& n) {
    n.object({"family", "c_inf", "c_amp", "c_rate"});
    FunnelParams p;
    try {
        p.family = funnel_family_from_string(n.at("family").string());
    } catch (const ScenarioError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ScenarioError(n.ptr + "/family", e.what());
    }
    p.c_inf = n.at("c_inf").number();
    p.c_amp = n.has("c_amp") ? n.at("c_amp").number() : 0.0;
    p.c_rate = n.has("c_rate") ? n.at("c_rate").number() : 1.0;
    try {
        (void)FunnelSpec::make(p);
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    return p;
}

SignalTerm parse_term(const Node& n) {
    n.object({"kind", "amplitude", "center", "width", "omega", "phase", "value"});
    TermKind kind{};
    try {
        kind = term_kind_from_string(n.at("kind").string());
    } catch (const ScenarioError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ScenarioError(n.ptr + "/kind", e.what());
    }
    auto num = [&](const char* key, double def) { return n.has(key) ? n.at(key).number() : def; };
    switch (kind) {
    case TermKind::Constant:
        return SignalTerm::constant(num("value", num("amplitude", 0.0)));
    case TermKind::Gaussian:
        if (!(num("width", 1.0) > 0.0)) {
            throw ScenarioError(n.ptr + "/width", "gaussian width must be positive");
        }
        return SignalTerm::gaussian(n.at("center").number(), num("amplitude", 1.0), num("width", 1.0));
    case TermKind::Sine:
        return SignalTerm::sine(n.at("omega").number(), num("amplitude", 1.0), num("phase", 0.0));
    case TermKind::Cosine:
        return SignalTerm::cosine(n.at("omega").number(), num("amplitude", 1.0), num("phase", 0.0));
    }
    return {};
}

/// [[term, …] per component]
VectorSignal parse_signal(const Node& n, std::size_t dim) {
    if (n.array_size() != dim) {
        n.fail("expected " + std::to_string(dim) + " components");
    }
    VectorSignal s;
    for (std::size_t i = 0; i < dim; ++i) {
        const Node comp = n.at(i);
        ScalarSignal c;
        for (std::size_t k = 0; k < comp.array_size(); ++k) {
            c.terms.push_back(parse_term(comp.at(k)));
        }
        s.components.push_back(std::move(c));
    }
    return s;
}

std::shared_ptr<const Plant> parse_plant(const Node& n, int r, std::size_t m, std::optional<Vec>& x0) {
    const std::string type = n.at("type").string();
    try {
        if (type == "example2") {
            n.object({"type"});
            if (r != 3 || m != 2) {
                n.fail("the example2 plant has r = 3 and m = 2");
            }
            return std::make_shared<Example2Plant>();
        }
        if (type == "bif") {
            n.object({"type", "R", "S", "Q_int", "P_int", "gamma", "d_r", "d_eta"});
            const Node Rn = n.at("R");
            if (Rn.array_size() != static_cast<std::size_t>(r)) {
                Rn.fail("expected r matrices");
            }
            std::vector<Mat> R;
            for (std::size_t i = 0; i < static_cast<std::size_t>(r); ++i) {
                R.push_back(Rn.at(i).matrix(m, m));
            }
            std::size_t ne = 0;
            Mat Q_int(0, 0);
            if (n.has("Q_int")) {
                Q_int = n.at("Q_int").matrix_any();
                ne = Q_int.rows();
            }
            const Mat S = n.has("S") ? n.at("S").matrix(m, ne) : Mat(m, ne);
            const Mat P_int = n.has("P_int") ? n.at("P_int").matrix(ne, m) : Mat(ne, m);
            const Mat Gamma = n.at("gamma").matrix(m, m);
            const VectorSignal d_r = n.has("d_r") ? parse_signal(n.at("d_r"), m) : VectorSignal{};
            const VectorSignal d_eta = n.has("d_eta") ? parse_signal(n.at("d_eta"), ne) : VectorSignal{};
            return std::make_shared<BifPlant>(R, S, Q_int, P_int, Gamma, d_r, d_eta);
        }
        if (type == "linear") {
            n.object({"type", "A", "B", "C", "x0"});
            const Mat A = n.at("A").matrix_any();
            const Mat B = n.at("B").matrix(A.rows(), m);
            const Mat C = n.at("C").matrix(m, A.rows());
            LinearBif lb = linear_to_bif(A, B, C, r);
            if (n.has("x0")) {
                const Vec xo = n.at("x0").vector();
                if (xo.size() != A.rows()) {
                    n.at("x0").fail("expected " + std::to_string(A.rows()) + " entries");
                }
                x0 = lb.to_bif(xo);
            }
            return std::make_shared<BifPlant>(std::move(lb.plant));
        }
    } catch (const ScenarioError&) {
        throw;
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    throw ScenarioError(n.ptr + "/type", "unknown plant type '" + type + "' (expected bif, example2 or linear)");
}

} // namespace

LoadedScenario parse_scenario_text(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", source + " is not valid JSON: " + e.what());
    }
    const Node root{doc, ""};
    root.object({"name", "mode", "design", "plant", "signals", "reference", "initial", "tspan", "tolerances",
                 "sample_step", "out_dir", "enforce_design"});

    LoadedScenario out;
    Scenario& sc = out.scenario;
    sc.name = root.has("name") ? root.at("name").string() : "scenario";
    const Node mode = root.at("mode");
    const std::string ms = mode.string();
    if (ms == "open-loop") {
        sc.mode = SimMode::OpenLoop;
    } else if (ms == "closed-loop") {
        sc.mode = SimMode::ClosedLoop;
    } else {
        mode.fail("expected \"open-loop\" or \"closed-loop\"");
    }
    const bool closed = sc.mode == SimMode::ClosedLoop;

    // design
    const Node dn = root.at("design");
    dn.object({"r", "m", "s0", "a", "rho", "Q", "gamma_tilde", "gamma", "funnel", "funnel_fc"});
    DesignRequest req;
    req.r = dn.at("r").integer();
    if (req.r < 2) {
        dn.at("r").fail("relative degree must be at least 2");
    }
    req.m = dn.at("m").integer();
    if (req.m < 1) {
        dn.at("m").fail("output dimension must be at least 1");
    }
    const auto m = static_cast<std::size_t>(req.m);
    const auto r = static_cast<std::size_t>(req.r);
    if (dn.has("s0") == dn.has("a")) {
        dn.fail("exactly one of s0 and a must be given");
    }
    if (dn.has("s0")) {
        req.s0 = dn.at("s0").number();
        if (!(*req.s0 > 0.0)) {
            dn.at("s0").fail("root must lie in the open left half-plane");
        }
    } else {
        req.a = dn.at("a").vector();
        if (req.a->size() != r) {
            dn.at("a").fail("expected r coefficients");
        }
    }
    req.rho = dn.at("rho").number();
    if (!(req.rho > 1.0)) {
        dn.at("rho").fail("(A.2) requires ρ > 1");
    }
    if (dn.has("Q")) {
        req.Q = dn.at("Q").matrix(r, r);
    }
    req.gamma_tilde = dn.at("gamma_tilde").matrix(m, m);
    if (!is_spd(req.gamma_tilde)) {
        dn.at("gamma_tilde").fail("Γ̃ must be symmetric positive definite");
    }
    if (dn.has("gamma")) {
        req.gamma = dn.at("gamma").matrix(m, m);
    }
    req.funnel = parse_funnel(dn.at("funnel"));
    if (dn.has("funnel_fc")) {
        const FunnelParams fc = parse_funnel(dn.at("funnel_fc"));
        sc.phi_fc = FunnelSpec::make(fc, std::max(req.r, FunnelSpec::kDefaultMaxOrder));
    } else if (closed) {
        throw ScenarioError(dn.ptr + "/funnel_fc", "closed-loop scenarios need a controller funnel");
    }

    // plant or signals
    if (closed) {
        if (root.has("signals")) {
            root.at("signals").fail("closed-loop scenarios take a plant, not signals");
        }
        sc.plant = parse_plant(root.at("plant"), req.r, m, sc.plant_x0);
        if (!req.gamma) {
            req.gamma = sc.plant->gamma();
        }
        sc.reference = root.has("reference") ? parse_signal(root.at("reference"), m) : VectorSignal::zero(m);
    } else {
        if (root.has("plant")) {
            root.at("plant").fail("open-loop scenarios take signals, not a plant");
        }
        if (root.has("reference")) {
            root.at("reference").fail("open-loop scenarios take no reference");
        }
        const Node sn = root.at("signals");
        sn.object({"y", "u"});
        sc.y_signal = parse_signal(sn.at("y"), m);
        sc.u_signal = parse_signal(sn.at("u"), m);
    }

    if (root.has("initial")) {
        const Node in = root.at("initial");
        in.object({"plant", "cascade"});
        if (in.has("plant")) {
            if (!closed) {
                in.at("plant").fail("open-loop scenarios have no plant state");
            }
            sc.plant_x0 = in.at("plant").vector();
            if (sc.plant_x0->size() != sc.plant->state_dim()) {
                in.at("plant").fail("expected " + std::to_string(sc.plant->state_dim()) + " entries");
            }
        }
        if (in.has("cascade")) {
            sc.cascade_z0 = in.at("cascade").vector();
            if (sc.cascade_z0->size() != CascadeLayout{req.r, m}.size()) {
                in.at("cascade").fail("expected m·r·(r-1) entries");
            }
        }
    }
    if (root.has("tspan")) {
        const Node tn = root.at("tspan");
        if (tn.array_size() != 2) {
            tn.fail("expected [t0, t1]");
        }
        sc.t0 = tn.at(std::size_t{0}).number();
        sc.t1 = tn.at(std::size_t{1}).number();
        if (!(sc.t1 > sc.t0) || sc.t0 < 0.0) {
            tn.fail("expected 0 <= t0 < t1");
        }
    }
    if (root.has("tolerances")) {
        const Node tn = root.at("tolerances");
        tn.object({"rtol", "atol", "max_steps"});
        if (tn.has("rtol")) {
            sc.tolerances.rtol = tn.at("rtol").number();
            if (!(sc.tolerances.rtol > 0.0)) {
                tn.at("rtol").fail("must be positive");
            }
        }
        if (tn.has("max_steps")) {
            const int ms = tn.at("max_steps").integer();
            if (ms < 1) {
                tn.at("max_steps").fail("must be positive");
            }
            sc.tolerances.max_steps = static_cast<std::size_t>(ms);
        }
        if (tn.has("atol")) {
            sc.tolerances.atol = tn.at("atol").number();
            if (!(sc.tolerances.atol > 0.0)) {
                tn.at("atol").fail("must be positive");
            }
        }
    }
    if (root.has("sample_step")) {
        sc.sample_step = root.at("sample_step").number();
        if (!(sc.sample_step > 0.0)) {
            root.at("sample_step").fail("must be positive");
        }
    }
    if (root.has("out_dir")) {
        out.out_dir = root.at("out_dir").string();
    }
    if (root.has("enforce_design")) {
        sc.enforce_design = root.at("enforce_design").boolean();
    }

    try {
        auto [params, report] = design(req);
        sc.design = std::move(params);
        sc.report = std::move(report);
    } catch (const InvalidArgument& e) {
        dn.fail(e.what());
    } catch (const LinAlgError& e) {
        dn.fail(e.what());
    }
    return out;
}

LoadedScenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read scenario file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), path);
}

Scenario example1_scenario(double s0) {
    DesignRequest req;
    req.r = 3;
    req.m = 1;
    req.s0 = s0;
    req.rho = 1.5;
    req.gamma_tilde = Mat::identity(1);
    req.funnel = {FunnelFamily::ExpBoundary, 0.05, 1.0, 2.0};
    auto [params, report] = design(req);
    Scenario sc;
    sc.name = "example1_s" + format_double(s0);
    sc.mode = SimMode::OpenLoop;
    sc.design = std::move(params);
    sc.report = std::move(report);
    sc.y_signal = VectorSignal({ScalarSignal{{SignalTerm::gaussian(5.0)}}});
    sc.u_signal = VectorSignal({ScalarSignal{{SignalTerm::sine(1.0)}}});
    return sc;
}

Scenario example2_scenario() {
    auto plant = std::make_shared<Example2Plant>();
    DesignRequest req;
    req.r = 3;
    req.m = 2;
    req.s0 = 7.0;
    req.rho = 1.1;
    req.gamma_tilde = 2.0 * Mat::identity(2);
    req.funnel = {FunnelFamily::ExpBoundary, 0.05, 1.0, 3.0};
    req.gamma = plant->gamma();
    auto [params, report] = design(req);
    Scenario sc;
    sc.name = "example2_tracking";
    sc.mode = SimMode::ClosedLoop;
    sc.design = std::move(params);
    sc.report = std::move(report);
    sc.plant = plant;
    sc.phi_fc = FunnelSpec::make({FunnelFamily::ExpBoundary, 0.05, 2.0, 1.0});
    sc.reference = VectorSignal({ScalarSignal{{SignalTerm::gaussian(5.0)}}, ScalarSignal{{SignalTerm::sine(1.0)}}});
    return sc;
}

namespace {

json mat_json(const Mat& M) {
    json rows = json::array();
    for (std::size_t i = 0; i < M.rows(); ++i) {
        const auto r = M.row_span(i);
        rows.push_back(json(Vec(r.begin(), r.end())));
    }
    return rows;
}

json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json report_json(const ValidationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"condition", c.condition},
                          {"name", c.name},
                          {"status", std::string(to_string(c.status))},
                          {"measured", finite_or_null(c.measured)},
                          {"bound", finite_or_null(c.bound)},
                          {"message", c.message}});
    }
    return {{"ok", rep.ok()}, {"boundary", rep.has_boundary()}, {"checks", checks}};
}

json design_json(const DesignParams& d) {
    return {{"r", d.r},
            {"m", d.m},
            {"a", d.a},
            {"p", d.p},
            {"p_tilde", d.p_tilde},
            {"A", mat_json(d.A)},
            {"P", mat_json(d.P)},
            {"Q", mat_json(d.Q)},
            {"rho", d.rho},
            {"gamma_tilde", mat_json(d.gamma_tilde)},
            {"funnel",
             {{"family", std::string(to_string(d.phi.family()))},
              {"c_inf", d.phi.params().c_inf},
              {"c_amp", d.phi.params().c_amp},
              {"c_rate", d.phi.params().c_rate}}}};
}

} // namespace

std::string design_report_json(const DesignParams& d, const ValidationReport& rep) {
    return json{{"design", design_json(d)}, {"validation", report_json(rep)}}.dump(2);
}

std::string run_report_json(const Scenario& sc, const SimResult& res) {
    json summary = json::object();
    for (const auto& [k, v] : res.summary) {
        summary[k] = finite_or_null(v);
    }
    return json{{"name", sc.name},
                {"mode", std::string(to_string(sc.mode))},
                {"completed", res.completed},
                {"message", res.message},
                {"rows", res.rows.size()},
                {"summary", summary},
                {"design", design_json(sc.design)},
                {"validation", report_json(sc.report)}}
        .dump(2);
}

std::string diagnostics_report_json(const KronIdentityReport& kron, const MarginReport& margins,
                                    const ErrorCoordinates& coords) {
    json k = {{"lyapunov_residual", kron.lyapunov_residual},
              {"pbar_residual", kron.pbar_residual},
              {"scale", kron.scale},
              {"gamma_supplied", kron.gamma_supplied},
              {"a3_holds", kron.a3_holds},
              {"message", kron.message}};
    if (kron.a3_holds) {
        k["lyapunov1_residual"] = kron.lyapunov1_residual;
        k["pbar1_residual"] = kron.pbar1_residual;
        k["q1_min_eig"] = kron.q1_min_eig;
        k["q1_spd"] = kron.q1_spd;
    }
    json kappa = json::array();
    for (double v : margins.kappa) {
        kappa.push_back(finite_or_null(v));
    }
    json suph = json::array();
    for (double v : margins.sup_h) {
        suph.push_back(finite_or_null(v));
    }
    json m = {{"kappa", kappa},
              {"sup_h", suph},
              {"sup_w_norm", margins.sup_w_norm},
              {"sup_V", finite_or_null(margins.sup_V)},
              {"min_V_gap", finite_or_null(margins.min_V_gap)},
              {"max_identity_residual", margins.max_identity_residual},
              {"all_margins_positive", margins.all_margins_positive},
              {"ordering_holds", margins.ordering_holds},
              {"flags", margins.flags}};
    return json{{"kronecker", k}, {"margins", m}, {"t_end", coords.t_end}, {"samples", coords.t.size()}}.dump(2);
}

} // namespace funnelkit

#include "funnelkit/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "funnelkit/combinatorics.hpp"

namespace funnelkit {

std::string_view to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass:
        return "pass";
    case CheckStatus::Fail:
        return "fail";
    case CheckStatus::Boundary:
        return "boundary";
    case CheckStatus::Skipped:
        return "skipped";
    }
    return "?";
}

bool ValidationReport::ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const ConditionCheck& c) { return c.status == CheckStatus::Fail; });
}

bool ValidationReport::has_boundary() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const ConditionCheck& c) { return c.status == CheckStatus::Boundary; });
}

const ConditionCheck* ValidationReport::find(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

CheckStatus ValidationReport::condition_status(std::string_view condition) const {
    auto rank = [](CheckStatus s) {
        switch (s) {
        case CheckStatus::Fail:
            return 3;
        case CheckStatus::Boundary:
            return 2;
        case CheckStatus::Pass:
            return 1;
        case CheckStatus::Skipped:
            return 0;
        }
        return 0;
    };
    CheckStatus worst = CheckStatus::Skipped;
    for (const auto& c : checks) {
        if (c.condition == condition && rank(c.status) > rank(worst)) {
            worst = c.status;
        }
    }
    return worst;
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << "  (" << c.condition << ") " << c.name << ": " << to_string(c.status);
        if (c.status != CheckStatus::Skipped) {
            os << "  [measured " << c.measured << ", bound " << c.bound << "]";
        }
        if (!c.message.empty()) {
            os << "  " << c.message;
        }
        os << '\n';
    }
    return os.str();
}

Vec hurwitz_coefficients(int r, double s0) {
    if (r < 1) {
        throw InvalidArgument("relative degree must be at least 1");
    }
    if (!(s0 > 0.0) || !std::isfinite(s0)) {
        throw InvalidArgument("root must lie in the open left half-plane");
    }
    Vec a(static_cast<std::size_t>(r));
    for (int i = 1; i <= r; ++i) {
        a[i - 1] = binomial(r, i) * std::pow(s0, i);
    }
    return a;
}

Mat companion_matrix(std::span<const double> a) {
    if (a.empty()) {
        throw InvalidArgument("companion matrix needs at least one coefficient");
    }
    const std::size_t r = a.size();
    Mat A(r, r);
    for (std::size_t i = 0; i < r; ++i) {
        A(i, 0) = -a[i];
        if (i + 1 < r) {
            A(i, i + 1) = 1.0;
        }
    }
    return A;
}

PVector derive_p(const Mat& P) {
    if (!P.square() || P.rows() == 0) {
        throw InvalidArgument("derive_p needs a square matrix");
    }
    if (!is_spd(P)) {
        throw InvalidArgument("Lyapunov solution must be positive definite");
    }
    const std::size_t r = P.rows();
    PVector out;
    out.p.assign(r, 0.0);
    out.p[0] = 1.0;
    if (r == 1) {
        out.p_tilde = P(0, 0);
        return out;
    }
    const Mat p2 = P.block(0, 1, 1, r - 1);
    const Mat p4 = P.block(1, 1, r - 1, r - 1);
    const Mat x = solve(p4, p2.transpose()); // P₄⁻¹P₂ᵀ
    for (std::size_t i = 0; i + 1 < r; ++i) {
        out.p[i + 1] = -x(i, 0);
    }
    out.p_tilde = P(0, 0) - (p2 * x)(0, 0);

    const Vec pp = P * out.p;
    double res = std::abs(pp[0] - out.p_tilde);
    for (std::size_t i = 1; i < r; ++i) {
        res = std::max(res, std::abs(pp[i]));
    }
    if (res > 1e-10 * std::max(1.0, P.max_abs())) {
        throw LinAlgError("P·p does not reduce to (p̃, 0, …, 0)");
    }
    return out;
}

double gain_mismatch_bound(double rho, int r) {
    if (r < 2) {
        throw InvalidArgument("gain mismatch bound needs r >= 2");
    }
    const double second = rho / (4.0 * rho * rho * std::pow(rho + 1.0, r - 2) - 1.0);
    if (r == 2) {
        return second;
    }
    const double first = (rho - 1.0) / static_cast<double>(r - 2);
    return std::min(first, second);
}

namespace {

ConditionCheck make_check(std::string cond, std::string name, bool pass, double measured, double bound,
                          std::string message = {}) {
    return {std::move(cond), std::move(name), pass ? CheckStatus::Pass : CheckStatus::Fail, measured, bound,
            std::move(message)};
}

double lyapunov_relative_residual(const Mat& A, const Mat& P, const Mat& Q) {
    const Mat res = A.transpose() * P + P * A + Q;
    return res.frobenius_norm() /
           (1.0 + Q.frobenius_norm() + 2.0 * A.frobenius_norm() * P.frobenius_norm());
}

} // namespace

ValidationReport validate_design(const DesignParams& d, const std::optional<Mat>& gamma) {
    ValidationReport rep;
    auto& c = rep.checks;
    const auto r = static_cast<std::size_t>(d.r);
    const auto m = static_cast<std::size_t>(d.m);

    // (A.1)
    const bool dims_ok = d.r >= 1 && d.a.size() == r && d.p.size() == r && d.A.rows() == r && d.A.cols() == r &&
                         d.P.rows() == r && d.P.cols() == r && d.Q.rows() == r && d.Q.cols() == r;
    c.push_back(make_check("A.1", "dimensions", dims_ok, 0, 0, dims_ok ? "" : "a, p, A, P, Q must all be of size r"));
    if (dims_ok) {
        const double amin = *std::min_element(d.a.begin(), d.a.end());
        c.push_back(make_check("A.1", "a positive", amin > 0.0, amin, 0.0));

        const Mat expect = companion_matrix(d.a);
        const double dev = (d.A - expect).max_abs();
        c.push_back(make_check("A.1", "companion structure", dev == 0.0, dev, 0.0));

        const HurwitzTest ht = hurwitz_test(d.A);
        c.push_back(make_check("A.1", "A Hurwitz", ht.hurwitz, ht.marginal ? 1.0 : 0.0, 0.0,
                               ht.marginal ? "marginal Routh pivot" : ""));

        c.push_back(make_check("A.1", "Q symmetric positive definite", is_spd(d.Q), 0, 0));
        const bool p_spd = is_spd(d.P);
        c.push_back(make_check("A.1", "P symmetric positive definite", p_spd, p_spd ? sym_eigenvalues(d.P).front() : 0,
                               0.0));

        const double lres = lyapunov_relative_residual(d.A, d.P, d.Q);
        c.push_back(make_check("A.1", "Lyapunov residual", lres <= 1e-10, lres, 1e-10,
                               "‖AᵀP+PA+Q‖ relative to 1+‖Q‖+2‖A‖‖P‖"));

        c.push_back(make_check("A.1", "p1 = 1", d.p[0] == 1.0, d.p[0], 1.0));
        if (p_spd) {
            const Vec pp = d.P * d.p;
            double res = std::abs(pp[0] - d.p_tilde);
            for (std::size_t i = 1; i < r; ++i) {
                res = std::max(res, std::abs(pp[i]));
            }
            const double tol = 1e-10 * std::max(1.0, d.P.max_abs());
            c.push_back(make_check("A.1", "P·p = (p̃,0,…,0)", res <= tol, res, tol));
            c.push_back(make_check("A.1", "p̃ positive", d.p_tilde > 0.0, d.p_tilde, 0.0));
        }
    }

    // (A.2)
    c.push_back(make_check("A.2", "rho > 1", d.rho > 1.0, d.rho, 1.0, d.rho > 1.0 ? "" : "(A.2) requires ρ > 1"));
    {
        double worst = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double t = 0.05 * k;
            const double f = d.phi.value(t);
            const double f1 = d.phi1.value(t);
            if (f1 > 0.0) {
                worst = std::max(worst, std::abs(f / f1 - d.rho) / d.rho);
            } else if (f != 0.0) {
                worst = std::numeric_limits<double>::infinity();
            }
        }
        c.push_back(make_check("A.2", "phi = rho·phi1", worst <= 1e-12, worst, 1e-12));
    }

    // (A.3)
    const Mat& gt = d.gamma_tilde;
    const bool gt_shape = gt.rows() == m && gt.cols() == m;
    const bool gt_spd = gt_shape && is_spd(gt);
    c.push_back(make_check("A.3", "gamma_tilde symmetric positive definite", gt_spd, 0, 0,
                           gt_spd ? "" : "Γ̃ must be symmetric positive definite"));

    if (!gamma) {
        c.push_back({"A.3", "gamma·gamma_tilde⁻¹ symmetric positive definite", CheckStatus::Skipped, 0, 0,
                     "Γ not supplied"});
        c.push_back({"A.4", "gain mismatch", CheckStatus::Skipped, 0, 0, "Γ not supplied"});
        return rep;
    }
    if (gamma->rows() != m || gamma->cols() != m || !gt_shape) {
        c.push_back(make_check("A.3", "gamma·gamma_tilde⁻¹ symmetric positive definite", false, 0, 0,
                               "Γ and Γ̃ must be m×m"));
        return rep;
    }
    Mat ratio;
    try {
        ratio = *gamma * inverse(gt);
    } catch (const LinAlgError&) {
        c.push_back(make_check("A.3", "gamma·gamma_tilde⁻¹ symmetric positive definite", false, 0, 0,
                               "Γ̃ is singular"));
        return rep;
    }
    const double asym = (ratio - ratio.transpose()).frobenius_norm();
    const bool sym = asym <= 1e-12 * ratio.frobenius_norm();
    const bool ratio_pd = sym && sym_eigenvalues(ratio).front() > 0.0;
    c.push_back(make_check("A.3", "gamma·gamma_tilde⁻¹ symmetric positive definite", sym && ratio_pd, asym, 0.0,
                           sym ? (ratio_pd ? "" : "ΓΓ̃⁻¹ not positive definite") : "ΓΓ̃⁻¹ not symmetric"));

    // (A.4)
    const Mat G = Mat::identity(m) - ratio;
    const double gnorm = spectral_norm(G);
    if (d.r < 2) {
        c.push_back(make_check("A.4", "gain mismatch", false, gnorm, 0.0, "bound undefined for r < 2"));
        return rep;
    }
    const double bound = gain_mismatch_bound(d.rho, d.r);
    ConditionCheck g{"A.4", "gain mismatch", CheckStatus::Pass, gnorm, bound, {}};
    if (std::abs(gnorm - bound) <= kGainBoundaryTol) {
        g.status = CheckStatus::Boundary;
        g.message = "‖G‖ equals the bound; the strict inequality holds only up to rounding";
    } else if (gnorm > bound) {
        g.status = CheckStatus::Fail;
        g.message = "‖I - ΓΓ̃⁻¹‖ exceeds the admissible mismatch";
    }
    c.push_back(g);
    return rep;
}

std::pair<DesignParams, ValidationReport> design(const DesignRequest& req) {
    if (req.r < 2) {
        throw InvalidArgument("relative degree must be at least 2");
    }
    if (req.m < 1) {
        throw InvalidArgument("output dimension must be at least 1");
    }
    if (!(req.rho > 1.0)) {
        throw InvalidArgument("(A.2) requires ρ > 1");
    }
    const auto r = static_cast<std::size_t>(req.r);
    const auto m = static_cast<std::size_t>(req.m);
    if (req.gamma_tilde.rows() != m || req.gamma_tilde.cols() != m || !is_spd(req.gamma_tilde)) {
        throw InvalidArgument("gamma_tilde must be a symmetric positive definite m×m matrix");
    }

    DesignParams d;
    d.r = req.r;
    d.m = req.m;
    if (req.a) {
        if (req.a->size() != r) {
            throw InvalidArgument("coefficient vector a must have r entries");
        }
        d.a = *req.a;
    } else if (req.s0) {
        d.a = hurwitz_coefficients(req.r, *req.s0);
    } else {
        throw InvalidArgument("design needs either s0 or explicit coefficients a");
    }
    d.A = companion_matrix(d.a);
    if (!is_hurwitz(d.A)) {
        throw InvalidArgument("(A.1) requires the companion matrix of a to be Hurwitz");
    }
    d.Q = req.Q ? *req.Q : Mat::identity(r);
    if (d.Q.rows() != r || d.Q.cols() != r || !is_spd(d.Q)) {
        throw InvalidArgument("Q must be a symmetric positive definite r×r matrix");
    }
    d.P = solve_lyapunov(d.A, d.Q);
    const PVector pv = derive_p(d.P);
    d.p = pv.p;
    d.p_tilde = pv.p_tilde;
    d.rho = req.rho;
    d.gamma_tilde = req.gamma_tilde;
    d.phi = FunnelSpec::make(req.funnel, std::max(req.r, FunnelSpec::kDefaultMaxOrder));
    d.phi1 = d.phi.scaled(1.0 / req.rho);
    ValidationReport rep = validate_design(d, req.gamma);
    return {std::move(d), std::move(rep)};
}

} // namespace funnelkit

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "funnelkit/design.hpp"
#include "funnelkit/diagnostics.hpp"
#include "funnelkit/fcontrol.hpp"
#include "funnelkit/integrator.hpp"
#include "funnelkit/matrix.hpp"
#include "funnelkit/scenario.hpp"
#include "support/designs.hpp"

using namespace funnelkit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
        }
    }
    return m;
}

Line lyapunov_golden() {
    const Mat A = companion_matrix(Vec{3.0, 3.0, 1.0});
    const Mat Q = Mat::identity(3);
    const Mat expect{{1.0, -0.5, -1.0}, {-0.5, 1.0, -0.5}, {-1.0, -0.5, 4.0}};
    const auto t0 = Clock::now();
    const Mat P = solve_lyapunov(A, Q);
    const double dt = seconds_since(t0);
    const double err = max_abs_diff(P, expect);
    return {"lyapunov golden", err <= 1e-9 && dt < 1e-3,
            fmt("max entry error %.3e (tol 1e-9), runtime %.1f us (limit 1000 us)", err, dt * 1e6)};
}

Line p_vector_golden() {
    const Mat PA{{1.0, -0.5, -1.0}, {-0.5, 1.0, -0.5}, {-1.0, -0.5, 4.0}};
    const PVector pv = derive_p(PA);
    const Vec& p1 = pv.p;
    const double pt1 = pv.p_tilde;
    const double e1 = std::max({std::abs(p1[0] - 1.0), std::abs(p1[1] - 2.0 / 3.0), std::abs(p1[2] - 1.0 / 3.0)});

    const DesignParams d = designs::example2();
    const Vec ref{1.0, 1180.0 / 241.0, 1742.0 / 135.0};
    double rel = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        rel = std::max(rel, std::abs(d.p[i] - ref[i]) / std::abs(ref[i]));
    }
    double inv = 0.0;
    for (const auto& [P, p, pt] : {std::tuple{PA, p1, pt1}, std::tuple{d.P, d.p, d.p_tilde}}) {
        const Vec Pp = P * p;
        inv = std::max({inv, std::abs(Pp[0] - pt), std::abs(Pp[1]), std::abs(Pp[2])});
    }
    return {"p-vector golden", e1 <= 1e-9 && rel <= 1e-2 && inv <= 1e-10,
            fmt("P_A: max error %.3e (tol 1e-9); s0=7: p = (%.6g, %.6g, %.6g), max rel dev %.3e (tol 1e-2); "
                "P p = (p~,0,0) residual %.3e (tol 1e-10)",
                e1, d.p[0], d.p[1], d.p[2], rel, inv)};
}

Line a4_bound() {
    const double rho = 1.1;
    const double b = gain_mismatch_bound(rho, 3);
    // rho - 1 is exact for rho in [0.5, 2], so the bound must equal it bit for bit.
    const bool exact_for_input = (rho - 1.0) + 1.0 == rho && b == rho - 1.0;
    // The only gap to the decimal 0.1 is the representation error of the inputs 1.1 and 0.1.
    const double inherited = 0.5 * (std::nextafter(rho, 2.0) - rho) + 0.5 * (std::nextafter(0.1, 1.0) - 0.1);
    const bool near_literal = std::abs(b - 0.1) <= inherited;

    DesignRequest req;
    req.r = 3;
    req.m = 2;
    req.s0 = 7.0;
    req.rho = rho;
    req.gamma_tilde = 2.0 * Mat::identity(2);
    req.funnel = {FunnelFamily::ExpBoundary, 0.05, 1.0, 3.0};
    req.gamma = Mat{{2.0, 0.2}, {0.2, 2.0}};
    const auto [d, rep] = design(req);
    const ConditionCheck* a3 = nullptr;
    const ConditionCheck* a4 = nullptr;
    for (const auto& c : rep.checks) {
        if (c.condition == "A.3" && c.name.find("gamma·gamma_tilde") != std::string::npos) {
            a3 = &c;
        }
        if (c.condition == "A.4") {
            a4 = &c;
        }
    }
    const bool a3_pass = a3 && a3->status == CheckStatus::Pass;
    const bool a4_boundary = a4 && a4->status == CheckStatus::Boundary;
    const double gnorm = a4 ? a4->measured : std::numeric_limits<double>::quiet_NaN();
    const bool gnorm_ok = std::abs(gnorm - 0.1) <= 1e-12;
    return {"(A.4) bound", exact_for_input && near_literal && a3_pass && a4_boundary && gnorm_ok,
            fmt("bound(1.1, 3) = %.17g = fl(1.1) - 1 exactly: %s, |bound - 0.1| = %.1e (input rounding %.1e); "
                "(A.3) %s, (A.4) %s, ||G|| = %.17g (0.1 +- 1e-12)",
                b, exact_for_input ? "yes" : "no", std::abs(b - 0.1), inherited, a3_pass ? "pass" : "not pass",
                a4_boundary ? "boundary" : "not boundary", gnorm)};
}

double max_yz_after(const SimResult& res, double t_from) {
    const Vec t = res.col("t"), y = res.col("y_1"), z = res.col("z_1");
    double mx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t_from) {
            mx = std::max(mx, std::abs(y[i] - z[i]));
        }
    }
    return mx;
}

Line example1() {
    bool ok = true;
    std::string detail;
    std::vector<double> sup_err;
    for (double s0 : {1.0, 3.0, 5.0}) {
        const auto t0 = Clock::now();
        const SimResult res = run(example1_scenario(s0));
        const double dt = seconds_since(t0);
        // margins recomputed from the recorded columns
        const Vec t = res.col("t"), y = res.col("y_1"), z11 = res.col("z_1_1_1"), z21 = res.col("z_2_1_1");
        double m1 = std::numeric_limits<double>::infinity();
        double m2 = m1;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double phi = 1.0 / (std::exp(-2.0 * t[i]) + 0.05);
            m1 = std::min(m1, 1.0 - phi / 1.5 * std::abs(y[i] - z11[i]));
            m2 = std::min(m2, 1.0 - phi * std::abs(z11[i] - z21[i]));
        }
        const bool case_ok = res.completed && t.size() == 1001 && m1 > 0.0 && m2 > 0.0 && dt < 10.0;
        ok = ok && case_ok;
        sup_err.push_back(max_yz_after(res, 2.0));
        detail += fmt("s0=%g: margins %.4f/%.4f, max|y-z| on [2,10] %.4e, %.3f s; ", s0, m1, m2, sup_err.back(), dt);
    }
    const bool ordered = sup_err[0] > sup_err[1] && sup_err[1] > sup_err[2];
    detail += ordered ? "strictly decreasing in s0" : "NOT strictly decreasing in s0";
    return {"example 1 reproduction", ok && ordered, detail};
}

Line example2() {
    const auto t0 = Clock::now();
    const SimResult res = run(example2_scenario());
    const double dt = seconds_since(t0);
    const Vec t = res.col("t");
    const Vec y1 = res.col("y_1"), y2 = res.col("y_2"), z1 = res.col("z_1"), z2 = res.col("z_2");
    double track = std::numeric_limits<double>::infinity();
    double fc = track;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double phi = 1.0 / (std::exp(-3.0 * t[i]) + 0.05);
        const double bfc = 2.0 * std::exp(-t[i]) + 0.05;
        const double r1 = std::exp(-(t[i] - 5.0) * (t[i] - 5.0));
        const double r2 = std::sin(t[i]);
        track = std::min(track, (2.1 / phi + bfc) - std::hypot(y1[i] - r1, y2[i] - r2));
        fc = std::min(fc, bfc - std::hypot(z1[i] - r1, z2[i] - r2));
    }
    const double h1 = res.summary.at("sup_h_1"), h2 = res.summary.at("sup_h_2"), u = res.summary.at("sup_u_norm");
    const bool finite = std::isfinite(h1) && std::isfinite(h2) && std::isfinite(u);
    return {"example 2 reproduction",
            res.completed && t.size() == 1001 && track > 0.0 && fc > 0.0 && finite && dt < 60.0,
            fmt("min slack ||y-yref||: %.4e, ||z-yref||: %.4e; sup h = (%.4f, %.4f), sup ||u|| = %.4f; %.3f s", track,
                fc, h1, h2, u, dt)};
}

Line derivative_consistency() {
    Scenario sc = example2_scenario();
    const double h = 1e-4;
    std::vector<double> centers;
    for (int k = 1; k <= 100; ++k) {
        centers.push_back(0.1 * k - 0.05);
    }
    for (double c : centers) {
        sc.sample_times.insert(sc.sample_times.end(), {c - h, c, c + h});
    }
    const SimResult res = run(sc);
    if (!res.completed) {
        return {"derivative consistency", false, "run aborted: " + res.message};
    }
    double worst[3] = {0.0, 0.0, 0.0};
    for (int j = 1; j <= 2; ++j) {
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const std::size_t i = 3 * k + 1;
            double num = 0.0;
            double den = 0.0;
            for (int q = 1; q <= 2; ++q) {
                const std::string lo = (j == 1 ? "z_" : "zd1_") + std::to_string(q);
                const std::string hi = "zd" + std::to_string(j) + "_" + std::to_string(q);
                const double a0 = res.rows[i - 1][res.column(lo)];
                const double a1 = res.rows[i + 1][res.column(lo)];
                const double an = res.rows[i][res.column(hi)];
                const double fd = (a1 - a0) / (2.0 * h);
                num += (fd - an) * (fd - an);
                den += an * an;
            }
            worst[j] = std::max(worst[j], std::sqrt(num / den));
        }
    }
    return {"derivative consistency", worst[1] <= 1e-3 && worst[2] <= 1e-3,
            fmt("100 interior points, step 1e-4: max ||fd - z^(j)||/||z^(j)|| = %.3e (j=1), %.3e (j=2), tol 1e-3",
                worst[1], worst[2])};
}

Line appendix_identities() {
    std::mt19937_64 rng(20240611);
    double lyap = 0.0;
    double pbar = 0.0;
    int spd_fail = 0;
    int a3_count = 0;
    int invalid = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto rd = designs::random_design(rng);
        if (!rd.report.ok()) {
            ++invalid;
            continue;
        }
        const KronIdentityReport rep = kron_identities(rd.d, rd.gamma);
        lyap = std::max(lyap, rep.lyapunov_residual);
        pbar = std::max(pbar, rep.pbar_residual);
        if (rep.a3_holds) {
            ++a3_count;
            if (!rep.q1_spd) {
                ++spd_fail;
            }
        }
    }
    return {"appendix identities", invalid == 0 && lyap <= 1e-10 && pbar <= 1e-10 && spd_fail == 0,
            fmt("50 designs (%d invalid): max Lyapunov residual %.3e, max P-bar residual %.3e (tol 1e-10); "
                "Q1 SPD in %d/%d designs where (A.3) holds",
                invalid, lyap, pbar, a3_count - spd_fail, a3_count)};
}

Line controller_properties() {
    bool zero_ok = true;
    for (std::size_t m = 1; m <= 3; ++m) {
        for (std::size_t r = 1; r <= 4; ++r) {
            for (double v : rho_chain(Vec(r * m, 0.0), m)) {
                zero_ok = zero_ok && v == 0.0;
            }
        }
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> R(1, 4), M(1, 3);
    double worst = 0.0;
    int points = 0;
    while (points < 1000) {
        ControllerConfig cfg;
        cfg.r = R(rng);
        cfg.m = static_cast<std::size_t>(M(rng));
        cfg.phi_fc = FunnelSpec::make({FunnelFamily::ExpBoundary, 0.05, 2.0, 1.0});
        const double t = 5.0 * (U(rng) + 1.0);
        Vec e(static_cast<std::size_t>(cfg.r) * cfg.m);
        for (double& v : e) {
            v = 0.1 * U(rng) / cfg.phi_fc.value(t);
        }
        Vec u;
        try {
            u = funnel_control(e, cfg, t);
        } catch (const ControllerDomainError&) {
            continue;
        }
        Vec ne = e;
        for (double& v : ne) {
            v = -v;
        }
        const Vec un = funnel_control(ne, cfg, t);
        for (std::size_t k = 0; k < u.size(); ++k) {
            worst = std::max(worst, std::abs(un[k] + u[k]) / std::max(1.0, std::abs(u[k])));
        }
        ++points;
    }
    bool raised = false;
    std::string what;
    try {
        (void)rho_chain(Vec{0.9, 0.9, 0.0}, 1);
    } catch (const ControllerDomainError& e) {
        what = e.what();
        raised = what.find("error vector outside controller domain") != std::string::npos && e.level() == 2;
    }
    return {"controller properties", zero_ok && worst <= 1e-12 && raised,
            fmt("rho_chain(0) = 0: %s; odd symmetry over %d points, max deviation %.3e (tol 1e-12); "
                "domain exit raised: %s",
                zero_ok ? "yes" : "no", points, worst, raised ? what.c_str() : "no")};
}

Line integrator_order() {
    const OdeRhs f = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
    std::vector<double> lx;
    std::vector<double> ly;
    std::string detail;
    for (double tol : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10}) {
        IntegratorOptions o;
        o.rtol = tol;
        o.atol = tol * 1e-3;
        const std::vector<double> ts{10.0};
        const OdeSolution s = integrate(f, Vec{1.0}, 0.0, 10.0, ts, o);
        const double err = std::abs(s.x.back()[0] - std::exp(-10.0)) / std::exp(-10.0);
        lx.push_back(std::log(static_cast<double>(s.stats.accepted)));
        ly.push_back(std::log(err));
        detail += fmt("rtol %.0e: %zu steps, rel err %.2e; ", tol, s.stats.accepted, err);
    }
    // least-squares slope of log(err) against log(steps)
    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double order = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    detail += fmt("observed order %.2f (need >= 4)", order);
    return {"integrator order", order >= 4.0, detail};
}

} // namespace

int main() {
    const std::vector<std::function<Line()>> checks{lyapunov_golden,        p_vector_golden,     a4_bound,
                                                    example1,               example2,            derivative_consistency,
                                                    appendix_identities,    controller_properties, integrator_order};
    int failed = 0;
    for (const auto& c : checks) {
        Line l;
        try {
            l = c();
        } catch (const std::exception& e) {
            l = {"(criterion threw)", false, e.what()};
        }
        failed += l.pass ? 0 : 1;
        std::printf("%s  %s: %s\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}

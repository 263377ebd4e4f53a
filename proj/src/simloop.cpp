#include "funnelkit/simloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "funnelkit/csv.hpp"
#include "funnelkit/precomp.hpp"
#include "funnelkit/zderiv.hpp"

namespace funnelkit {

std::string_view to_string(SimMode m) {
    return m == SimMode::OpenLoop ? "open-loop" : "closed-loop";
}

ControllerConfig Scenario::controller() const {
    if (!phi_fc) {
        throw InvalidArgument("closed-loop scenario needs a controller funnel");
    }
    ControllerConfig cfg;
    cfg.r = design.r;
    cfg.m = static_cast<std::size_t>(design.m);
    cfg.phi_fc = *phi_fc;
    return cfg;
}

std::size_t SimResult::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw InvalidArgument("no column named '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
}

bool SimResult::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Vec SimResult::col(const std::string& name) const {
    const std::size_t c = column(name);
    Vec out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(row[c]);
    }
    return out;
}

void SimResult::write_csv(std::ostream& os) const {
    write_csv_header(os, columns);
    for (const auto& row : rows) {
        write_csv_row(os, row);
    }
}

double composite_factor(const DesignParams& d) {
    return d.rho + static_cast<double>(d.r) - 2.0;
}

void check_initial_conditions(const DesignParams& d, double t0, std::span<const double> z0,
                              std::span<const double> y0) {
    const Vec mg = cascade_margins(d, t0, z0, y0);
    for (std::size_t i = 0; i < mg.size(); ++i) {
        if (!(mg[i] > 0.0)) {
            throw InvalidArgument("initial cascade state violates the funnel constraint at level " +
                                  std::to_string(i + 1));
        }
    }
}

namespace {

std::string idx(std::initializer_list<std::size_t> parts) {
    std::string s;
    for (auto p : parts) {
        s += '_';
        s += std::to_string(p);
    }
    return s;
}

class Recorder {
public:
    Recorder(const Scenario& sc, const ControllerConfig* cfg) : sc_(sc), d_(sc.design), cfg_(cfg) {
        const std::size_t m = static_cast<std::size_t>(d_.m);
        const auto r = static_cast<std::size_t>(d_.r);
        const bool closed = sc.mode == SimMode::ClosedLoop;
        auto& c = res_.columns;
        c.push_back("t");
        for (std::size_t k = 1; k <= m; ++k) {
            c.push_back("y" + idx({k}));
        }
        if (closed) {
            for (std::size_t k = 1; k <= m; ++k) {
                c.push_back("yref" + idx({k}));
            }
            for (std::size_t k = 1; k <= m; ++k) {
                c.push_back("e" + idx({k}));
            }
            for (std::size_t k = 1; k <= m; ++k) {
                c.push_back("track" + idx({k}));
            }
        }
        for (std::size_t k = 1; k <= m; ++k) {
            c.push_back("u" + idx({k}));
        }
        for (std::size_t k = 1; k <= m; ++k) {
            c.push_back("z" + idx({k}));
        }
        for (std::size_t j = 1; j < r; ++j) {
            for (std::size_t k = 1; k <= m; ++k) {
                c.push_back("zd" + std::to_string(j) + idx({k}));
            }
        }
        for (std::size_t i = 1; i < r; ++i) {
            for (std::size_t j = 1; j <= r; ++j) {
                for (std::size_t k = 1; k <= m; ++k) {
                    c.push_back("z" + idx({i, j, k}));
                }
            }
        }
        for (std::size_t i = 1; i < r; ++i) {
            c.push_back("h" + idx({i}));
        }
        if (closed) {
            const auto pr = static_cast<std::size_t>(sc.plant->r());
            for (std::size_t j = 1; j <= pr; ++j) {
                for (std::size_t k = 1; k <= m; ++k) {
                    c.push_back("xi" + idx({j, k}));
                }
            }
            for (std::size_t l = 1; l <= sc.plant->internal_dim(); ++l) {
                c.push_back("eta" + idx({l}));
            }
        }
        c.push_back("bnd_phi1");
        c.push_back("bnd_phi");
        c.push_back("bnd_yz");
        if (closed) {
            c.push_back("bnd_fc");
            c.push_back("bnd_track");
        }
        for (std::size_t i = 1; i < r; ++i) {
            c.push_back("margin" + idx({i}));
        }
        c.push_back("margin_yz");
        if (closed) {
            c.push_back("margin_fc");
            c.push_back("margin_track");
            c.push_back("w_norm");
        }
        auto& s = res_.summary;
        for (std::size_t i = 1; i < r; ++i) {
            s["sup_h" + idx({i})] = 0.0;
            s["min_margin" + idx({i})] = std::numeric_limits<double>::infinity();
        }
        s["min_margin_yz"] = std::numeric_limits<double>::infinity();
        s["sup_u_norm"] = 0.0;
        if (closed) {
            s["min_margin_fc"] = std::numeric_limits<double>::infinity();
            s["min_margin_track"] = std::numeric_limits<double>::infinity();
            s["sup_w_norm"] = 0.0;
            s["sup_eta_norm"] = 0.0;
            s["sup_track_norm"] = 0.0;
        }
        s["sup_yz_norm"] = 0.0;
    }

    // Appends one row; returns false when the state lies outside a funnel.
    bool record(double t, std::span<const double> z, std::span<const double> xplant) {
        const bool closed = sc_.mode == SimMode::ClosedLoop;
        const std::size_t m = static_cast<std::size_t>(d_.m);
        const int r = d_.r;
        const CascadeLayout lay{r, m};
        Vec y = closed ? sc_.plant->output(xplant) : sc_.y_signal.value(t);
        Vec row;
        row.reserve(res_.columns.size());
        row.push_back(t);
        row.insert(row.end(), y.begin(), y.end());

        Vec zd;
        bool inside = true;
        try {
            zd = output_derivatives(d_, t, z, y, r - 1);
        } catch (const GuardViolation&) {
            inside = false;
            zd.assign(m * static_cast<std::size_t>(r), std::numeric_limits<double>::quiet_NaN());
        }
        Vec u(m, 0.0);
        double wn = std::numeric_limits<double>::quiet_NaN();
        double margin_fc = std::numeric_limits<double>::quiet_NaN();
        Vec yref;
        Vec e(m);
        Vec track(m);
        if (closed) {
            const Vec refd = reference_derivs(sc_.reference, t, r - 1);
            Vec ev(zd.size());
            for (std::size_t q = 0; q < zd.size(); ++q) {
                ev[q] = zd[q] - refd[q];
            }
            yref.assign(refd.begin(), refd.begin() + static_cast<std::ptrdiff_t>(m));
            for (std::size_t k = 0; k < m; ++k) {
                e[k] = ev[k];
                track[k] = y[k] - yref[k];
            }
            try {
                const Vec w = rho_chain([&] {
                    Vec s = ev;
                    const double f = cfg_->phi_fc.value(t);
                    for (auto& v : s) {
                        v *= f;
                    }
                    return s;
                }(), m);
                wn = norm(w);
                u = funnel_control(ev, *cfg_, t);
            } catch (const GuardViolation&) {
                inside = false;
                std::fill(u.begin(), u.end(), std::numeric_limits<double>::quiet_NaN());
            }
            margin_fc = 1.0 - cfg_->phi_fc.value(t) * norm(e);
            row.insert(row.end(), yref.begin(), yref.end());
            row.insert(row.end(), e.begin(), e.end());
            row.insert(row.end(), track.begin(), track.end());
        } else {
            u = sc_.u_signal.value(t);
        }
        row.insert(row.end(), u.begin(), u.end());
        row.insert(row.end(), zd.begin(), zd.end());
        row.insert(row.end(), z.begin(), z.end());

        const Vec mg = cascade_margins(d_, t, z, y);
        for (std::size_t i = 0; i < mg.size(); ++i) {
            const double h = mg[i] > 0.0 ? 1.0 / (1.0 - (1.0 - mg[i]) * (1.0 - mg[i]))
                                          : std::numeric_limits<double>::infinity();
            row.push_back(h);
            auto& sup = res_.summary["sup_h" + idx({i + 1})];
            sup = std::max(sup, h);
        }
        if (closed) {
            row.insert(row.end(), xplant.begin(), xplant.end());
        }
        const double phi1 = d_.phi1.value(t);
        const double phi = d_.phi.value(t);
        const double bnd_yz = phi > 0.0 ? composite_factor(d_) / phi : std::numeric_limits<double>::infinity();
        row.push_back(phi1 > 0.0 ? 1.0 / phi1 : std::numeric_limits<double>::infinity());
        row.push_back(phi > 0.0 ? 1.0 / phi : std::numeric_limits<double>::infinity());
        row.push_back(bnd_yz);
        double bnd_track = 0.0;
        if (closed) {
            const double bfc = cfg_->phi_fc.boundary(t);
            bnd_track = bnd_yz + bfc;
            row.push_back(bfc);
            row.push_back(bnd_track);
        }
        for (std::size_t i = 0; i < mg.size(); ++i) {
            row.push_back(mg[i]);
            auto& mn = res_.summary["min_margin" + idx({i + 1})];
            mn = std::min(mn, mg[i]);
            inside = inside && mg[i] > 0.0;
        }
        Vec yz(m);
        const auto zout = lay.z(z, r - 1, 1);
        for (std::size_t k = 0; k < m; ++k) {
            yz[k] = y[k] - zout[k];
        }
        const double margin_yz = 1.0 - norm(yz) / bnd_yz;
        row.push_back(margin_yz);
        res_.summary["min_margin_yz"] = std::min(res_.summary["min_margin_yz"], margin_yz);
        res_.summary["sup_yz_norm"] = std::max(res_.summary["sup_yz_norm"], norm(yz));
        res_.summary["sup_u_norm"] = std::max(res_.summary["sup_u_norm"], norm(u));
        if (closed) {
            const double margin_track = 1.0 - norm(track) / bnd_track;
            row.push_back(margin_fc);
            row.push_back(margin_track);
            row.push_back(wn);
            auto& s = res_.summary;
            s["min_margin_fc"] = std::min(s["min_margin_fc"], margin_fc);
            s["min_margin_track"] = std::min(s["min_margin_track"], margin_track);
            s["sup_w_norm"] = std::max(s["sup_w_norm"], wn);
            s["sup_track_norm"] = std::max(s["sup_track_norm"], norm(track));
            s["sup_eta_norm"] = std::max(s["sup_eta_norm"], norm(sc_.plant->internal_state(xplant)));
        }
        res_.rows.push_back(std::move(row));
        res_.cascade_states.emplace_back(z.begin(), z.end());
        res_.plant_states.emplace_back(xplant.begin(), xplant.end());
        return inside;
    }

    SimResult& result() { return res_; }

private:
    const Scenario& sc_;
    const DesignParams& d_;
    const ControllerConfig* cfg_;
    SimResult res_;
};

Vec initial_cascade(const Scenario& sc) {
    const CascadeLayout lay{sc.design.r, static_cast<std::size_t>(sc.design.m)};
    if (sc.cascade_z0) {
        if (sc.cascade_z0->size() != lay.size()) {
            throw InvalidArgument("initial cascade state has the wrong length");
        }
        return *sc.cascade_z0;
    }
    return Vec(lay.size(), 0.0);
}

void finish(SimResult& res, Recorder& rec, const OdeSolution& sol, std::size_t split, bool closed) {
    res.stats = sol.stats;
    res.completed = sol.completed;
    res.message = sol.message;
    if (!sol.completed && (res.rows.empty() || res.rows.back()[0] < sol.t_last)) {
        const std::span<const double> x(sol.x_last);
        if (closed) {
            rec.record(sol.t_last, x.subspan(split), x.subspan(0, split));
        } else {
            rec.record(sol.t_last, x, {});
        }
    }
    res.summary["accepted_steps"] = static_cast<double>(sol.stats.accepted);
    res.summary["rejected_steps"] = static_cast<double>(sol.stats.rejected);
    res.summary["guard_rejections"] = static_cast<double>(sol.stats.guard_rejections);
    res.summary["t_end"] = res.rows.empty() ? std::numeric_limits<double>::quiet_NaN() : res.rows.back()[0];
}

std::vector<double> sample_grid(const Scenario& sc) {
    return sc.sample_times.empty() ? uniform_grid(sc.t0, sc.t1, sc.sample_step) : sc.sample_times;
}

void check_design(const Scenario& sc) {
    if (sc.enforce_design && !sc.report.ok()) {
        throw InvalidArgument("design validation failed:\n" + sc.report.to_text());
    }
}

} // namespace

SimResult run_open_loop(const Scenario& sc) {
    if (sc.mode != SimMode::OpenLoop) {
        throw InvalidArgument("run_open_loop needs an open-loop scenario");
    }
    check_design(sc);
    const DesignParams& d = sc.design;
    const auto m = static_cast<std::size_t>(d.m);
    if (sc.u_signal.dim() != m || sc.y_signal.dim() != m) {
        throw InvalidArgument("open-loop signals must have m components");
    }
    const Vec z0 = initial_cascade(sc);
    check_initial_conditions(d, sc.t0, z0, sc.y_signal.value(sc.t0));

    OdeRhs rhs = [&](double t, std::span<const double> z, std::span<double> dz) {
        const Vec y = sc.y_signal.value(t);
        const Vec u = sc.u_signal.value(t);
        cascade_rhs(d, t, z, y, u, dz);
    };
    const std::vector<double> grid = sample_grid(sc);
    const OdeSolution sol = integrate(rhs, z0, sc.t0, sc.t1, grid, sc.tolerances);

    Recorder rec(sc, nullptr);
    bool inside = true;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        inside = rec.record(sol.t[i], sol.x[i], {}) && inside;
    }
    SimResult& res = rec.result();
    finish(res, rec, sol, 0, false);
    if (res.completed && !inside) {
        res.completed = false;
        res.message = "a dense-output sample lies outside a funnel";
    }
    return std::move(res);
}

SimResult run_closed_loop(const Scenario& sc) {
    if (sc.mode != SimMode::ClosedLoop) {
        throw InvalidArgument("run_closed_loop needs a closed-loop scenario");
    }
    check_design(sc);
    if (!sc.plant) {
        throw InvalidArgument("closed-loop scenario needs a plant");
    }
    const DesignParams& d = sc.design;
    const Plant& plant = *sc.plant;
    const auto m = static_cast<std::size_t>(d.m);
    if (plant.m() != m || plant.r() != d.r) {
        throw InvalidArgument("plant dimensions (m, r) do not match the design");
    }
    if (sc.reference.dim() != m) {
        throw InvalidArgument("reference must have m components");
    }
    const ControllerConfig cfg = sc.controller();
    const std::size_t nx = plant.state_dim();
    const Vec x0 = sc.plant_x0 ? *sc.plant_x0 : plant.initial_state();
    if (x0.size() != nx) {
        throw InvalidArgument("initial plant state has the wrong length");
    }
    const Vec z0 = initial_cascade(sc);
    check_initial_conditions(d, sc.t0, z0, plant.output(x0));
    {
        const Vec zd = output_derivatives(d, sc.t0, z0, plant.output(x0), d.r - 1);
        const Vec refd = reference_derivs(sc.reference, sc.t0, d.r - 1);
        Vec ev(zd.size());
        for (std::size_t q = 0; q < zd.size(); ++q) {
            ev[q] = zd[q] - refd[q];
        }
        try {
            (void)funnel_control(ev, cfg, sc.t0);
        } catch (const ControllerDomainError& e) {
            throw InvalidArgument(std::string("initial error vector outside the controller domain: ") + e.what());
        }
    }

    const int r = d.r;
    OdeRhs rhs = [&](double t, std::span<const double> x, std::span<double> dx) {
        const auto xp = x.subspan(0, nx);
        const auto z = x.subspan(nx);
        const Vec y = plant.output(xp);
        const Vec zd = output_derivatives(d, t, z, y, r - 1);
        const Vec refd = reference_derivs(sc.reference, t, r - 1);
        Vec ev(zd.size());
        for (std::size_t q = 0; q < zd.size(); ++q) {
            ev[q] = zd[q] - refd[q];
        }
        const Vec u = funnel_control(ev, cfg, t);
        plant.rhs(t, xp, u, dx.subspan(0, nx));
        cascade_rhs(d, t, z, y, u, dx.subspan(nx));
    };

    Vec X0 = x0;
    X0.insert(X0.end(), z0.begin(), z0.end());
    const std::vector<double> grid = sample_grid(sc);
    const OdeSolution sol = integrate(rhs, X0, sc.t0, sc.t1, grid, sc.tolerances);

    Recorder rec(sc, &cfg);
    bool inside = true;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        const std::span<const double> x(sol.x[i]);
        inside = rec.record(sol.t[i], x.subspan(nx), x.subspan(0, nx)) && inside;
    }
    SimResult& res = rec.result();
    finish(res, rec, sol, nx, true);
    if (res.completed && !inside) {
        res.completed = false;
        res.message = "a dense-output sample lies outside a funnel";
    }
    return std::move(res);
}

SimResult run(const Scenario& sc) {
    return sc.mode == SimMode::OpenLoop ? run_open_loop(sc) : run_closed_loop(sc);
}

} // namespace funnelkit

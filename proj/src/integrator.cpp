#include "funnelkit/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace funnelkit {

namespace {

constexpr std::array<double, 7> kC{0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5.0},
    {3.0 / 40.0, 9.0 / 40.0},
    {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0},
    {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
    {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0},
    {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0},
};
// b5 - b4
constexpr std::array<double, 7> kE{71.0 / 57600.0,  0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0,
                                   22.0 / 525.0, -1.0 / 40.0};
// Continuous extension: x(t0 + θh) = x0 + h Σ_i k_i Σ_q P[i][q] θ^{q+1}.
constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.1;
constexpr double kMaxFactor = 5.0;

struct Stepper {
    const OdeRhs& rhs;
    std::size_t n;
    std::array<Vec, 7> k;
    Vec tmp;
    IntegratorStats* stats;

    void eval(double t, std::span<const double> x, Vec& out) {
        ++stats->rhs_evals;
        rhs(t, x, out);
        for (double v : out) {
            if (!std::isfinite(v)) {
                throw GuardViolation("non-finite derivative", 0, std::numeric_limits<double>::quiet_NaN());
            }
        }
    }

    // Stages 2..7 given k[0] = f(t, x); fills x1 (5th order) and returns the scaled error norm.
    double step(double t, const Vec& x, double h, Vec& x1, double rtol, double atol) {
        for (int s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int q = 0; q < s; ++q) {
                    acc += kA[s][q] * k[static_cast<std::size_t>(q)][i];
                }
                tmp[i] = x[i] + h * acc;
            }
            if (s == 6) {
                x1 = tmp;
            }
            eval(t + kC[static_cast<std::size_t>(s)] * h, tmp, k[static_cast<std::size_t>(s)]);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (int s = 0; s < 7; ++s) {
                e += kE[static_cast<std::size_t>(s)] * k[static_cast<std::size_t>(s)][i];
            }
            e *= h;
            const double sc = atol + rtol * std::max(std::abs(x[i]), std::abs(x1[i]));
            acc += (e / sc) * (e / sc);
        }
        return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
    }

    void dense(const Vec& x0, double h, double theta, Vec& out) const {
        std::array<double, 4> pw{theta, theta * theta, theta * theta * theta, theta * theta * theta * theta};
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int s = 0; s < 7; ++s) {
                const double c = kP[s][0] * pw[0] + kP[s][1] * pw[1] + kP[s][2] * pw[2] + kP[s][3] * pw[3];
                acc += c * k[static_cast<std::size_t>(s)][i];
            }
            out[i] = x0[i] + h * acc;
        }
    }
};

double initial_step(Stepper& st, double t0, const Vec& x0, double dir_span, const IntegratorOptions& o) {
    const std::size_t n = x0.size();
    if (n == 0) {
        return dir_span;
    }
    double d0 = 0.0;
    double d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = o.atol + o.rtol * std::abs(x0[i]);
        d0 += (x0[i] / sc) * (x0[i] / sc);
        d1 += (st.k[0][i] / sc) * (st.k[0][i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, dir_span);
    return std::max(h, 1e-12 * std::max(1.0, std::abs(t0)));
}

std::string underflow_message(double t, double margin) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "step size underflow at t = %.10g, funnel margin = %.3e", t, margin);
    return buf;
}

} // namespace

void OdeSolution::throw_if_failed() const {
    if (!completed) {
        throw StepUnderflow(message, t_last, guard_margin, guard_level);
    }
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
    if (!(dt > 0.0) || !(t1 >= t0)) {
        throw InvalidArgument("sample grid needs dt > 0 and t1 >= t0");
    }
    const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
    std::vector<double> g;
    g.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        g.push_back(i == n ? t1 : t0 + static_cast<double>(i) * dt);
    }
    if (g.back() < t1) {
        g.push_back(t1);
    }
    return g;
}

OdeSolution integrate(const OdeRhs& rhs, Vec x0, double t0, double t1, std::span<const double> sample_times,
                      const IntegratorOptions& opts) {
    if (!(t1 > t0)) {
        throw InvalidArgument("integration interval must have t1 > t0");
    }
    if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) {
        throw InvalidArgument("integrator tolerances must be positive");
    }
    if (opts.fixed_step && !(*opts.fixed_step > 0.0)) {
        throw InvalidArgument("fixed step must be positive");
    }
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] < t0 || sample_times[i] > t1 || (i > 0 && sample_times[i] < sample_times[i - 1])) {
            throw InvalidArgument("sample times must be sorted and inside [t0, t1]");
        }
    }

    OdeSolution sol;
    const std::size_t n = x0.size();
    Stepper st{rhs, n, {}, Vec(n), &sol.stats};
    for (auto& v : st.k) {
        v.assign(n, 0.0);
    }

    double t = t0;
    Vec x = std::move(x0);
    Vec x1(n);
    Vec out(n);
    std::size_t next_sample = 0;
    auto emit_until = [&](double t_end, double h, bool at_end) {
        while (next_sample < sample_times.size() && sample_times[next_sample] <= t_end) {
            const double ts = sample_times[next_sample];
            if (ts == t_end && at_end) {
                out = x1;
            } else if (h == 0.0 || ts == t_end - h) {
                out = x;
            } else {
                st.dense(x, h, (ts - (t_end - h)) / h, out);
            }
            sol.t.push_back(ts);
            sol.x.push_back(out);
            ++next_sample;
        }
    };

    sol.t_last = t;
    sol.x_last = x;
    try {
        st.eval(t, x, st.k[0]);
    } catch (const GuardViolation& g) {
        sol.completed = false;
        sol.guard_margin = g.margin();
        sol.guard_level = g.level();
        sol.message = std::string("initial state violates a guard: ") + g.what();
        return sol;
    }
    // samples at t0
    while (next_sample < sample_times.size() && sample_times[next_sample] == t0) {
        sol.t.push_back(t0);
        sol.x.push_back(x);
        ++next_sample;
    }

    double h = opts.fixed_step ? *opts.fixed_step : (opts.h0 > 0.0 ? opts.h0 : initial_step(st, t0, x, t1 - t0, opts));
    h = std::min(h, opts.hmax);
    int halvings = 0;
    bool last_rejected = false;
    const double min_guard_step =
        opts.min_guard_step > 0.0 ? opts.min_guard_step : 1e-12 * std::max(1.0, t1 - t0);

    while (t < t1) {
        if (sol.stats.accepted + sol.stats.rejected >= opts.max_steps) {
            sol.completed = false;
            char buf[160];
            std::snprintf(buf, sizeof buf, "maximum number of steps exceeded at t = %.10g, funnel margin = %.3e", t,
                          sol.guard_margin);
            sol.message = buf;
            break;
        }
        double hs = std::min(h, t1 - t);
        const bool final_step = hs >= t1 - t;
        if (final_step) {
            hs = t1 - t;
        }
        double err = 0.0;
        bool guard_fired = false;
        const Vec k0 = st.k[0];
        try {
            err = st.step(t, x, hs, x1, opts.rtol, opts.atol);
        } catch (const GuardViolation& g) {
            guard_fired = true;
            sol.guard_margin = g.margin();
            sol.guard_level = g.level();
        }
        if (guard_fired) {
            st.k[0] = k0;
            ++sol.stats.guard_rejections;
            ++sol.stats.rejected;
            if (++halvings >= opts.max_halvings || hs * 0.5 < min_guard_step ||
                hs * 0.5 <= 1e-15 * std::max(1.0, std::abs(t))) {
                sol.completed = false;
                sol.message = underflow_message(t, sol.guard_margin);
                break;
            }
            h = hs * 0.5;
            last_rejected = true;
            continue;
        }
        if (!opts.fixed_step && err > 1.0) {
            st.k[0] = k0;
            ++sol.stats.rejected;
            const double fac = std::max(kMinFactor, kSafety * std::pow(err, -0.2));
            h = hs * fac;
            if (h <= 1e-15 * std::max(1.0, std::abs(t))) {
                sol.completed = false;
                sol.message = underflow_message(t, sol.guard_margin);
                break;
            }
            last_rejected = true;
            continue;
        }

        // accept
        halvings = 0;
        ++sol.stats.accepted;
        sol.stats.min_step = std::min(sol.stats.min_step, hs);
        sol.stats.max_step = std::max(sol.stats.max_step, hs);
        const double t_new = final_step ? t1 : t + hs;
        // dense output uses the stage derivatives of this step (k[0..6]) and the old state.
        st.k[0] = k0;
        emit_until(t_new, hs, true);
        x = x1;
        t = t_new;
        st.k[0] = st.k[6];
        sol.t_last = t;
        sol.x_last = x;

        if (!opts.fixed_step) {
            double fac = err == 0.0 ? kMaxFactor : kSafety * std::pow(err, -0.2);
            fac = std::clamp(fac, kMinFactor, kMaxFactor);
            if (last_rejected) {
                fac = std::min(fac, 1.0);
            }
            h = std::min(hs * fac, opts.hmax);
        }
        last_rejected = false;
    }
    return sol;
}

} // namespace funnelkit

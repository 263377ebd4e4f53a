#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "funnelkit/csv.hpp"
#include "funnelkit/diagnostics.hpp"
#include "funnelkit/scenario.hpp"

namespace fs = std::filesystem;
using namespace funnelkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAbort = 2;
constexpr int kExitUsage = 64;

/// "s", "a,b;c,d" (rows separated by ';') or "a,b,c" for a single row.
Mat parse_matrix_flag(const std::string& text, std::size_t n, const std::string& flag) {
    std::vector<std::vector<double>> rows;
    std::stringstream rs(text);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> vals;
        std::stringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) {
                    throw std::invalid_argument(cell);
                }
            } catch (const std::logic_error&) {
                throw InvalidArgument(flag + ": cannot parse '" + cell + "' as a number");
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.size() == 1 && rows[0].size() == 1) {
        return rows[0][0] * Mat::identity(n);
    }
    if (rows.size() != n) {
        throw InvalidArgument(flag + ": expected " + std::to_string(n) + " rows");
    }
    Mat M(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            throw InvalidArgument(flag + ": expected " + std::to_string(n) + " columns");
        }
        for (std::size_t j = 0; j < n; ++j) {
            M(i, j) = rows[i][j];
        }
    }
    return M;
}

std::string fmt4(std::span<const double> v) {
    std::string s = "(";
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.4g", v[i]);
        s += (i ? ", " : "") + std::string(buf);
    }
    return s + ")";
}

void print_matrix(std::ostream& os, const char* name, const Mat& M) {
    os << name << " =\n";
    for (std::size_t i = 0; i < M.rows(); ++i) {
        os << "  " << fmt4(M.row_span(i)) << "\n";
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write '" + path.string() + "'");
    }
    out << content;
}

void write_result_csv(const fs::path& path, const SimResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write '" + path.string() + "'");
    }
    res.write_csv(out);
}

void write_coords_csv(const fs::path& path, const ErrorCoordinates& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write '" + path.string() + "'");
    }
    std::vector<std::string> cols{"t", "V", "V_lower", "identity_residual", "wbar_residual"};
    const std::size_t levels = c.x_norm.empty() ? 0 : c.x_norm.front().size();
    for (std::size_t i = 1; i <= levels; ++i) {
        cols.push_back("x_norm_" + std::to_string(i));
    }
    write_csv_header(out, cols);
    for (std::size_t s = 0; s < c.t.size(); ++s) {
        Vec row{c.t[s], c.V[s], c.V_lower[s], c.identity_residual[s], c.wbar_residual[s]};
        row.insert(row.end(), c.x_norm[s].begin(), c.x_norm[s].end());
        write_csv_row(out, row);
    }
}

/// Runs one scenario into `dir`; returns the exit code and reports on `log`.
int simulate_into(const Scenario& sc, const fs::path& dir, bool diagnostics, std::ostream& log) {
    fs::create_directories(dir);
    const SimResult res = run(sc);
    write_result_csv(dir / "result.csv", res);
    write_file(dir / "report.json", run_report_json(sc, res) + "\n");
    if (diagnostics) {
        std::optional<Mat> gamma;
        if (sc.mode == SimMode::ClosedLoop) {
            gamma = sc.plant->gamma();
        }
        const KronIdentityReport kron = kron_identities(sc.design, gamma);
        const ErrorCoordinates coords = error_coordinates(sc, res);
        const MarginReport margins = margin_report(coords, res);
        write_file(dir / "diagnostics.json", diagnostics_report_json(kron, margins, coords) + "\n");
        write_coords_csv(dir / "error_coordinates.csv", coords);
        for (const auto& f : margins.flags) {
            log << sc.name << ": " << f << "\n";
        }
    }
    if (!res.completed) {
        log << sc.name << ": run aborted: " << res.message << "\n";
        return kExitAbort;
    }
    log << sc.name << ": wrote " << (dir / "result.csv").string() << " (" << res.rows.size() << " rows)\n";
    return kExitOk;
}

/// Maps library exceptions to exit codes.
template <class F>
int guarded(F&& body, const std::string& label, std::ostream& log) {
    try {
        return body();
    } catch (const InvalidArgument& e) {
        log << label << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const LinAlgError& e) {
        log << label << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        log << label << ": run aborted: " << e.what() << "\n";
        return kExitAbort;
    }
}

int cmd_design(int r, int m, std::optional<double> s0, const std::vector<double>& a, double rho,
               const std::string& gamma_tilde, const std::string& gamma, const std::string& q, bool as_json) {
    return guarded(
        [&] {
            DesignRequest req;
            req.r = r;
            req.m = m;
            if (!a.empty()) {
                req.a = a;
            } else {
                req.s0 = s0.value_or(1.0);
            }
            req.rho = rho;
            req.gamma_tilde = parse_matrix_flag(gamma_tilde, static_cast<std::size_t>(m), "--gamma-tilde");
            if (!gamma.empty()) {
                req.gamma = parse_matrix_flag(gamma, static_cast<std::size_t>(m), "--gamma");
            }
            if (!q.empty()) {
                req.Q = parse_matrix_flag(q, static_cast<std::size_t>(r), "--q");
            }
            req.funnel = {FunnelFamily::ExpBoundary, 0.05, 1.0, 2.0};
            const auto [d, rep] = design(req);
            if (as_json) {
                std::cout << design_report_json(d, rep) << "\n";
            } else {
                std::cout << "r = " << d.r << ", m = " << d.m << "\n";
                std::cout << "a = " << fmt4(d.a) << "\n";
                std::cout << "p = " << fmt4(d.p) << "\n";
                std::cout << "p_tilde = " << format_double(d.p_tilde) << "\n";
                print_matrix(std::cout, "A", d.A);
                print_matrix(std::cout, "P", d.P);
                print_matrix(std::cout, "Q", d.Q);
                std::cout << "rho = " << format_double(d.rho) << "\n";
                std::cout << rep.to_text();
            }
            return rep.ok() ? kExitOk : kExitValidation;
        },
        "design", std::cerr);
}

int cmd_simulate(const std::vector<std::string>& configs, const std::string& out, int jobs, bool diagnostics) {
    struct Job {
        LoadedScenario loaded;
        fs::path dir;
    };
    std::vector<Job> work;
    for (const auto& path : configs) {
        const int code = guarded(
            [&] {
                Job job{parse_scenario(path), {}};
                if (!out.empty()) {
                    job.dir = configs.size() == 1 ? fs::path(out) : fs::path(out) / job.loaded.scenario.name;
                } else if (!job.loaded.out_dir.empty()) {
                    job.dir = job.loaded.out_dir;
                } else {
                    throw InvalidArgument("no output directory (pass --out or set out_dir)");
                }
                if (job.loaded.scenario.enforce_design && !job.loaded.scenario.report.ok()) {
                    throw InvalidArgument("design validation failed:\n" + job.loaded.scenario.report.to_text());
                }
                work.push_back(std::move(job));
                return kExitOk;
            },
            path, std::cerr);
        if (code != kExitOk) {
            return code;
        }
    }

    std::vector<int> codes(work.size(), kExitOk);
    std::vector<std::string> logs(work.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            std::ostringstream log;
            codes[i] = guarded([&] { return simulate_into(work[i].loaded.scenario, work[i].dir, diagnostics, log); },
                               work[i].loaded.scenario.name, log);
            logs[i] = log.str();
        }
    };
    const auto n = static_cast<std::size_t>(std::max(1, jobs));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < std::min(n, work.size()); ++k) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    int worst = kExitOk;
    for (std::size_t i = 0; i < work.size(); ++i) {
        std::cerr << logs[i];
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

int cmd_example(const std::string& which, double s0, const std::string& out) {
    return guarded(
        [&] {
            const Scenario sc = which == "tracking" ? example2_scenario() : example1_scenario(s0);
            if (!sc.report.ok()) {
                throw InvalidArgument("design validation failed:\n" + sc.report.to_text());
            }
            return simulate_into(sc, out, false, std::cerr);
        },
        which, std::cerr);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"funnelkit: funnel pre-compensator design, simulation and diagnostics"};
    app.require_subcommand(1);

    auto* design_cmd = app.add_subcommand("design", "Design pre-compensator parameters and validate them");
    int r = 3;
    int m = 1;
    std::optional<double> s0;
    std::vector<double> a;
    double rho = 1.5;
    std::string gamma_tilde = "1";
    std::string gamma;
    std::string q;
    bool as_json = false;
    design_cmd->add_option("--r", r, "Relative degree (>= 2)")->required();
    design_cmd->add_option("--m", m, "Output dimension");
    auto* s0_opt = design_cmd->add_option("--s0", s0, "Place all companion roots at -s0");
    design_cmd->add_option("--a", a, "Explicit companion coefficients a_1..a_r")->excludes(s0_opt)->delimiter(',');
    design_cmd->add_option("--rho", rho, "Funnel ratio rho > 1");
    design_cmd->add_option("--gamma-tilde", gamma_tilde, "Gamma tilde: scalar s (s*I) or rows 'a,b;c,d'");
    design_cmd->add_option("--gamma", gamma, "Plant high-frequency gain, same format");
    design_cmd->add_option("--q", q, "Lyapunov right-hand side Q (r x r), same format");
    design_cmd->add_flag("--json", as_json, "Print the design and report as JSON");

    auto* sim_cmd = app.add_subcommand("simulate", "Run scenario files");
    std::vector<std::string> configs;
    std::string out;
    int jobs = 1;
    sim_cmd->add_option("--config", configs, "Scenario JSON file (repeatable)")->required();
    sim_cmd->add_option("--out", out, "Output directory");
    sim_cmd->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);

    auto* ex_cmd = app.add_subcommand("example", "Run a built-in study");
    std::string which;
    double ex_s0 = 5.0;
    std::string ex_out;
    ex_cmd->add_option("which", which, "precompensator | tracking")
        ->required()
        ->check(CLI::IsMember({"precompensator", "tracking"}));
    ex_cmd->add_option("--s0", ex_s0, "Companion root for the precompensator study");
    ex_cmd->add_option("--out", ex_out, "Output directory")->required();

    auto* diag_cmd = app.add_subcommand("diagnose", "Run a scenario and its error-coordinate diagnostics");
    std::string diag_config;
    std::string diag_out;
    diag_cmd->add_option("--config", diag_config, "Scenario JSON file")->required();
    diag_cmd->add_option("--out", diag_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    if (*design_cmd) {
        return cmd_design(r, m, s0, a, rho, gamma_tilde, gamma, q, as_json);
    }
    if (*sim_cmd) {
        return cmd_simulate(configs, out, jobs, false);
    }
    if (*ex_cmd) {
        return cmd_example(which, ex_s0, ex_out);
    }
    return cmd_simulate({diag_config}, diag_out, 1, true);
}

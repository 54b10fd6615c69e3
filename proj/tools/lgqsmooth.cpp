// lgqsmooth: filtering, retrofiltering and smoothing for linear Gaussian quantum systems.
//
// Exit codes: 0 success, 1 input error, 2 convergence error, 3 singularity error.

#include "lgq/errors.hpp"
#include "lgq/model_io.hpp"
#include "lgq/presets.hpp"
#include "lgq/realizability.hpp"
#include "lgq/riccati.hpp"
#include "lgq/smoothing.hpp"
#include "lgq/sweep.hpp"
#include "lgq/trajectory.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lgq;

namespace {

enum Exit { kOk = 0, kInput = 1, kConvergence = 2, kSingular = 3 };

struct Options {
    std::string model = "opo";
    double hbar = 1.0;
    std::string unravelling = "alice";
    std::string unobserved;
    std::optional<double> gamma;
    std::optional<double> delta;
    std::string cov_file;
    std::string fixture;
    std::optional<double> dt;
    std::optional<double> t_max;
    std::optional<double> tol;
    std::uint64_t seed = 42;
    std::string grid;
    std::string out;
    bool json_stdout = false;
    int phases = 64;
    std::optional<double> duration;
    double burn_in = -1.0;
    std::size_t n_traj = 1;
    std::string fixtures = "a,b,c,d";
    int n_points = 200;
};

struct Context {
    ModelFile file;
    Unravelling u_o;
    SteadySolveConfig solve;
    double tol;
    json config;
};

Context load_context(const Options& o, const std::string& command) {
    ModelFile file = o.model == "opo" ? presets::opo_model_file(o.hbar) : load_model(o.model);
    const auto it = file.unravellings.find(o.unravelling);
    if (it == file.unravellings.end()) {
        throw DomainError("model has no unravelling named '" + o.unravelling + "'");
    }
    SteadySolveConfig solve = default_solve_config(file.model);
    if (o.t_max) solve.t_max = *o.t_max;
    solve.validate();
    const double tol = o.tol.value_or(default_tolerance(file.model));
    if (!(tol >= 0.0)) throw DomainError("--tol must be non-negative");

    json config = {{"command", command},
                   {"model", o.model},
                   {"model_hash", content_hash(file.source)},
                   {"unravelling", o.unravelling},
                   {"solver", {{"dt", solve.dt}, {"t_max", solve.t_max}, {"tol", solve.tol}}},
                   {"tol", tol}};
    return {std::move(file), it->second, solve, tol, std::move(config)};
}

std::string format_half_units(const Matrix& m, double hbar) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4);
    const double unit = 0.5 * hbar;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        s << (r == 0 ? "  [[" : "   [");
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            s << std::setw(9) << m(r, c) / unit << (c + 1 < m.cols() ? ", " : "");
        }
        s << (r + 1 < m.rows() ? "]\n" : "]]\n");
    }
    return s.str();
}

void print_matrix(const std::string& label, const Matrix& m, double hbar) {
    std::cout << label << " (units of hbar/2):\n" << format_half_units(m, hbar);
}

void emit_json(bool to_stdout, const std::string& path, const json& doc) {
    if (to_stdout) {
        std::cout << doc.dump(2) << '\n';
    }
    if (!path.empty()) {
        std::ofstream f(path);
        if (!f) throw DomainError("cannot write '" + path + "'");
        f << doc.dump(2) << '\n';
    }
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write '" + path.string() + "'");
    return f;
}

// Putative true covariance from exactly one of: --gamma/--delta, --cov-file, --fixture, --unobserved.
std::pair<CovMatrix, json> putative_cov(const Options& o, const Context& ctx, bool allow_asymmetric,
                                        Matrix* raw = nullptr) {
    const int sources = (o.gamma || o.delta ? 1 : 0) + (o.cov_file.empty() ? 0 : 1) + (o.fixture.empty() ? 0 : 1) +
                        (o.unobserved.empty() ? 0 : 1);
    if (sources != 1) {
        throw DomainError("give exactly one of --gamma/--delta, --cov-file, --fixture, --unobserved");
    }
    const auto& model = ctx.file.model;
    if (o.gamma || o.delta) {
        if (!o.gamma || !o.delta) throw DomainError("--gamma and --delta go together");
        return {param_to_cov({*o.gamma, *o.delta}, model), {{"gamma", *o.gamma}, {"delta", *o.delta}}};
    }
    if (!o.fixture.empty()) {
        if (o.model != "opo") throw DomainError("--fixture needs the opo model");
        return {presets::opo_fixture(o.fixture, model.hbar()), {{"fixture", o.fixture}}};
    }
    if (!o.unobserved.empty()) {
        const auto it = ctx.file.unravellings.find(o.unobserved);
        if (it == ctx.file.unravellings.end()) {
            throw DomainError("model has no unravelling named '" + o.unobserved + "'");
        }
        return {true_steady(model, ctx.u_o, it->second, ctx.solve), {{"unobserved", o.unobserved}}};
    }
    std::ifstream in(o.cov_file);
    if (!in) throw DomainError("cannot open covariance file '" + o.cov_file + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DomainError("covariance file '" + o.cov_file + "': " + e.what());
    }
    double scale = 1.0;
    json entries = doc;
    if (doc.is_object()) {
        if (!doc.contains("V")) throw DomainError("covariance file needs a 'V' matrix");
        entries = doc.at("V");
        const std::string units = doc.value("units", "absolute");
        if (units == "hbar/2") {
            scale = 0.5 * model.hbar();
        } else if (units != "absolute") {
            throw DomainError("units must be 'absolute' or 'hbar/2'");
        }
    }
    const Matrix m = scale * matrix_from_json(entries, "V");
    if (m.rows() != model.dim() || m.cols() != model.dim()) {
        throw DomainError("covariance has the wrong shape for this model");
    }
    if (raw) *raw = m;
    json src = {{"cov_file", o.cov_file}};
    if (allow_asymmetric) {
        return {CovMatrix::symmetrized(m), src};
    }
    return {CovMatrix(m), src};
}

json matrix_entry(const Matrix& m, double hbar) {
    return {{"value", matrix_to_json(m)}, {"half_units", matrix_to_json(m / (0.5 * hbar))}};
}

int cmd_steady(const Options& o) {
    auto ctx = load_context(o, "steady");
    if (o.dt) ctx.solve.dt = *o.dt;
    ctx.solve.validate();
    ctx.config["solver"]["dt"] = ctx.solve.dt;
    const auto& model = ctx.file.model;
    const auto v_f = filtered_steady(model, ctx.u_o, ctx.solve);
    const double res_f = riccati_rhs(v_f, model, ctx.u_o, KappaSign::plus).norm();
    print_matrix("V_F", v_f.matrix(), model.hbar());

    json doc = {{"config", ctx.config},
                {"filtered", matrix_entry(v_f.matrix(), model.hbar())},
                {"residual", {{"filtered", res_f}}}};
    // Without enough measurement the backward equation has no steady state; V_R is then unbounded.
    try {
        const auto v_r = retrofiltered_steady(model, ctx.u_o, ctx.solve);
        const double res_r = retrofilter_rhs(v_r, model, ctx.u_o).norm();
        print_matrix("V_R", v_r.matrix(), model.hbar());
        std::cout << "residual norms: filtered " << res_f << ", retrofiltered " << res_r << '\n';
        doc["retrofiltered"] = matrix_entry(v_r.matrix(), model.hbar());
        doc["residual"]["retrofiltered"] = res_r;
    } catch (const ConvergenceError& e) {
        std::cout << "V_R: no steady state (" << e.what() << ")\n";
        std::cout << "residual norm: filtered " << res_f << '\n';
        doc["retrofiltered"] = nullptr;
        doc["retrofiltered_error"] = e.what();
    }
    emit_json(o.json_stdout, o.out, doc);
    return kOk;
}

int cmd_classify(const Options& o) {
    auto ctx = load_context(o, "classify");
    const auto& model = ctx.file.model;
    Matrix raw;
    auto [v_t, source] = putative_cov(o, ctx, true, &raw);
    const auto refs = cached_reference_solutions(model, ctx.u_o, ctx.solve);
    const auto report = raw.size() ? classify_matrix(*refs, model, ctx.u_o, raw, ctx.tol)
                                   : classify(*refs, model, ctx.u_o, v_t, ctx.tol);

    print_matrix("V_T", v_t.matrix(), model.hbar());
    std::cout << std::boolalpha << "sclass " << report.uncertainty_ok << ", pure " << report.pure
              << ", fits_unconditioned " << report.fits_unconditioned << ", fits_filtered " << report.fits_filtered
              << ", realizable " << report.realizable << ", extremal " << report.extremal << '\n';

    auto doc = json{{"config", ctx.config}, {"source", source}, {"V_T", matrix_entry(v_t.matrix(), model.hbar())},
                    {"report", to_json(report)}};
    if (model.modes() == 1) {
        const auto p = cov_to_param(v_t, model);
        doc["params"] = {{"gamma", p.gamma}, {"delta", p.delta}};
    }
    emit_json(o.json_stdout, o.out, doc);
    return kOk;
}

int cmd_smooth(const Options& o) {
    auto ctx = load_context(o, "smooth");
    const auto& model = ctx.file.model;
    const auto [v_t, source] = putative_cov(o, ctx, false);
    const auto refs = cached_reference_solutions(model, ctx.u_o, ctx.solve);
    const auto v_s = smoothed_cov(refs->filtered, refs->retrofiltered, v_t);
    const double det = smoothed_det_normalized(v_s, model);
    const auto report = classify(*refs, model, ctx.u_o, v_t, ctx.tol);
    const auto fits = theorem_c_check(*refs, v_t, ctx.tol);
    const auto sclass = uncertainty_ok(v_s, model, ctx.tol);
    const bool premise = report.uncertainty_ok && report.fits_filtered;

    print_matrix("V_T", v_t.matrix(), model.hbar());
    print_matrix("V_S", v_s.matrix(), model.hbar());
    std::cout << std::boolalpha << "det normalized " << det << ", sclass " << sclass.ok << '\n';

    emit_json(o.json_stdout, o.out, {{"config", ctx.config},
                  {"source", source},
                  {"V_T", matrix_entry(v_t.matrix(), model.hbar())},
                  {"V_S", matrix_entry(v_s.matrix(), model.hbar())},
                  {"det_normalized", det},
                  {"sclass", sclass.ok},
                  {"input", {{"sclass", report.uncertainty_ok},
                             {"fits_filtered", report.fits_filtered},
                             {"fits_unconditioned", report.fits_unconditioned}}},
                  {"sclass_guaranteed", premise},
                  {"fits_filtered", fits.fits_filtered},
                  {"fits_unconditioned", fits.fits_unconditioned}});
    return kOk;
}

int cmd_sweep(const Options& o) {
    auto ctx = load_context(o, "sweep");
    const auto grid = o.grid.empty() ? GridSpec{} : GridSpec::parse(o.grid);
    grid.validate();
    ctx.config["grid"] = grid.to_string();
    const auto rows = sweep_grid(ctx.file.model, ctx.u_o, grid, ctx.solve, ctx.tol);
    const fs::path path = o.out.empty() ? fs::path("sweep.csv") : fs::path(o.out);
    auto f = open_output(path);
    write_sweep_csv(f, rows, ctx.config.dump());
    std::cout << rows.size() << " rows written to " << path.string() << '\n';
    return kOk;
}

int cmd_boundary(const Options& o) {
    auto ctx = load_context(o, "boundary");
    ctx.config["phases"] = o.phases;
    const auto pts = homodyne_boundary(ctx.file.model, ctx.u_o, o.phases, ctx.solve, ctx.tol);
    const fs::path path = o.out.empty() ? fs::path("boundary.csv") : fs::path(o.out);
    auto f = open_output(path);
    write_boundary_csv(f, pts, ctx.file.model, ctx.config.dump());
    std::cout << pts.size() << " phases written to " << path.string() << '\n';
    return kOk;
}

void write_curve(std::ostream& out, const std::string& panel, const std::string& curve,
                 const std::vector<Eigen::Vector2d>& pts) {
    for (const auto& p : pts) out << panel << ',' << curve << ',' << p.x() << ',' << p.y() << '\n';
}

// Contour of the unconditioned state. Unbounded directions turn the ellipse into a pair of lines,
// written as two curves "unconditioned+" and "unconditioned-".
void write_unconditioned(std::ostream& out, const std::string& panel, const UnconditionedBound& bound,
                         int n_points, double extent) {
    if (auto full = bound.full()) {
        write_curve(out, panel, "unconditioned", ellipse_points({Vector::Zero(2), *full}, n_points));
        return;
    }
    if (bound.finite_directions() != 1) return;
    const Eigen::Vector2d normal = bound.basis.col(0).head<2>();
    const Eigen::Vector2d along(-normal.y(), normal.x());
    const double offset = std::sqrt(std::max(0.0, bound.cov(0, 0)));
    for (const double sign : {1.0, -1.0}) {
        std::vector<Eigen::Vector2d> line;
        for (int i = 0; i < n_points; ++i) {
            const double s = -extent + 2.0 * extent * i / (n_points - 1);
            line.emplace_back(sign * offset * normal + s * along);
        }
        write_curve(out, panel, sign > 0 ? "unconditioned+" : "unconditioned-", line);
    }
}

int cmd_fig2(const Options& o) {
    auto ctx = load_context(o, "fig2");
    const auto& model = ctx.file.model;
    if (model.modes() != 1) throw DomainError("fig2 is single-mode only");
    if (o.model != "opo") throw DomainError("fig2 uses the opo fixtures");
    const double dt = o.dt.value_or(1e-3);
    const double duration = o.duration.value_or(0.8);
    if (o.n_points < 3) throw DomainError("--points must be at least 3");
    ctx.config.update({{"dt", dt}, {"duration", duration}, {"seed", o.seed}, {"fixtures", o.fixtures}});

    const auto refs = cached_reference_solutions(model, ctx.u_o, ctx.solve);
    const fs::path path = o.out.empty() ? fs::path("fig2.csv") : fs::path(o.out);
    auto f = open_output(path);
    f.precision(17);
    f << "# " << ctx.config.dump() << '\n' << "panel,curve,x,y\n";

    json summary = json::object();
    std::stringstream names(o.fixtures);
    std::string name;
    while (std::getline(names, name, ',')) {
        const auto v0 = presets::opo_fixture(name, model.hbar());
        const auto snap = evolve_snapshot(model, ctx.u_o, v0, Vector::Zero(2), dt, duration, o.seed);
        const auto& v1 = snap.cov_path.back();
        const Vector& m1 = snap.mean_path.back();
        const double extent = 2.0 * std::sqrt(v0.matrix().diagonal().maxCoeff());
        write_curve(f, name, "initial", ellipse_points({Vector::Zero(2), v0}, o.n_points));
        write_curve(f, name, "translated", ellipse_points({m1, v0}, o.n_points));
        write_curve(f, name, "evolved", ellipse_points({m1, v1}, o.n_points));
        write_curve(f, name, "filtered", ellipse_points({Vector::Zero(2), refs->filtered}, o.n_points));
        write_unconditioned(f, name, refs->unconditioned, o.n_points, extent);

        const double margin = is_psd(v1.matrix() - v0.matrix(), 0.0).min_eig;
        summary[name] = {{"fits_evolved", margin >= -ctx.tol}, {"min_eig", margin}, {"mean", {m1(0), m1(1)}}};
        std::cout << "panel " << name << ": min eig(V' - V) = " << margin / (0.5 * model.hbar())
                  << " (hbar/2)\n";
    }
    emit_json(o.json_stdout, "", {{"config", ctx.config}, {"panels", summary}});
    return kOk;
}

int cmd_simulate(const Options& o) {
    auto ctx = load_context(o, "simulate");
    const auto& model = ctx.file.model;
    Unravelling u_u = Unravelling::empty(model.dim());
    if (!o.unobserved.empty() && o.unobserved != "none") {
        const auto it = ctx.file.unravellings.find(o.unobserved);
        if (it == ctx.file.unravellings.end()) {
            throw DomainError("model has no unravelling named '" + o.unobserved + "'");
        }
        u_u = it->second;
    }
    SimulationConfig sim;
    sim.dt = o.dt.value_or(1e-3);
    sim.duration = o.duration.value_or(100.0);
    sim.seed = o.seed;
    const double burn_in =
        o.burn_in >= 0.0 ? o.burn_in : std::min(10.0 * slowest_damping_time(model), 0.5 * sim.duration);
    if (o.n_traj < 1) throw DomainError("--n-traj must be at least 1");
    ctx.config.update({{"unobserved", o.unobserved.empty() ? "none" : o.unobserved},
                       {"dt", sim.dt},
                       {"duration", sim.duration},
                       {"seed", sim.seed},
                       {"n_traj", o.n_traj},
                       {"burn_in", burn_in}});

    const auto bundles = simulate_ensemble(model, ctx.u_o, u_u, sim, ctx.solve, o.n_traj);
    const auto v_f = filtered_steady(model, ctx.u_o, ctx.solve);
    const auto v_t = filtered_steady(model, stack(ctx.u_o, u_u), ctx.solve);
    const Matrix expected = v_f.matrix() - v_t.matrix();

    const fs::path dir = o.out.empty() ? fs::path("simulate") : fs::path(o.out);
    fs::create_directories(dir);
    Matrix mean = Matrix::Zero(model.dim(), model.dim());
    json per_traj = json::array();
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const Matrix s = mixture_statistic(bundles[i], burn_in);
        mean += s / static_cast<double>(bundles.size());
        per_traj.push_back({{"seed", bundles[i].seed}, {"statistic", matrix_to_json(s)}});
        auto f = open_output(dir / ("trajectory_" + std::to_string(i) + ".csv"));
        f << "# " << ctx.config.dump() << '\n';
        write_bundle_csv(f, bundles[i]);
    }
    const double rel = expected.norm() > 0.0 ? (mean - expected).norm() / expected.norm() : mean.norm();
    print_matrix("mixture statistic", mean, model.hbar());
    print_matrix("V_F - V_T", expected, model.hbar());
    std::cout << "relative Frobenius difference " << rel << '\n';

    const json doc = {{"config", ctx.config},
                      {"statistic", matrix_to_json(mean)},
                      {"expected", matrix_to_json(expected)},
                      {"relative_error", rel},
                      {"trajectories", per_traj}};
    std::ofstream(dir / "mixture.json") << doc.dump(2) << '\n';
    emit_json(o.json_stdout, "", doc);
    return kOk;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model, "model file, or 'opo' for the built-in oscillator")->capture_default_str();
    cmd->add_option("--hbar", o.hbar, "hbar for the built-in model")->capture_default_str();
    cmd->add_option("--unravelling", o.unravelling, "observed unravelling name")->capture_default_str();
    cmd->add_option("--t-max", o.t_max, "steady-state solver time limit");
    cmd->add_option("--tol", o.tol, "eigenvalue tolerance (default 1e-8 hbar)");
    cmd->add_option("--out", o.out, "output file or directory");
    cmd->add_flag("--json", o.json_stdout, "print JSON to stdout");
}

void add_source(CLI::App* cmd, Options& o) {
    cmd->add_option("--gamma", o.gamma, "pure-state parameter gamma");
    cmd->add_option("--delta", o.delta, "pure-state parameter delta");
    cmd->add_option("--cov-file", o.cov_file, "JSON covariance: [[...]] or {\"V\": [[...]], \"units\": \"hbar/2\"}");
    cmd->add_option("--fixture", o.fixture, "opo fixture: a, b, c, c-half, d");
    cmd->add_option("--unobserved", o.unobserved, "true state from this unobserved unravelling");
}

int run(int argc, char** argv) {
    CLI::App app{"Filtering, retrofiltering and smoothing for linear Gaussian quantum systems"};
    app.require_subcommand(1);
    Options o;

    auto* steady = app.add_subcommand("steady", "steady filtered and retrofiltered covariances");
    add_common(steady, o);
    steady->add_option("--dt", o.dt, "solver time step");

    auto* cls = app.add_subcommand("classify", "realizability report for a putative true covariance");
    add_common(cls, o);
    add_source(cls, o);

    auto* smooth = app.add_subcommand("smooth", "smoothed covariance for a putative true covariance");
    add_common(smooth, o);
    add_source(smooth, o);

    auto* sweep = app.add_subcommand("sweep", "(gamma, delta) grid scan to CSV");
    add_common(sweep, o);
    sweep->add_option("--grid", o.grid, "glo:ghi:gn,dlo:dhi:dn (default 0.05:1.2:200,-0.9:0.9:200)");

    auto* boundary = app.add_subcommand("boundary", "homodyne true states over unobserved phases");
    add_common(boundary, o);
    boundary->add_option("--phases", o.phases, "number of phases in [0, pi)")->capture_default_str();

    auto* fig2 = app.add_subcommand("fig2", "covariance ellipses before and after filtering");
    add_common(fig2, o);
    fig2->add_option("--dt", o.dt, "integration step (default 1e-3)");
    fig2->add_option("--duration", o.duration, "evolution time (default 0.8)");
    fig2->add_option("--seed", o.seed, "noise seed")->capture_default_str();
    fig2->add_option("--fixtures", o.fixtures, "comma-separated fixtures")->capture_default_str();
    fig2->add_option("--points", o.n_points, "points per contour")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "joint true/filtered trajectories and mixture statistic");
    add_common(sim, o);
    sim->add_option("--unobserved", o.unobserved, "unobserved unravelling, or 'none'");
    sim->add_option("--dt", o.dt, "integration step (default 1e-3)");
    sim->add_option("--duration", o.duration, "simulated time (default 100)");
    sim->add_option("--seed", o.seed, "base seed")->capture_default_str();
    sim->add_option("--n-traj", o.n_traj, "number of trajectories")->capture_default_str();
    sim->add_option("--burn-in", o.burn_in, "discarded initial time (default 10 damping times, at most half the run)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInput;
    }

    if (*steady) return cmd_steady(o);
    if (*cls) return cmd_classify(o);
    if (*smooth) return cmd_smooth(o);
    if (*sweep) return cmd_sweep(o);
    if (*boundary) return cmd_boundary(o);
    if (*fig2) return cmd_fig2(o);
    return cmd_simulate(o);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (residual " << e.residual() << " at t = " << e.time() << ")\n";
        return kConvergence;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConvergence;
    } catch (const SingularityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSingular;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
}

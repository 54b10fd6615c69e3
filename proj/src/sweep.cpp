#include "lgq/sweep.hpp"

#include "lgq/errors.hpp"
#include "lgq/smoothing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace lgq {

namespace {

double lerp(double lo, double hi, int i, int steps) {
    return i == steps - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
}

const char* flag(bool b) { return b ? "1" : "0"; }

SweepRow evaluate_point(const ReferenceSolutions& refs, const SystemModel& model, const Unravelling& u_o,
                        double gamma, double delta, double tol) {
    SweepRow row;
    row.gamma = gamma;
    row.delta = delta;
    const auto v_t = param_to_cov({gamma, delta}, model);
    row.report = classify(refs, model, u_o, v_t, tol);
    try {
        const auto v_s = smoothed_cov(refs.filtered, refs.retrofiltered, v_t);
        row.det_vs = smoothed_det_normalized(v_s, model);
    } catch (const SingularityError& e) {
        row.singular = true;
        row.error = e.what();
    }
    return row;
}

}  // namespace

void GridSpec::validate() const {
    if (!(gamma_lo < gamma_hi) || !(delta_lo < delta_hi)) {
        throw DomainError("grid ranges need lo < hi");
    }
    if (gamma_steps < 2 || delta_steps < 2) {
        throw DomainError("grid needs at least 2 steps per axis");
    }
    if (!(gamma_lo > 0.0)) {
        throw DomainError("gamma range must be positive");
    }
    if (!(delta_lo > -1.0) || !(delta_hi < 1.0)) {
        throw DomainError("delta range must lie inside (-1, 1)");
    }
}

double GridSpec::gamma_at(int i) const { return lerp(gamma_lo, gamma_hi, i, gamma_steps); }
double GridSpec::delta_at(int j) const { return lerp(delta_lo, delta_hi, j, delta_steps); }

GridSpec GridSpec::parse(const std::string& text) {
    GridSpec g;
    char c1 = 0, c2 = 0, comma = 0, c3 = 0, c4 = 0;
    std::istringstream in(text);
    in >> g.gamma_lo >> c1 >> g.gamma_hi >> c2 >> g.gamma_steps >> comma >> g.delta_lo >> c3 >> g.delta_hi >> c4 >>
        g.delta_steps;
    if (!in || c1 != ':' || c2 != ':' || comma != ',' || c3 != ':' || c4 != ':') {
        throw DomainError("grid spec must look like glo:ghi:gn,dlo:dhi:dn, got '" + text + "'");
    }
    in >> std::ws;
    if (!in.eof()) {
        throw DomainError("trailing characters in grid spec '" + text + "'");
    }
    g.validate();
    return g;
}

std::string GridSpec::to_string() const {
    const auto num = [](double x) {
        char buf[32];
        const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
        return std::string(buf, end);
    };
    return num(gamma_lo) + ':' + num(gamma_hi) + ':' + std::to_string(gamma_steps) + ',' + num(delta_lo) + ':' +
           num(delta_hi) + ':' + std::to_string(delta_steps);
}

std::vector<SweepRow> sweep_grid(const ReferenceSolutions& refs, const SystemModel& model, const Unravelling& u_o,
                                 const GridSpec& grid, double tol, unsigned threads) {
    grid.validate();
    if (model.modes() != 1) {
        throw DomainError("(gamma, delta) sweep is single-mode only");
    }
    std::vector<SweepRow> rows(grid.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads == 0 ? std::thread::hardware_concurrency() : threads,
                                        static_cast<unsigned>(grid.gamma_steps)));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = static_cast<int>(w); i < grid.gamma_steps; i += static_cast<int>(workers)) {
                    const double gamma = grid.gamma_at(i);
                    for (int j = 0; j < grid.delta_steps; ++j) {
                        rows[static_cast<std::size_t>(i) * grid.delta_steps + j] =
                            evaluate_point(refs, model, u_o, gamma, grid.delta_at(j), tol);
                    }
                }
            });
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_grid(const SystemModel& model, const Unravelling& u_o, const GridSpec& grid,
                                 const SteadySolveConfig& cfg, double tol, unsigned threads) {
    return sweep_grid(*cached_reference_solutions(model, u_o, cfg), model, u_o, grid, tol, threads);
}

std::vector<BoundaryPoint> homodyne_boundary(const SystemModel& model, const Unravelling& u_o, int n_phases,
                                             const SteadySolveConfig& cfg, double tol,
                                             std::optional<double> eta_u) {
    if (model.modes() != 1 || u_o.channels() != 1) {
        throw DomainError("homodyne boundary needs a single mode and a single observed channel");
    }
    if (n_phases < 1) {
        throw DomainError("need at least one phase");
    }
    const double eta = eta_u.value_or(1.0 - monitored_efficiency(u_o, model));
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw DomainError("unobserved efficiency must lie in (0, 1]");
    }
    std::vector<BoundaryPoint> out;
    out.reserve(static_cast<std::size_t>(n_phases));
    for (int k = 0; k < n_phases; ++k) {
        BoundaryPoint pt;
        pt.theta_u = std::numbers::pi * k / n_phases;
        try {
            const auto v_t = true_steady(model, u_o, make_homodyne(eta, pt.theta_u, 0, model), cfg);
            pt.params = cov_to_param(v_t, model);
            pt.check = check_realizable(model, u_o, v_t, tol);
            pt.v_t = v_t;
        } catch (const Error& e) {
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& header) {
    out.precision(17);
    out << "# " << header << '\n';
    out << "gamma,delta,pure,sclass,unc_fit,filt_fit,realizable,extremal,det_vs,singular\n";
    for (const auto& r : rows) {
        out << r.gamma << ',' << r.delta << ',' << flag(r.report.pure) << ',' << flag(r.report.uncertainty_ok)
            << ',' << flag(r.report.fits_unconditioned) << ',' << flag(r.report.fits_filtered) << ','
            << flag(r.report.realizable) << ',' << flag(r.report.extremal) << ',';
        if (r.det_vs) {
            out << *r.det_vs;
        } else {
            out << "nan";
        }
        out << ',' << flag(r.singular) << '\n';
    }
}

void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& points, const SystemModel& model,
                        const std::string& header) {
    out.precision(17);
    out << "# " << header << '\n';
    out << "theta_u,gamma,delta,v11,v12,v22,realizable,extremal,min_eig,error\n";
    const double unit = 0.5 * model.hbar();
    for (const auto& p : points) {
        out << p.theta_u << ',';
        if (p.v_t) {
            out << p.params.gamma << ',' << p.params.delta << ',' << (*p.v_t)(0, 0) / unit << ','
                << (*p.v_t)(0, 1) / unit << ',' << (*p.v_t)(1, 1) / unit << ',' << flag(p.check.realizable)
                << ',' << flag(p.check.extremal) << ',' << p.check.min_eig << ",\n";
        } else {
            out << "nan,nan,nan,nan,nan,0,0,nan,\"" << p.error << "\"\n";
        }
    }
}

}  // namespace lgq

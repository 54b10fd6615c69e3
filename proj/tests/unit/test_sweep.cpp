#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lgq/errors.hpp"
#include "lgq/presets.hpp"
#include "lgq/sweep.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace lgq;
using std::numbers::pi;

namespace {

struct Opo {
    SystemModel model = presets::opo_model(1.0);
    Unravelling u_o = presets::opo_observed(model);
    SteadySolveConfig cfg = default_solve_config(model);
    double tol = default_tolerance(model);
    std::shared_ptr<const ReferenceSolutions> refs = cached_reference_solutions(model, u_o, cfg);
};

GridSpec small_grid() { return GridSpec::parse("0.05:1.2:24,-0.9:0.9:19"); }

bool same_row(const SweepRow& a, const SweepRow& b) {
    return a.gamma == b.gamma && a.delta == b.delta && a.det_vs == b.det_vs && a.singular == b.singular &&
           a.report.realizable == b.report.realizable && a.report.fits_filtered == b.report.fits_filtered &&
           a.report.fits_unconditioned == b.report.fits_unconditioned && a.report.purity == b.report.purity;
}

}  // namespace

TEST_CASE("grid spec") {
    const GridSpec def;
    CHECK(def.size() == 40000);
    CHECK(def.gamma_at(0) == 0.05);
    CHECK(def.gamma_at(199) == 1.2);
    CHECK(def.delta_at(0) == -0.9);
    CHECK(def.delta_at(199) == 0.9);

    const auto g = GridSpec::parse("0.1:1:10,-0.5:0.5:11");
    CHECK(g.gamma_steps == 10);
    CHECK(g.delta_at(5) == doctest::Approx(0.0));
    CHECK(GridSpec::parse(g.to_string()).to_string() == g.to_string());

    CHECK_THROWS_AS(GridSpec::parse("0.1:1:10"), DomainError);
    CHECK_THROWS_AS(GridSpec::parse("0.1:1:10,-0.5:0.5:11x"), DomainError);
    CHECK_THROWS_AS(GridSpec::parse("1:0.1:10,-0.5:0.5:11"), DomainError);
    CHECK_THROWS_AS(GridSpec::parse("0.1:1:1,-0.5:0.5:11"), DomainError);
    CHECK_THROWS_AS(GridSpec::parse("0:1:10,-0.5:0.5:11"), DomainError);
    CHECK_THROWS_AS(GridSpec::parse("0.1:1:10,-1:0.5:11"), DomainError);
}

TEST_CASE("rows are row-major and independent of thread count") {
    const Opo o;
    const auto grid = small_grid();
    const auto one = sweep_grid(*o.refs, o.model, o.u_o, grid, o.tol, 1);
    const auto many = sweep_grid(*o.refs, o.model, o.u_o, grid, o.tol, 7);
    REQUIRE(one.size() == grid.size());
    REQUIRE(many.size() == grid.size());
    for (int i = 0; i < grid.gamma_steps; ++i) {
        for (int j = 0; j < grid.delta_steps; ++j) {
            const auto& r = one[static_cast<std::size_t>(i) * grid.delta_steps + j];
            CHECK(r.gamma == grid.gamma_at(i));
            CHECK(r.delta == grid.delta_at(j));
        }
    }
    for (std::size_t k = 0; k < one.size(); ++k) CHECK(same_row(one[k], many[k]));
}

TEST_CASE("tiers nest and the smoothed determinant region contains the filtered-fit region") {
    const Opo o;
    const auto rows = sweep_grid(*o.refs, o.model, o.u_o, GridSpec::parse("0.05:1.2:40,-0.9:0.9:40"), o.tol);
    int outside_filtered_but_sclass = 0, beyond_half = 0;
    for (const auto& r : rows) {
        CHECK(r.report.pure);
        if (r.report.realizable) CHECK(r.report.fits_filtered);
        if (r.report.fits_filtered) CHECK(r.report.fits_unconditioned);
        CHECK(r.report.fits_unconditioned == (r.gamma <= 0.5 + 2 * o.tol / o.model.hbar()));
        if (r.singular) continue;
        REQUIRE(r.det_vs.has_value());
        if (r.report.fits_filtered) CHECK(*r.det_vs >= 1.0 - 1e-9);
        if (!r.report.fits_filtered && *r.det_vs >= 1.0) ++outside_filtered_but_sclass;
        if (r.gamma >= 0.5 && *r.det_vs >= 1.0) ++beyond_half;
    }
    CHECK(outside_filtered_but_sclass > 0);
    CHECK(beyond_half > 0);
}

TEST_CASE("marker point at gamma 0.41, delta 0") {
    const Opo o;
    GridSpec g;
    g.gamma_lo = 0.40;
    g.gamma_hi = 0.42;
    g.gamma_steps = 3;
    g.delta_lo = -0.01;
    g.delta_hi = 0.01;
    g.delta_steps = 3;
    const auto rows = sweep_grid(*o.refs, o.model, o.u_o, g, o.tol);
    const auto& centre = rows[4];
    CHECK(centre.gamma == doctest::Approx(0.41));
    CHECK(centre.delta == doctest::Approx(0.0));
    CHECK(centre.report.realizable);
    CHECK(*centre.det_vs > 1.0);
}

TEST_CASE("homodyne boundary") {
    const Opo o;
    const auto pts = homodyne_boundary(o.model, o.u_o, 8, o.cfg, o.tol);
    REQUIRE(pts.size() == 8);
    for (const auto& p : pts) {
        REQUIRE(p.error.empty());
        CHECK(p.check.realizable);
        CHECK(p.check.extremal);
        CHECK(std::abs(p.check.min_eig) <= 1e-6 * o.model.hbar());
    }
    // 7π/8 is the same quadrature as −π/8.
    CHECK(pts[7].theta_u == doctest::Approx(7 * pi / 8));
    CHECK(pts[7].params.gamma == doctest::Approx(0.41).epsilon(0.01));
    CHECK(std::abs(pts[7].params.delta) < 0.01);

    const auto het = true_steady(o.model, o.u_o, presets::opo_unobserved_heterodyne(o.model), o.cfg);
    const auto het_check = check_realizable(o.model, o.u_o, het, o.tol);
    CHECK(het_check.realizable);
    CHECK_FALSE(het_check.extremal);
    CHECK(het_check.min_eig > 1e-6 * o.model.hbar());

    CHECK_THROWS_AS(homodyne_boundary(o.model, o.u_o, 0, o.cfg, o.tol), DomainError);
    CHECK_THROWS_AS(homodyne_boundary(o.model, presets::opo_unobserved_heterodyne(o.model), 4, o.cfg, o.tol),
                    DomainError);
}

TEST_CASE("csv output") {
    const Opo o;
    const auto rows = sweep_grid(*o.refs, o.model, o.u_o, GridSpec::parse("0.1:1:2,-0.5:0.5:3"), o.tol);
    std::ostringstream out;
    write_sweep_csv(out, rows, "model=opo");
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# model=opo");
    std::getline(in, line);
    CHECK(line == "gamma,delta,pure,sclass,unc_fit,filt_fit,realizable,extremal,det_vs,singular");
    int n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == 6);

    std::ostringstream bout;
    write_boundary_csv(bout, homodyne_boundary(o.model, o.u_o, 4, o.cfg, o.tol), o.model, "x");
    std::istringstream bin(bout.str());
    std::getline(bin, line);
    std::getline(bin, line);
    CHECK(line.rfind("theta_u,gamma,delta", 0) == 0);
}

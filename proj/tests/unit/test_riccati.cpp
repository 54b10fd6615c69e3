#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lgq/errors.hpp"
#include "lgq/presets.hpp"
#include "lgq/realizability.hpp"
#include "lgq/riccati.hpp"

#include <cmath>
#include <numbers>

using namespace lgq;
using std::numbers::pi;

namespace {

// Residual written out entry by entry, independent of the library's matrix expression.
Matrix rhs_oracle(const Matrix& v, const Matrix& a, const Matrix& d, const Matrix& c, const Matrix& g, int sign) {
    const auto n = v.rows();
    const auto m = c.rows();
    Matrix k(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index r = 0; r < m; ++r) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) s += v(i, j) * c(r, j);
            k(i, r) = s + sign * g(r, i);
        }
    }
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double s = d(i, j);
            for (Eigen::Index l = 0; l < n; ++l) s += a(i, l) * v(l, j) + v(i, l) * a(j, l);
            for (Eigen::Index r = 0; r < m; ++r) s -= k(i, r) * k(j, r);
            out(i, j) = s;
        }
    }
    return out;
}

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// Stabilizing solutions of the algebraic Riccati equations, computed offline with an
// algebraic (Schur-method) CARE solver for the OPO with η_o = 0.5, θ_o = 3π/8, ħ = 1.
const Matrix kFilteredHbar1 = mat2(2.0136697460629254, 0.1383843269570773, 0.1383843269570773, 0.2308497780526365);
const Matrix kRetroHbar1 = mat2(2.013669746062926, -1.806562964876377, -1.806562964876377, 3.0136697460629227);
const Matrix kTrueHeterodyneHbar1 =
    mat2(1.3301701769687875, 0.07857299921799485, 0.07857299921799485, 0.19258717466503705);
// Same at ħ = 2.
const Matrix kFilteredHbar2 = mat2(4.027339492125847, 0.2767686539141554, 0.2767686539141554, 0.461699556105273);
const Matrix kRetroHbar2 = mat2(4.027339492125847, -3.6131259297527527, -3.6131259297527527, 6.027339492125848);

}  // namespace

TEST_CASE("default solver configuration scales with the slowest damping time") {
    const auto opo = presets::opo_model(1.0);
    CHECK(slowest_damping_time(opo) == doctest::Approx(0.5));
    const auto cfg = default_solve_config(opo);
    CHECK(cfg.dt == doctest::Approx(5e-5));
    CHECK(cfg.t_max == doctest::Approx(100.0));
    CHECK(cfg.tol == 1e-10);

    const SystemModel free(1, 1.0, Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    CHECK(slowest_damping_time(free) == 1.0);

    CHECK_THROWS_AS((SteadySolveConfig{1.0, 0.5, 1e-10}.validate()), DomainError);
    CHECK_THROWS_AS((SteadySolveConfig{1e-3, 1.0, 0.0}.validate()), DomainError);
}

TEST_CASE("filtered steady state of the OPO") {
    for (const double hbar : {1.0, 2.0}) {
        const auto model = presets::opo_model(hbar);
        const auto u_o = presets::opo_observed(model);
        const auto cfg = default_solve_config(model);
        const auto v_f = filtered_steady(model, u_o, cfg);

        const Matrix r = rhs_oracle(v_f.matrix(), model.drift(), model.diffusion(), u_o.c(), u_o.gamma(), +1);
        CHECK(r.norm() <= cfg.tol * 1.01);
        CHECK(is_psd(v_f.matrix(), 0.0).ok);
        const Matrix& expected = hbar == 1.0 ? kFilteredHbar1 : kFilteredHbar2;
        CHECK((v_f.matrix() - expected).norm() < 1e-9);
    }
}

TEST_CASE("riccati_rhs agrees with an entrywise evaluation") {
    const auto model = presets::opo_model(1.7);
    const auto u = stack(presets::opo_observed(model), presets::opo_unobserved_heterodyne(model));
    for (const char f : {'a', 'b', 'c', 'd'}) {
        const auto v = presets::opo_fixture(f, model.hbar());
        const Matrix plus = rhs_oracle(v.matrix(), model.drift(), model.diffusion(), u.c(), u.gamma(), +1);
        const Matrix minus = rhs_oracle(v.matrix(), model.drift(), model.diffusion(), u.c(), u.gamma(), -1);
        CHECK((riccati_rhs(v, model, u, KappaSign::plus) - plus).norm() < 1e-13);
        CHECK((riccati_rhs(v, model, u, KappaSign::minus) - minus).norm() < 1e-13);
    }
}

TEST_CASE("without measurement the filter equation is the Lyapunov equation") {
    const Matrix a = mat2(-1.0, 0.5, -0.3, -2.0);
    const Matrix d = mat2(1.0, 0.2, 0.2, 0.5);
    const SystemModel model(1, 1.0, a, d);
    const auto v = filtered_steady(model, Unravelling::empty(2), default_solve_config(model));
    // Offline Bartels–Stewart solution of A X + X Aᵀ + D = 0.
    const Matrix expected = mat2(0.5174418604651163, 0.03488372093023258, 0.03488372093023258, 0.11976744186046512);
    CHECK((v.matrix() - expected).norm() < 1e-9);
    CHECK((solve_lyapunov(a, d) - expected).norm() < 1e-13);
}

TEST_CASE("retrofiltered steady state") {
    const auto model = presets::opo_model(1.0);
    const auto u_o = presets::opo_observed(model);
    const auto cfg = default_solve_config(model);
    const auto v_r = retrofiltered_steady(model, u_o, cfg);
    const Matrix r = rhs_oracle(v_r.matrix(), -model.drift(), model.diffusion(), u_o.c(), u_o.gamma(), -1);
    CHECK(r.norm() <= cfg.tol * 1.01);
    CHECK((retrofilter_rhs(v_r, model, u_o) - r).norm() < 1e-13);
    CHECK((v_r.matrix() - kRetroHbar1).norm() < 1e-9);
    CHECK(is_psd(v_r.matrix(), 0.0).ok);

    const auto model2 = presets::opo_model(2.0);
    const auto v_r2 = retrofiltered_steady(model2, presets::opo_observed(model2), default_solve_config(model2));
    CHECK((v_r2.matrix() - kRetroHbar2).norm() < 2e-9);

    SUBCASE("no back-action and no drift makes it equal to the filtered solution") {
        const SystemModel still(1, 1.0, Matrix::Zero(2, 2), Matrix::Identity(2, 2));
        const auto het = make_heterodyne(1.0, 0.0, 0, still);
        const Unravelling plain(het.c(), Matrix::Zero(2, 2));
        const auto c = default_solve_config(still);
        CHECK(retrofiltered_steady(still, plain, c) == filtered_steady(still, plain, c));
    }
}

TEST_CASE("two-filter combination reproduces the classical steady smoother") {
    // Damped toy without back-action. The steady Rauch–Tung–Striebel covariance P solves
    // (A + D P_F⁻¹) P + P (A + D P_F⁻¹)ᵀ = D; value computed offline.
    const SystemModel model(1, 1.0, mat2(-1, 0.5, -0.3, -2), mat2(1, 0.2, 0.2, 0.5));
    const Unravelling u(mat2(1.0, 0.3, 0.2, 1.0), Matrix::Zero(2, 2));
    const auto cfg = default_solve_config(model);
    const Matrix p_f = filtered_steady(model, u, cfg).matrix();
    const Matrix p_b = retrofiltered_steady(model, u, cfg).matrix();
    const Matrix expected_f = mat2(0.41763067532591813, 0.03031602645881121, 0.03031602645881121, 0.11568966075020849);
    const Matrix expected_s = mat2(0.3576775184911004, 0.0187233901918509, 0.0187233901918509, 0.11083764409943822);
    CHECK((p_f - expected_f).norm() < 1e-9);
    const Matrix p_s = (p_f.inverse() + p_b.inverse()).inverse();
    CHECK((p_s - expected_s).norm() < 1e-9);
}

TEST_CASE("true steady state") {
    const auto model = presets::opo_model(1.0);
    const auto u_o = presets::opo_observed(model);
    const auto cfg = default_solve_config(model);

    SUBCASE("homodyne at -pi/8 reproduces the tabulated covariance") {
        const auto v_t = true_steady(model, u_o, presets::opo_unobserved_homodyne(model), cfg);
        const auto v_a = presets::opo_fixture('a');
        CHECK((v_t.matrix() - v_a.matrix()).cwiseAbs().maxCoeff() <= 0.01 * 0.5);
        CHECK(v_t(0, 0) == doctest::Approx(0.5 * (1.0 + std::sqrt(2.0))).epsilon(1e-9));
        CHECK(v_t(1, 1) == doctest::Approx(0.5 * (std::sqrt(2.0) - 1.0)).epsilon(1e-9));
        CHECK(purity(v_t, model) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("heterodyne completion") {
        const auto v_t = true_steady(model, u_o, presets::opo_unobserved_heterodyne(model), cfg);
        CHECK((v_t.matrix() - kTrueHeterodyneHbar1).norm() < 1e-9);
        CHECK(is_psd(realizability_residual(v_t, model, u_o), 0.0).min_eig > 1e-3);
        CHECK(purity(v_t, model) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("empty completion is the filtered state") {
        CHECK(true_steady(model, u_o, Unravelling::empty(2), cfg) == filtered_steady(model, u_o, cfg));
    }
    SUBCASE("same code path as filtering the stacked record") {
        const auto u_u = presets::opo_unobserved_heterodyne(model);
        CHECK(true_steady(model, u_o, u_u, cfg) == filtered_steady(model, stack(u_o, u_u), cfg));
    }
    SUBCASE("filtered state contains every true state") {
        const auto v_f = filtered_steady(model, u_o, cfg);
        for (int k = 0; k < 8; ++k) {
            const auto u_u = make_homodyne(0.5, pi * k / 8, 0, model);
            const auto v_t = true_steady(model, u_o, u_u, cfg);
            CHECK(fits_within(v_f, v_t, 1e-8).ok);
        }
        CHECK(fits_within(v_f, true_steady(model, u_o, presets::opo_unobserved_heterodyne(model), cfg), 1e-8).ok);
    }
}

TEST_CASE("steady solutions do not depend on the step size") {
    const auto model = presets::opo_model(1.0);
    const auto u_o = presets::opo_observed(model);
    auto cfg = default_solve_config(model);
    const auto coarse_f = filtered_steady(model, u_o, cfg);
    const auto coarse_r = retrofiltered_steady(model, u_o, cfg);
    cfg.dt /= 2;
    CHECK((filtered_steady(model, u_o, cfg).matrix() - coarse_f.matrix()).norm() <= 1e-8);
    CHECK((retrofiltered_steady(model, u_o, cfg).matrix() - coarse_r.matrix()).norm() <= 1e-8);
}

TEST_CASE("non-convergence is reported with the last residual") {
    const SystemModel unstable(1, 1.0, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const SteadySolveConfig cfg{1e-3, 5.0, 1e-10};
    try {
        (void)filtered_steady(unstable, Unravelling::empty(2), cfg);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 1.0);
        CHECK(e.time() == 5.0);
    }

    const auto opo = presets::opo_model(1.0);
    CHECK_THROWS_AS(filtered_steady(opo, Unravelling::empty(2), default_solve_config(opo)), ConvergenceError);
    CHECK_THROWS_AS(filtered_steady(opo, Unravelling::empty(4), default_solve_config(opo)), DomainError);
}

TEST_CASE("unconditioned bound") {
    SUBCASE("OPO: only the damped quadrature is bounded") {
        const auto model = presets::opo_model(1.0);
        const auto b = unconditioned_bound(model);
        REQUIRE(b.finite_directions() == 1);
        CHECK(b.unbounded_directions() == 1);
        CHECK(std::abs(b.basis(0, 0)) < 1e-12);
        CHECK(std::abs(b.basis(1, 0)) == doctest::Approx(1.0));
        CHECK(b.cov(0, 0) == doctest::Approx(0.25));  // (ħ/2)·0.5
        CHECK_FALSE(b.full().has_value());
    }
    SUBCASE("fully damped") {
        const SystemModel model(1, 1.0, -Matrix::Identity(2, 2), Matrix::Identity(2, 2));
        const auto b = unconditioned_bound(model);
        REQUIRE(b.full().has_value());
        CHECK(b.full()->matrix().isApprox(0.5 * Matrix::Identity(2, 2)));
    }
    SUBCASE("nothing damped") {
        const SystemModel model(1, 1.0, mat2(0.1, 1.0, -1.0, 0.0), Matrix::Identity(2, 2));
        const auto b = unconditioned_bound(model);
        CHECK(b.finite_directions() == 0);
        CHECK(fits_within(b, CovMatrix(Matrix(1e6 * Matrix::Identity(2, 2))), 1e-8).ok);
    }
    SUBCASE("non-normal drift: the bounded coordinate is a left eigenvector") {
        // A = [[0.5, 0], [1, -1]]: wᵀA = -wᵀ for w = (1, -1.5).
        const Matrix d = mat2(1.0, 0.3, 0.3, 2.0);
        const SystemModel model(1, 1.0, mat2(0.5, 0.0, 1.0, -1.0), d);
        const auto b = unconditioned_bound(model);
        REQUIRE(b.finite_directions() == 1);
        Eigen::Vector2d w(1.0, -1.5);
        w.normalize();
        CHECK(std::abs(std::abs(b.basis.col(0).dot(w)) - 1.0) < 1e-12);
        CHECK(b.cov(0, 0) == doctest::Approx(w.dot(d * w) / 2.0));
    }
}

TEST_CASE("covariance integration") {
    const auto model = presets::opo_model(1.0);
    const auto u_o = presets::opo_observed(model);
    const auto v_f = filtered_steady(model, u_o, default_solve_config(model));

    SUBCASE("fixed point") {
        const auto path = integrate_cov(model, u_o, v_f, 1e-3, 1.0);
        CHECK(path.size() == 1001);
        CHECK(path.front() == v_f);
        CHECK((path.back().matrix() - v_f.matrix()).norm() < 1e-10);
    }
    SUBCASE("zero duration") {
        const auto path = integrate_cov(model, u_o, presets::opo_fixture('b'), 1e-3, 0.0);
        REQUIRE(path.size() == 1);
        CHECK(path.front() == presets::opo_fixture('b'));
    }
    SUBCASE("realizable covariance fits inside its evolved filter") {
        const auto v_a = presets::opo_fixture('a');
        const auto path = integrate_cov(model, u_o, v_a, 1e-4, 0.8);
        CHECK(is_psd(path.back().matrix() - v_a.matrix(), 0.0).ok);
    }
    SUBCASE("filter-fitting but unrealizable covariance pokes out") {
        const auto v_b = presets::opo_fixture('b');
        const auto path = integrate_cov(model, u_o, v_b, 1e-4, 0.8);
        CHECK(is_psd(path.back().matrix() - v_b.matrix(), 0.0).min_eig < 0.0);
    }
    SUBCASE("overflow is reported") {
        const CovMatrix huge(Matrix(1e200 * Matrix::Identity(2, 2)));
        CHECK_THROWS_AS(integrate_cov(model, u_o, huge, 1e-3, 1.0), NumericError);
    }
    CHECK_THROWS_AS(integrate_cov(model, u_o, v_f, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(integrate_cov(model, u_o, v_f, 1e-3, -1.0), DomainError);
}

TEST_CASE("realizability residual") {
    const auto model = presets::opo_model(1.0);
    const auto u_o = presets::opo_observed(model);
    const auto v_f = filtered_steady(model, u_o, default_solve_config(model));
    CHECK(realizability_residual(v_f, model, u_o).norm() <= 1e-10);
    CHECK(is_psd(realizability_residual(presets::opo_fixture('a'), model, u_o), 0.0).ok);
    CHECK(is_psd(realizability_residual(presets::opo_fixture('d'), model, u_o), 0.0).min_eig < 0.0);
    const Matrix r = realizability_residual(presets::opo_fixture('b'), model, u_o);
    CHECK(r == Matrix(r.transpose()));
}

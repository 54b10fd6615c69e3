#pragma once

#include "lgq/model.hpp"

#include <optional>
#include <vector>

namespace lgq {

struct SteadySolveConfig {
    double dt = 1e-4;
    double t_max = 200.0;
    double tol = 1e-10;  ///< Frobenius-norm residual threshold

    /// Throws DomainError unless 0 < dt < t_max and tol > 0.
    void validate() const;
};

/// Slowest damping time 1/|Re λ| over eigenvalues of A with nonzero real part (1 if there are none).
double slowest_damping_time(const SystemModel& model);

/// dt = 1e-4·τ, t_max = 200·τ, tol = 1e-10 with τ the slowest damping time.
SteadySolveConfig default_solve_config(const SystemModel& model);

/// A V + V Aᵀ + D − K±[V] K±[V]ᵀ, symmetrized.
Matrix riccati_rhs(const CovMatrix& v, const SystemModel& model, const Unravelling& u, KappaSign sign);

/// Residual of the realizability inequality, the K⁺ right-hand side evaluated at a putative true covariance.
Matrix realizability_residual(const CovMatrix& v, const SystemModel& model, const Unravelling& u_o);

/// Steady filtered covariance conditioned on the past record of `u_o`.
/// Integrates the K⁺ Riccati equation forward from (ħ/2)I until the residual is below cfg.tol.
/// Throws ConvergenceError (carrying the last residual) if t_max is reached first.
CovMatrix filtered_steady(const SystemModel& model, const Unravelling& u_o, const SteadySolveConfig& cfg);

/// −A V − V Aᵀ + D − K⁻[V] K⁻[V]ᵀ, symmetrized. The retrofilter runs backward in time, so the drift is reversed.
Matrix retrofilter_rhs(const CovMatrix& v, const SystemModel& model, const Unravelling& u_o);

/// Steady retrofiltered covariance: zero of retrofilter_rhs, found the same way as filtered_steady.
CovMatrix retrofiltered_steady(const SystemModel& model, const Unravelling& u_o,
                               const SteadySolveConfig& cfg);

/// Steady true covariance under the combined observed + unobserved monitoring.
CovMatrix true_steady(const SystemModel& model, const Unravelling& u_o, const Unravelling& u_u,
                      const SteadySolveConfig& cfg);

/**
 * Steady unconditioned covariance restricted to the directions whose
 * variance stays finite.
 *
 * `basis` (2N×k, orthonormal columns) spans the coordinates z = basisᵀx
 * that evolve autonomously under the strictly damped part of A; `cov` is
 * their stationary covariance. The remaining 2N−k directions have
 * unbounded variance and are treated as satisfied by every fit check.
 */
struct UnconditionedBound {
    Matrix basis;
    Matrix cov;

    Eigen::Index dim() const noexcept { return basis.rows(); }
    Eigen::Index finite_directions() const noexcept { return basis.cols(); }
    Eigen::Index unbounded_directions() const noexcept { return basis.rows() - basis.cols(); }
    bool fully_finite() const noexcept { return basis.cols() == basis.rows(); }

    /// The full 2N×2N steady covariance when every direction is damped.
    std::optional<CovMatrix> full() const;
};

UnconditionedBound unconditioned_bound(const SystemModel& model);

/// Explicit Euler path of the K⁺ Riccati equation from v0; element 0 is v0, one entry per step.
std::vector<CovMatrix> integrate_cov(const SystemModel& model, const Unravelling& u, const CovMatrix& v0,
                                     double dt, double duration);

/// Solves A X + X Aᵀ + Q = 0 for stable A.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

}  // namespace lgq

#include "lgq/riccati.hpp"

#include "lgq/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace lgq {

namespace {

// Eigenvalues with |Re λ| below this are treated as undamped.
double damping_threshold(const Matrix& a) {
    const double scale = a.size() == 0 ? 1.0 : std::max(1.0, a.cwiseAbs().maxCoeff());
    return 1e-12 * scale;
}

struct RiccatiTerms {
    Matrix a;
    Matrix d;
    Matrix c;
    Matrix gamma_t;
    double sign;
};

RiccatiTerms make_terms(const SystemModel& model, const Unravelling& u, KappaSign sign, bool reversed = false) {
    if (u.dim() != model.dim()) {
        throw DomainError("unravelling acts on " + std::to_string(u.dim()) + " phase-space dimensions, model has " +
                          std::to_string(model.dim()));
    }
    return {reversed ? Matrix(-model.drift()) : model.drift(), model.diffusion(), u.c(), u.gamma().transpose(),
            sign == KappaSign::plus ? 1.0 : -1.0};
}

Matrix rhs(const Matrix& v, const RiccatiTerms& t) {
    const Matrix k = v * t.c.transpose() + t.sign * t.gamma_t;
    Matrix r = t.a * v + v * t.a.transpose() + t.d - k * k.transpose();
    return 0.5 * (r + r.transpose());
}

CovMatrix solve_steady(const RiccatiTerms& terms, const SystemModel& model, const SteadySolveConfig& cfg,
                       const char* label) {
    cfg.validate();
    Matrix v = 0.5 * model.hbar() * Matrix::Identity(model.dim(), model.dim());

    const auto steps = static_cast<long long>(std::ceil(cfg.t_max / cfg.dt));
    double residual = std::numeric_limits<double>::infinity();
    for (long long step = 0; step <= steps; ++step) {
        const Matrix r = rhs(v, terms);
        residual = r.norm();
        if (!std::isfinite(residual)) {
            throw ConvergenceError(std::string(label) + " Riccati integration diverged at t = " +
                                       std::to_string(static_cast<double>(step) * cfg.dt),
                                   residual, static_cast<double>(step) * cfg.dt);
        }
        if (residual <= cfg.tol) {
            return CovMatrix(v);
        }
        v += cfg.dt * r;
    }
    throw ConvergenceError(std::string(label) + " Riccati integration did not converge by t_max = " +
                               std::to_string(cfg.t_max) + " (residual " + std::to_string(residual) + ")",
                           residual, cfg.t_max);
}

// Orthonormal basis for the invariant subspace of Aᵀ belonging to eigenvalues with Re λ < 0.
// Its range is the range of ∏(Aᵀ − λᵢ) over the remaining eigenvalues (Cayley–Hamilton).
Matrix damped_coordinate_basis(const Matrix& a) {
    const auto n = a.rows();
    Eigen::EigenSolver<Matrix> es(a, false);
    const double thresh = damping_threshold(a);

    using CMatrix = Eigen::MatrixXcd;
    const CMatrix at = a.transpose().cast<std::complex<double>>();
    CMatrix p = CMatrix::Identity(n, n);
    Eigen::Index damped = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::complex<double> lambda = es.eigenvalues()(i);
        if (lambda.real() < -thresh) {
            ++damped;
        } else {
            p = p * (at - lambda * CMatrix::Identity(n, n));
        }
    }
    if (damped == n) {
        return Matrix::Identity(n, n);
    }
    if (damped == 0) {
        return Matrix(n, 0);
    }
    const Matrix range = p.real();
    Eigen::JacobiSVD<Matrix> svd(range, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(damped);
}

}  // namespace

void SteadySolveConfig::validate() const {
    if (!(dt > 0.0) || !(t_max > 0.0) || !(dt < t_max)) {
        throw DomainError("solver config requires 0 < dt < t_max");
    }
    if (!(tol > 0.0)) {
        throw DomainError("solver tolerance must be positive");
    }
}

double slowest_damping_time(const SystemModel& model) {
    Eigen::EigenSolver<Matrix> es(model.drift(), false);
    const double thresh = damping_threshold(model.drift());
    double slowest_rate = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = std::abs(es.eigenvalues()(i).real());
        if (re > thresh) {
            slowest_rate = std::min(slowest_rate, re);
        }
    }
    return std::isfinite(slowest_rate) ? 1.0 / slowest_rate : 1.0;
}

SteadySolveConfig default_solve_config(const SystemModel& model) {
    const double tau = slowest_damping_time(model);
    return {1e-4 * tau, 200.0 * tau, 1e-10};
}

Matrix riccati_rhs(const CovMatrix& v, const SystemModel& model, const Unravelling& u, KappaSign sign) {
    if (v.dim() != model.dim()) {
        throw DomainError("covariance dimension does not match model");
    }
    return rhs(v.matrix(), make_terms(model, u, sign));
}

Matrix retrofilter_rhs(const CovMatrix& v, const SystemModel& model, const Unravelling& u_o) {
    if (v.dim() != model.dim()) {
        throw DomainError("covariance dimension does not match model");
    }
    return rhs(v.matrix(), make_terms(model, u_o, KappaSign::minus, true));
}

Matrix realizability_residual(const CovMatrix& v, const SystemModel& model, const Unravelling& u_o) {
    return riccati_rhs(v, model, u_o, KappaSign::plus);
}

CovMatrix filtered_steady(const SystemModel& model, const Unravelling& u_o, const SteadySolveConfig& cfg) {
    return solve_steady(make_terms(model, u_o, KappaSign::plus), model, cfg, "filtered");
}

CovMatrix retrofiltered_steady(const SystemModel& model, const Unravelling& u_o,
                               const SteadySolveConfig& cfg) {
    return solve_steady(make_terms(model, u_o, KappaSign::minus, true), model, cfg, "retrofiltered");
}

CovMatrix true_steady(const SystemModel& model, const Unravelling& u_o, const Unravelling& u_u,
                      const SteadySolveConfig& cfg) {
    return filtered_steady(model, stack(u_o, u_u), cfg);
}

std::optional<CovMatrix> UnconditionedBound::full() const {
    if (!fully_finite()) {
        return std::nullopt;
    }
    return CovMatrix::symmetrized(basis * cov * basis.transpose());
}

UnconditionedBound unconditioned_bound(const SystemModel& model) {
    UnconditionedBound bound;
    bound.basis = damped_coordinate_basis(model.drift());
    const auto k = bound.basis.cols();
    if (k == 0) {
        bound.cov = Matrix(0, 0);
        return bound;
    }
    const Matrix reduced_drift = bound.basis.transpose() * model.drift() * bound.basis;
    const Matrix reduced_diffusion = bound.basis.transpose() * model.diffusion() * bound.basis;
    const Matrix x = solve_lyapunov(reduced_drift, reduced_diffusion);
    bound.cov = 0.5 * (x + x.transpose());
    return bound;
}

std::vector<CovMatrix> integrate_cov(const SystemModel& model, const Unravelling& u, const CovMatrix& v0,
                                     double dt, double duration) {
    if (!(dt > 0.0) || !(duration >= 0.0)) {
        throw DomainError("integrate_cov requires dt > 0 and a non-negative duration");
    }
    if (v0.dim() != model.dim()) {
        throw DomainError("initial covariance dimension does not match model");
    }
    const auto terms = make_terms(model, u, KappaSign::plus);
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    std::vector<CovMatrix> path;
    path.reserve(steps + 1);
    path.push_back(v0);
    Matrix v = v0.matrix();
    for (std::size_t i = 0; i < steps; ++i) {
        v += dt * rhs(v, terms);
        if (!v.allFinite()) {
            throw NumericError("covariance became non-finite at step " + std::to_string(i + 1));
        }
        path.push_back(CovMatrix(v));
    }
    return path;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const auto n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) {
        throw DomainError("Lyapunov operands must be square and of equal size");
    }
    // vec(A X + X Aᵀ) = (I ⊗ A + A ⊗ I) vec(X), column-major vec.
    const Matrix eye = Matrix::Identity(n, n);
    Matrix op = Matrix::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            op.block(i * n, j * n, n, n) += eye(i, j) * a + a(i, j) * eye;
        }
    }
    const Vector rhs_vec = -Eigen::Map<const Vector>(q.data(), n * n);
    Eigen::FullPivLU<Matrix> lu(op);
    if (!lu.isInvertible()) {
        throw SingularityError("Lyapunov operator is singular (A has eigenvalues summing to zero)",
                               "I⊗A + A⊗I", std::numeric_limits<double>::infinity());
    }
    const Vector x = lu.solve(rhs_vec);
    return Eigen::Map<const Matrix>(x.data(), n, n);
}

}  // namespace lgq

#include "lgq/smoothing.hpp"

#include "lgq/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace lgq {

Matrix symmetric_inverse(const Matrix& m, const std::string& label) {
    if (m.rows() != m.cols()) {
        throw DomainError(label + " is not square");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    const Vector abs_eigs = eig.eigenvalues().cwiseAbs();
    const double largest = abs_eigs.maxCoeff();
    const double smallest = abs_eigs.minCoeff();
    const double condition =
        smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
    if (!(condition <= kMaxCondition)) {
        throw SingularityError(label + " is singular or ill-conditioned (condition number " +
                                   std::to_string(condition) + ")",
                               label, condition);
    }
    const Matrix& q = eig.eigenvectors();
    Matrix inv = q * eig.eigenvalues().cwiseInverse().asDiagonal() * q.transpose();
    return 0.5 * (inv + inv.transpose());
}

CovMatrix smoothed_cov(const CovMatrix& v_f, const CovMatrix& v_r, const CovMatrix& v_t) {
    if (v_f.dim() != v_t.dim() || v_r.dim() != v_t.dim()) {
        throw DomainError("smoothed_cov: dimension mismatch");
    }
    const Matrix gap_inv = symmetric_inverse(v_f.matrix() - v_t.matrix(), "V_F - V_T");
    const Matrix retro_inv = symmetric_inverse(v_r.matrix() + v_t.matrix(), "V_R + V_T");
    const Matrix inner = symmetric_inverse(gap_inv + retro_inv, "(V_F - V_T)^-1 + (V_R + V_T)^-1");
    return CovMatrix::symmetrized(inner + v_t.matrix());
}

Matrix filtered_gap(const CovMatrix& v_f, const CovMatrix& v_r, const CovMatrix& v_t) {
    const Matrix gap = v_f.matrix() - v_t.matrix();
    const Matrix m = gap * symmetric_inverse(v_r.matrix() + v_f.matrix(), "V_R + V_F") * gap;
    return 0.5 * (m + m.transpose());
}

double smoothed_det_normalized(const CovMatrix& v_s, const SystemModel& model) {
    if (v_s.dim() != model.dim()) {
        throw DomainError("covariance dimension does not match model");
    }
    return std::pow(2.0 / model.hbar(), 2 * model.modes()) * v_s.matrix().determinant();
}

bool theorem_b_check(const ReferenceSolutions& refs, const SystemModel& model, const CovMatrix& v_t,
                     double tol) {
    const auto v_s = smoothed_cov(refs.filtered, refs.retrofiltered, v_t);
    return uncertainty_ok(v_s, model, tol).ok;
}

FitFlags theorem_c_check(const ReferenceSolutions& refs, const CovMatrix& v_t, double tol) {
    const auto v_s = smoothed_cov(refs.filtered, refs.retrofiltered, v_t);
    const auto filt = fits_within(refs.filtered, v_s, tol);
    const auto unc = fits_within(refs.unconditioned, v_s, tol);
    return {filt.ok, unc.ok, filt.min_eig, unc.min_eig};
}

bool theorem_b_check(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                     const SteadySolveConfig& cfg, double tol) {
    return theorem_b_check(*cached_reference_solutions(model, u_o, cfg), model, v_t, tol);
}

FitFlags theorem_c_check(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                         const SteadySolveConfig& cfg, double tol) {
    return theorem_c_check(*cached_reference_solutions(model, u_o, cfg), v_t, tol);
}

}  // namespace lgq

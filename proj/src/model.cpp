#include "lgq/model.hpp"

#include "lgq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lgq {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void check_eta(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw DomainError("efficiency must lie in (0, 1], got " + std::to_string(eta));
    }
}

void check_mode(int mode_index, const SystemModel& model) {
    if (mode_index < 0 || mode_index >= model.modes()) {
        throw DomainError("mode index " + std::to_string(mode_index) + " out of range for " +
                          std::to_string(model.modes()) + " modes");
    }
}

}  // namespace

CovMatrix::CovMatrix(const Matrix& entries) {
    if (entries.rows() != entries.cols()) {
        throw DomainError("covariance must be square");
    }
    if (!all_finite(entries)) {
        throw DomainError("covariance has non-finite entries");
    }
    const double asym = max_abs(entries - entries.transpose());
    if (asym > 1e-12 * std::max(1.0, max_abs(entries))) {
        throw DomainError("covariance is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }
    m_ = 0.5 * (entries + entries.transpose());
}

CovMatrix CovMatrix::symmetrized(const Matrix& entries) {
    if (entries.rows() != entries.cols()) {
        throw DomainError("covariance must be square");
    }
    return CovMatrix(Matrix(0.5 * (entries + entries.transpose())));
}

CovMatrix CovMatrix::scaled_identity(Eigen::Index dim, double scale) {
    return CovMatrix(Matrix(scale * Matrix::Identity(dim, dim)));
}

SystemModel::SystemModel(int modes, double hbar, Matrix drift, Matrix diffusion)
    : modes_(modes), hbar_(hbar), a_(std::move(drift)), d_(std::move(diffusion)) {
    if (modes_ < 1) {
        throw DomainError("mode count must be positive");
    }
    if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) {
        throw DomainError("hbar must be a positive finite number");
    }
    const auto n = dim();
    if (a_.rows() != n || a_.cols() != n) {
        throw DomainError("drift matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (d_.rows() != n || d_.cols() != n) {
        throw DomainError("diffusion matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (!all_finite(a_) || !all_finite(d_)) {
        throw DomainError("model matrices must be finite");
    }
    const double scale = std::max(1.0, max_abs(d_));
    if (max_abs(d_ - d_.transpose()) > 1e-12 * scale) {
        throw DomainError("diffusion matrix must be symmetric");
    }
    d_ = 0.5 * (d_ + d_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(d_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw DomainError("diffusion matrix must be positive semidefinite");
    }
}

Unravelling::Unravelling(Matrix c, Matrix gamma) : c_(std::move(c)), gamma_(std::move(gamma)) {
    if (c_.rows() != gamma_.rows() || c_.cols() != gamma_.cols()) {
        throw DomainError("C and Gamma must share the same M x 2N shape");
    }
    if (!all_finite(c_) || !all_finite(gamma_)) {
        throw DomainError("unravelling matrices must be finite");
    }
}

Unravelling Unravelling::empty(Eigen::Index dim) { return Unravelling(Matrix(0, dim), Matrix(0, dim)); }

Unravelling make_homodyne(double eta, double theta, int mode_index, const SystemModel& model) {
    check_eta(eta);
    check_mode(mode_index, model);
    const double hbar = model.hbar();
    const double amp = 2.0 * std::sqrt(eta / hbar);
    Matrix c = Matrix::Zero(1, model.dim());
    c(0, 2 * mode_index) = amp * std::cos(theta);
    c(0, 2 * mode_index + 1) = amp * std::sin(theta);
    Matrix gamma = -0.5 * hbar * c;
    return Unravelling(std::move(c), std::move(gamma));
}

Unravelling make_heterodyne(double eta, double theta, int mode_index, const SystemModel& model) {
    check_eta(eta);
    return stack(make_homodyne(0.5 * eta, theta, mode_index, model),
                 make_homodyne(0.5 * eta, theta + std::numbers::pi / 2.0, mode_index, model));
}

Unravelling stack(const Unravelling& first, const Unravelling& second) {
    if (first.dim() != second.dim()) {
        throw DomainError("cannot stack unravellings on different phase spaces (" +
                          std::to_string(first.dim()) + " vs " + std::to_string(second.dim()) + ")");
    }
    const auto m = first.channels() + second.channels();
    Matrix c(m, first.dim());
    Matrix gamma(m, first.dim());
    c << first.c(), second.c();
    gamma << first.gamma(), second.gamma();
    return Unravelling(std::move(c), std::move(gamma));
}

Matrix kappa(const CovMatrix& v, const Unravelling& u, KappaSign sign) {
    if (v.dim() != u.dim()) {
        throw DomainError("covariance and unravelling dimensions differ");
    }
    const Matrix vc = v.matrix() * u.c().transpose();
    return sign == KappaSign::plus ? Matrix(vc + u.gamma().transpose())
                                   : Matrix(vc - u.gamma().transpose());
}

Matrix symplectic_form(int modes) {
    if (modes < 1) {
        throw DomainError("mode count must be positive");
    }
    Matrix sigma = Matrix::Zero(2 * modes, 2 * modes);
    for (int k = 0; k < modes; ++k) {
        sigma(2 * k, 2 * k + 1) = 1.0;
        sigma(2 * k + 1, 2 * k) = -1.0;
    }
    return sigma;
}

double monitored_efficiency(const Unravelling& u, const SystemModel& model) {
    return 0.25 * model.hbar() * u.c().squaredNorm();
}

}  // namespace lgq

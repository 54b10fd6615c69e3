#include "lgq/realizability.hpp"

#include "lgq/errors.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <tuple>
#include <vector>

namespace lgq {

namespace {

double min_sym_eig(const Matrix& m) {
    if (m.size() == 0) {
        return std::numeric_limits<double>::infinity();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

bool on_boundary(double min_eig, double tol) { return std::abs(min_eig) <= tol; }

void record(RealizabilityReport& r, const std::string& key, double min_eig) {
    r.min_eigs[key] = min_eig;
    r.boundary[key] = on_boundary(min_eig, r.tol);
}

bool same_config(const SteadySolveConfig& a, const SteadySolveConfig& b) {
    return std::tie(a.dt, a.t_max, a.tol) == std::tie(b.dt, b.t_max, b.tol);
}

struct CacheEntry {
    SystemModel model;
    Unravelling u_o;
    SteadySolveConfig cfg;
    std::shared_ptr<const ReferenceSolutions> refs;
};

}  // namespace

PsdResult is_psd(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) {
        throw DomainError("PSD test needs a square matrix");
    }
    if (m.size() == 0) {
        return {true, std::numeric_limits<double>::infinity()};
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw DomainError("PSD test needs a symmetric matrix");
    }
    const double lo = min_sym_eig(0.5 * (m + m.transpose()));
    return {lo >= -tol, lo};
}

UncertaintyResult uncertainty_ok(const CovMatrix& v, const SystemModel& model, double tol) {
    if (v.dim() != model.dim()) {
        throw DomainError("covariance dimension does not match model");
    }
    using CMatrix = Eigen::MatrixXcd;
    const std::complex<double> half_i_hbar(0.0, 0.5 * model.hbar());
    const CMatrix h = v.matrix().cast<std::complex<double>>() +
                      half_i_hbar * symplectic_form(model.modes()).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h, Eigen::EigenvaluesOnly);
    UncertaintyResult out;
    out.min_eig = eig.eigenvalues().minCoeff();
    out.ok = out.min_eig >= -tol;
    if (model.modes() == 1) {
        const double quarter_hbar2 = 0.25 * model.hbar() * model.hbar();
        out.det_ok = v.matrix().determinant() >= quarter_hbar2 * (1.0 - tol) && v.matrix().trace() > 0.0;
    }
    return out;
}

double purity(const CovMatrix& v, const SystemModel& model) {
    if (v.dim() != model.dim()) {
        throw DomainError("covariance dimension does not match model");
    }
    const double det = v.matrix().determinant();
    if (!(det > 0.0)) {
        throw DomainError("purity undefined for a covariance with non-positive determinant");
    }
    return std::pow(0.5 * model.hbar(), model.modes()) / std::sqrt(det);
}

PsdResult fits_within(const CovMatrix& outer, const CovMatrix& inner, double tol) {
    if (outer.dim() != inner.dim()) {
        throw DomainError("fits_within: dimension mismatch");
    }
    return is_psd(outer.matrix() - inner.matrix(), tol);
}

PsdResult fits_within(const UnconditionedBound& outer, const CovMatrix& inner, double tol) {
    if (outer.dim() != inner.dim()) {
        throw DomainError("fits_within: dimension mismatch");
    }
    if (outer.finite_directions() == 0) {
        return {true, std::numeric_limits<double>::infinity()};
    }
    const Matrix projected = outer.basis.transpose() * inner.matrix() * outer.basis;
    const Matrix diff = outer.cov - projected;
    return is_psd(0.5 * (diff + diff.transpose()), tol);
}

RealizabilityCheck check_realizable(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v,
                                    double tol) {
    const auto psd = is_psd(realizability_residual(v, model, u_o), tol);
    return {psd.ok, psd.min_eig, psd.ok && on_boundary(psd.min_eig, tol)};
}

double default_tolerance(const SystemModel& model) { return 1e-8 * model.hbar(); }

ReferenceSolutions reference_solutions(const SystemModel& model, const Unravelling& u_o,
                                       const SteadySolveConfig& cfg) {
    return {filtered_steady(model, u_o, cfg), retrofiltered_steady(model, u_o, cfg), unconditioned_bound(model)};
}

std::shared_ptr<const ReferenceSolutions> cached_reference_solutions(const SystemModel& model,
                                                                     const Unravelling& u_o,
                                                                     const SteadySolveConfig& cfg) {
    static std::mutex mutex;
    static std::vector<CacheEntry> entries;
    {
        std::lock_guard lock(mutex);
        for (const auto& e : entries) {
            if (e.model == model && e.u_o == u_o && same_config(e.cfg, cfg)) {
                return e.refs;
            }
        }
    }
    // Solve outside the lock; a concurrent duplicate solve is harmless.
    auto refs = std::make_shared<const ReferenceSolutions>(reference_solutions(model, u_o, cfg));
    std::lock_guard lock(mutex);
    entries.push_back({model, u_o, cfg, refs});
    return refs;
}

RealizabilityReport classify(const ReferenceSolutions& refs, const SystemModel& model, const Unravelling& u_o,
                             const CovMatrix& v, double tol) {
    RealizabilityReport r;
    r.tol = tol;
    r.is_symmetric = true;

    const auto unc = uncertainty_ok(v, model, tol);
    r.uncertainty_ok = unc.ok;
    record(r, "uncertainty", unc.min_eig);

    try {
        r.purity = purity(v, model);
        r.pure = std::abs(r.purity - 1.0) <= 1e-6;
    } catch (const DomainError&) {
        r.purity = std::numeric_limits<double>::quiet_NaN();
        r.pure = false;
    }

    const auto unc_fit = fits_within(refs.unconditioned, v, tol);
    r.fits_unconditioned = unc_fit.ok;
    record(r, "unconditioned", unc_fit.min_eig);

    const auto filt_fit = fits_within(refs.filtered, v, tol);
    r.fits_filtered = filt_fit.ok;
    record(r, "filtered", filt_fit.min_eig);

    const auto real = check_realizable(model, u_o, v, tol);
    r.realizable = real.realizable;
    r.extremal = real.extremal;
    record(r, "realizability", real.min_eig);
    return r;
}

RealizabilityReport classify(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v,
                             const SteadySolveConfig& cfg, double tol) {
    const auto refs = cached_reference_solutions(model, u_o, cfg);
    return classify(*refs, model, u_o, v, tol);
}

RealizabilityReport classify_matrix(const ReferenceSolutions& refs, const SystemModel& model,
                                    const Unravelling& u_o, const Matrix& v, double tol) {
    try {
        return classify(refs, model, u_o, CovMatrix(v), tol);
    } catch (const DomainError&) {
        if (v.rows() != v.cols() || v.rows() != model.dim() || !v.allFinite()) {
            throw;
        }
        RealizabilityReport r;
        r.tol = tol;
        r.is_symmetric = false;
        r.purity = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
}

nlohmann::json to_json(const RealizabilityReport& report) {
    nlohmann::json margins = nlohmann::json::object();
    for (const auto& [key, value] : report.min_eigs) {
        margins[key] = std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(nullptr);
    }
    return {
        {"is_symmetric", report.is_symmetric},
        {"sclass", report.uncertainty_ok},
        {"purity", std::isfinite(report.purity) ? nlohmann::json(report.purity) : nlohmann::json(nullptr)},
        {"pure", report.pure},
        {"fits_unconditioned", report.fits_unconditioned},
        {"fits_filtered", report.fits_filtered},
        {"realizable", report.realizable},
        {"extremal", report.extremal},
        {"min_eigs", margins},
        {"boundary", report.boundary},
        {"tol", report.tol},
    };
}

CovMatrix param_to_cov(const PutativeParams& p, const SystemModel& model) {
    if (model.modes() != 1) {
        throw DomainError("(gamma, delta) parameterization is single-mode only");
    }
    if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
        throw DomainError("gamma must be positive");
    }
    if (!(std::abs(p.delta) < 1.0)) {
        throw DomainError("|delta| must be < 1 for a pure covariance");
    }
    const double one_minus = 1.0 - p.delta * p.delta;
    const double beta = p.delta / std::sqrt(one_minus);
    const double alpha = 1.0 / (p.gamma * one_minus);
    Matrix v(2, 2);
    v << alpha, beta, beta, p.gamma;
    return CovMatrix(Matrix(0.5 * model.hbar() * v));
}

PutativeParams cov_to_param(const CovMatrix& v, const SystemModel& model) {
    if (model.modes() != 1 || v.dim() != 2) {
        throw DomainError("(gamma, delta) parameterization is single-mode only");
    }
    if (!(v(0, 0) > 0.0) || !(v(1, 1) > 0.0)) {
        throw DomainError("diagonal entries must be positive");
    }
    const double unit = 0.5 * model.hbar();
    return {v(1, 1) / unit, v(0, 1) / std::sqrt(v(0, 0) * v(1, 1))};
}

}  // namespace lgq

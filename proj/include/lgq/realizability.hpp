#pragma once

#include "lgq/model.hpp"
#include "lgq/riccati.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace lgq {

struct PsdResult {
    bool ok = false;
    double min_eig = 0.0;
};

/// Minimum-eigenvalue PSD test; ok iff min eigenvalue ≥ −tol.
/// Throws DomainError if `m` is asymmetric beyond 1e-9 (relative to its largest entry).
PsdResult is_psd(const Matrix& m, double tol);

struct UncertaintyResult {
    bool ok = false;
    double min_eig = 0.0;       ///< of V + iħΣ/2
    std::optional<bool> det_ok;  ///< single-mode cross-check: det V ≥ ħ²/4·(1 − tol) with tr V > 0
};

/// Schrödinger–Heisenberg relation V + iħΣ/2 ⪰ 0 via a complex Hermitian eigensolve.
UncertaintyResult uncertainty_ok(const CovMatrix& v, const SystemModel& model, double tol);

/// (ħ/2)^N / √det V. Throws DomainError when det V ≤ 0.
double purity(const CovMatrix& v, const SystemModel& model);

/// outer − inner ⪰ 0.
PsdResult fits_within(const CovMatrix& outer, const CovMatrix& inner, double tol);

/// Same test on the finite directions of the bound; unbounded directions always fit.
/// With no finite direction the result is {true, +inf}.
PsdResult fits_within(const UnconditionedBound& outer, const CovMatrix& inner, double tol);

struct RealizabilityCheck {
    bool realizable = false;
    double min_eig = 0.0;
    bool extremal = false;  ///< realizable with a residual eigenvalue inside [−tol, tol]
};

RealizabilityCheck check_realizable(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v,
                                    double tol);

/// Default eigenvalue slack for every PSD predicate: 1e-8·ħ.
double default_tolerance(const SystemModel& model);

/// Steady filtered and retrofiltered covariances plus the unconditioned bound for one (model, u_o).
struct ReferenceSolutions {
    CovMatrix filtered;
    CovMatrix retrofiltered;
    UnconditionedBound unconditioned;
};

ReferenceSolutions reference_solutions(const SystemModel& model, const Unravelling& u_o,
                                       const SteadySolveConfig& cfg);

/// Process-wide memo of reference_solutions keyed by value equality of its arguments. Thread safe.
std::shared_ptr<const ReferenceSolutions> cached_reference_solutions(const SystemModel& model,
                                                                     const Unravelling& u_o,
                                                                     const SteadySolveConfig& cfg);

/**
 * Tiered classification of a putative true covariance.
 *
 * Tiers, weakest first: fits the unconditioned steady state, fits the
 * filtered steady state, satisfies the realizability inequality. A
 * min-eigenvalue inside [−tol, tol] counts as satisfied and is also
 * recorded in `boundary` under the same key as `min_eigs`
 * ("uncertainty", "unconditioned", "filtered", "realizability").
 */
struct RealizabilityReport {
    bool is_symmetric = true;
    bool uncertainty_ok = false;
    double purity = 0.0;
    bool pure = false;
    bool fits_unconditioned = false;
    bool fits_filtered = false;
    bool realizable = false;
    bool extremal = false;
    std::map<std::string, double> min_eigs;
    std::map<std::string, bool> boundary;
    double tol = 0.0;
};

RealizabilityReport classify(const ReferenceSolutions& refs, const SystemModel& model, const Unravelling& u_o,
                             const CovMatrix& v, double tol);

/// Uses cached_reference_solutions; propagates solver errors.
RealizabilityReport classify(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v,
                             const SteadySolveConfig& cfg, double tol);

/// Accepts an arbitrary square matrix; an asymmetric one yields is_symmetric = false and every tier false.
RealizabilityReport classify_matrix(const ReferenceSolutions& refs, const SystemModel& model,
                                    const Unravelling& u_o, const Matrix& v, double tol);

nlohmann::json to_json(const RealizabilityReport& report);

/// Single-mode pure covariance parameterized by γ (p-variance in units of ħ/2) and the correlation δ.
struct PutativeParams {
    double gamma = 1.0;
    double delta = 0.0;
};

/// (ħ/2)[[α, β], [β, γ]] with β = δ/√(1−δ²), α = 1/(γ(1−δ²)), so αγ − β² = 1.
CovMatrix param_to_cov(const PutativeParams& p, const SystemModel& model);

/// Inverse map for single-mode covariances: γ = V₂₂/(ħ/2), δ = V₁₂/√(V₁₁V₂₂).
PutativeParams cov_to_param(const CovMatrix& v, const SystemModel& model);

}  // namespace lgq

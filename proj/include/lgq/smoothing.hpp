#pragma once

#include "lgq/model.hpp"
#include "lgq/realizability.hpp"

#include <string>

namespace lgq {

/// Condition-number ceiling for every inversion in this module.
inline constexpr double kMaxCondition = 1e12;

/// Inverse of a symmetric (possibly indefinite) matrix through its eigendecomposition.
/// Throws SingularityError naming `label` when the condition number exceeds kMaxCondition.
Matrix symmetric_inverse(const Matrix& m, const std::string& label);

/**
 * Steady smoothed covariance
 *   V_S = [(V_F − V_T)⁻¹ + (V_R + V_T)⁻¹]⁻¹ + V_T.
 *
 * V_F − V_T may be indefinite; only singularity is rejected.
 */
CovMatrix smoothed_cov(const CovMatrix& v_f, const CovMatrix& v_r, const CovMatrix& v_t);

/// Second route to V_F − V_S: (V_F − V_T)(V_R + V_F)⁻¹(V_F − V_T).
Matrix filtered_gap(const CovMatrix& v_f, const CovMatrix& v_r, const CovMatrix& v_t);

/// (2/ħ)^{2N} det V_S; 1 on the uncertainty boundary for a single mode.
double smoothed_det_normalized(const CovMatrix& v_s, const SystemModel& model);

/// Whether the smoothed state built from v_t is S-class.
/// The implication holds when v_t is S-class and fits inside V_F; other inputs may also return true.
bool theorem_b_check(const ReferenceSolutions& refs, const SystemModel& model, const CovMatrix& v_t,
                     double tol);

/// Same check with reference solutions taken from cached_reference_solutions.
bool theorem_b_check(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                     const SteadySolveConfig& cfg, double tol);

struct FitFlags {
    bool fits_filtered = false;
    bool fits_unconditioned = false;
    double filtered_min_eig = 0.0;
    double unconditioned_min_eig = 0.0;
};

/// Fit tests of V_S against V_F and the unconditioned bound; both hold for any putative v_t.
FitFlags theorem_c_check(const ReferenceSolutions& refs, const CovMatrix& v_t, double tol);
FitFlags theorem_c_check(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                         const SteadySolveConfig& cfg, double tol);

}  // namespace lgq

#pragma once

#include <Eigen/Dense>

#include <optional>

namespace lgq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Real symmetric phase-space covariance.
 *
 * The same type carries filtered, retrofiltered, true, smoothed and
 * unconditioned covariances; the role is given by the variable name.
 * Construction rejects non-finite entries and asymmetry beyond 1e-12
 * relative, then stores the exactly symmetrized matrix.
 */
class CovMatrix {
public:
    CovMatrix() = default;
    explicit CovMatrix(const Matrix& entries);

    /// Symmetrizes first; use for matrices produced by floating-point algebra.
    static CovMatrix symmetrized(const Matrix& entries);
    static CovMatrix scaled_identity(Eigen::Index dim, double scale);

    const Matrix& matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    friend bool operator==(const CovMatrix& a, const CovMatrix& b) {
        return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
    }

private:
    Matrix m_;
};

/// Drift A, diffusion D, mode count N and ħ of a linear Gaussian quantum system.
class SystemModel {
public:
    /// Throws DomainError unless A and D are 2N×2N and D is symmetric PSD.
    SystemModel(int modes, double hbar, Matrix drift, Matrix diffusion);

    int modes() const noexcept { return modes_; }
    Eigen::Index dim() const noexcept { return 2 * modes_; }
    double hbar() const noexcept { return hbar_; }
    const Matrix& drift() const noexcept { return a_; }
    const Matrix& diffusion() const noexcept { return d_; }

    friend bool operator==(const SystemModel& x, const SystemModel& y) {
        return x.modes_ == y.modes_ && x.hbar_ == y.hbar_ && x.a_ == y.a_ && x.d_ == y.d_;
    }

private:
    int modes_;
    double hbar_;
    Matrix a_;
    Matrix d_;
};

/// Measurement unravelling for one record stream: output map C and back-action Γ (both M×2N).
class Unravelling {
public:
    Unravelling(Matrix c, Matrix gamma);

    /// M = 0 unravelling; the identity for stack().
    static Unravelling empty(Eigen::Index dim);

    Eigen::Index channels() const noexcept { return c_.rows(); }
    Eigen::Index dim() const noexcept { return c_.cols(); }
    const Matrix& c() const noexcept { return c_; }
    const Matrix& gamma() const noexcept { return gamma_; }

    friend bool operator==(const Unravelling& x, const Unravelling& y) {
        return x.c_.rows() == y.c_.rows() && x.c_.cols() == y.c_.cols() && x.c_ == y.c_ &&
               x.gamma_ == y.gamma_;
    }

private:
    Matrix c_;
    Matrix gamma_;
};

struct GaussianState {
    Vector mean;
    CovMatrix cov;
};

enum class KappaSign { plus, minus };

/// Homodyne detection of one mode: C = 2√(η/ħ)(cos θ, sin θ), Γ = −ħC/2.
Unravelling make_homodyne(double eta, double theta, int mode_index, const SystemModel& model);

/// Balanced heterodyne: two homodyne channels at θ and θ+π/2, each with efficiency η/2.
Unravelling make_heterodyne(double eta, double theta, int mode_index, const SystemModel& model);

/// Row-concatenation of two unravellings on the same phase space.
Unravelling stack(const Unravelling& first, const Unravelling& second);

/// K±[V] = V Cᵀ ± Γᵀ, a 2N×M matrix.
Matrix kappa(const CovMatrix& v, const Unravelling& u, KappaSign sign);

/// Σ = ⊕ᴺ [[0, 1], [−1, 0]].
Matrix symplectic_form(int modes);

// Sum of detection efficiencies over homodyne-type channels, ħ‖C‖²_F / 4.
double monitored_efficiency(const Unravelling& u, const SystemModel& model);

}  // namespace lgq

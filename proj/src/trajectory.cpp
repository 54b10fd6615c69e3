#include "lgq/trajectory.hpp"

#include "lgq/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>

namespace lgq {

namespace {

std::string phase_space_label(Eigen::Index row, int modes) {
    const auto mode = row / 2;
    const std::string quad = row % 2 == 0 ? "q" : "p";
    return modes == 1 ? quad : quad + std::to_string(mode + 1);
}

}  // namespace

double NormalRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NormalRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

TrajectoryBundle simulate_joint(const SystemModel& model, const Unravelling& u_o, const Unravelling& u_u,
                                const SimulationConfig& cfg, const SteadySolveConfig& solve) {
    if (!(cfg.dt > 0.0) || !(cfg.duration > 0.0)) {
        throw DomainError("simulation needs dt > 0 and duration > 0");
    }
    const auto n = model.dim();
    if (cfg.initial_mean.size() != 0 && cfg.initial_mean.size() != n) {
        throw DomainError("initial mean has the wrong dimension");
    }
    const Unravelling total = stack(u_o, u_u);
    const CovMatrix v_t = filtered_steady(model, total, solve);
    const CovMatrix v_f = filtered_steady(model, u_o, solve);
    const Matrix gain_true = kappa(v_t, total, KappaSign::plus);
    const Matrix gain_filt = kappa(v_f, u_o, KappaSign::plus);
    const Matrix& a = model.drift();
    const Matrix& c_total = total.c();
    const Matrix& c_o = u_o.c();

    const auto m_o = u_o.channels();
    const auto m_total = total.channels();
    const auto steps = static_cast<Eigen::Index>(std::llround(cfg.duration / cfg.dt));
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);

    TrajectoryBundle b;
    b.seed = cfg.seed;
    b.true_means.resize(n, steps);
    b.filtered_means.resize(n, steps);
    b.observed = {dt, Matrix(m_o, steps)};
    b.unobserved = {dt, Matrix(u_u.channels(), steps)};

    NormalRng rng(cfg.seed);
    Vector x_t = cfg.initial_mean.size() == 0 ? Vector::Zero(n) : cfg.initial_mean;
    Vector x_f = x_t;
    Vector dw(m_total);
    for (Eigen::Index k = 0; k < steps; ++k) {
        b.true_means.col(k) = x_t;
        b.filtered_means.col(k) = x_f;
        for (Eigen::Index j = 0; j < m_total; ++j) {
            dw(j) = cfg.zero_noise ? 0.0 : sqrt_dt * rng.normal();
        }
        const Vector y = c_total * x_t + dw / dt;
        b.observed.values.col(k) = y.head(m_o);
        b.unobserved.values.col(k) = y.tail(m_total - m_o);

        const Vector innovation = y.head(m_o) * dt - c_o * x_f * dt;
        x_t += a * x_t * dt + gain_true * dw;
        x_f += a * x_f * dt + gain_filt * innovation;
        if (!x_t.allFinite() || !x_f.allFinite()) {
            throw NumericError("trajectory mean became non-finite at step " + std::to_string(k + 1));
        }
    }
    return b;
}

std::vector<TrajectoryBundle> simulate_ensemble(const SystemModel& model, const Unravelling& u_o,
                                                const Unravelling& u_u, const SimulationConfig& cfg,
                                                const SteadySolveConfig& solve, std::size_t n_traj) {
    std::vector<TrajectoryBundle> out(n_traj);
    std::vector<std::exception_ptr> errors(n_traj);
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(n_traj, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n_traj; i += workers) {
                    try {
                        auto local = cfg;
                        local.seed = trajectory_seed(cfg.seed, i);
                        out[i] = simulate_joint(model, u_o, u_u, local, solve);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

Matrix mixture_statistic(const TrajectoryBundle& bundle, double burn_in) {
    const double total = static_cast<double>(bundle.steps()) * bundle.dt();
    if (!(burn_in >= 0.0) || burn_in >= total) {
        throw DomainError("burn-in must lie in [0, T)");
    }
    const auto first = static_cast<Eigen::Index>(std::ceil(burn_in / bundle.dt() - 1e-9));
    const auto count = bundle.steps() - first;
    const Matrix err = bundle.true_means.rightCols(count) - bundle.filtered_means.rightCols(count);
    Matrix stat = err * err.transpose() / static_cast<double>(count);
    return 0.5 * (stat + stat.transpose());
}

Matrix innovations(const TrajectoryBundle& bundle, const Unravelling& u_o) {
    if (u_o.channels() != bundle.observed.values.rows() || u_o.dim() != bundle.filtered_means.rows()) {
        throw DomainError("unravelling does not match the bundle's observed record");
    }
    const double dt = bundle.dt();
    return bundle.observed.values * dt - u_o.c() * bundle.filtered_means * dt;
}

Snapshot evolve_snapshot(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                         const Vector& mean0, double dt, double duration, std::uint64_t seed) {
    if (mean0.size() != model.dim()) {
        throw DomainError("initial mean has the wrong dimension");
    }
    Snapshot snap;
    snap.cov_path = integrate_cov(model, u_o, v_t, dt, duration);
    snap.mean_path.reserve(snap.cov_path.size());
    snap.mean_path.push_back(mean0);

    NormalRng rng(seed);
    const double sqrt_dt = std::sqrt(dt);
    Vector x = mean0;
    Vector dw(u_o.channels());
    for (std::size_t k = 0; k + 1 < snap.cov_path.size(); ++k) {
        for (Eigen::Index j = 0; j < dw.size(); ++j) {
            dw(j) = sqrt_dt * rng.normal();
        }
        x += model.drift() * x * dt + kappa(snap.cov_path[k], u_o, KappaSign::plus) * dw;
        snap.mean_path.push_back(x);
    }
    return snap;
}

std::vector<Eigen::Vector2d> ellipse_points(const GaussianState& state, int n_points, int mode_index) {
    const auto dim = state.cov.dim();
    if (n_points < 1) {
        throw DomainError("need at least one ellipse point");
    }
    if (mode_index < 0 || 2 * mode_index + 1 >= dim || state.mean.size() != dim) {
        throw DomainError("mode index or mean dimension does not match the covariance");
    }
    const Eigen::Matrix2d block = state.cov.matrix().block<2, 2>(2 * mode_index, 2 * mode_index);
    const Eigen::Vector2d centre = state.mean.segment<2>(2 * mode_index);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(block);
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw DomainError("ellipse needs a positive semidefinite covariance");
    }
    const Eigen::Matrix2d root = eig.eigenvectors() *
                                 eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 eig.eigenvectors().transpose();
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n_points;
        pts.emplace_back(centre + root * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
    }
    return pts;
}

void write_bundle_csv(std::ostream& out, const TrajectoryBundle& bundle) {
    const auto n = bundle.true_means.rows();
    const int modes = static_cast<int>(n / 2);
    const auto m_o = bundle.observed.values.rows();
    const auto m_u = bundle.unobserved.values.rows();
    out.precision(17);
    out << "# seed=" << bundle.seed << ", dt=" << bundle.dt() << '\n';
    out << 't';
    for (Eigen::Index i = 0; i < n; ++i) out << ",true_" << phase_space_label(i, modes);
    for (Eigen::Index i = 0; i < n; ++i) out << ",filt_" << phase_space_label(i, modes);
    for (Eigen::Index j = 0; j < m_o + m_u; ++j) out << ",y_" << j + 1;
    out << '\n';
    for (Eigen::Index k = 0; k < bundle.steps(); ++k) {
        out << static_cast<double>(k) * bundle.dt();
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << bundle.true_means(i, k);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << bundle.filtered_means(i, k);
        for (Eigen::Index j = 0; j < m_o; ++j) out << ',' << bundle.observed.values(j, k);
        for (Eigen::Index j = 0; j < m_u; ++j) out << ',' << bundle.unobserved.values(j, k);
        out << '\n';
    }
}

}  // namespace lgq

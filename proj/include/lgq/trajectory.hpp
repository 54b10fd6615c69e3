#pragma once

#include "lgq/model.hpp"
#include "lgq/riccati.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace lgq {

/**
 * Portable standard-normal source.
 *
 * std::mt19937_64 (fully specified by the standard) feeds 53-bit uniforms
 * into the Box–Muller transform, so a seed gives the same stream on every
 * conforming platform. std::normal_distribution is avoided because its
 * algorithm is implementation-defined.
 */
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

    double uniform();  ///< in [0, 1)
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed of trajectory `index` in an ensemble started from `seed`.
constexpr std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

/// Measurement results y per step; one row per channel, one column per step.
struct Record {
    double dt = 0.0;
    Matrix values;
};

struct TrajectoryBundle {
    Matrix true_means;      ///< 2N×K, state at the start of each step
    Matrix filtered_means;  ///< 2N×K
    Record observed;
    Record unobserved;
    std::uint64_t seed = 0;

    Eigen::Index steps() const noexcept { return true_means.cols(); }
    double dt() const noexcept { return observed.dt; }
};

struct SimulationConfig {
    double duration = 100.0;
    double dt = 1e-3;
    std::uint64_t seed = 42;
    Vector initial_mean;      ///< empty means the origin
    bool zero_noise = false;  ///< force every Wiener increment to 0
};

/**
 * Joint simulation of the true mean (all channels monitored) and the
 * observer's filtered mean (observed channels only).
 *
 * Both covariances are pinned at their steady values. Each step draws
 * dw ~ N(0, I·dt) per channel, emits y = C x_T + dw/dt, and advances
 *   x_T += A x_T dt + K⁺[V_T] dw
 *   x_F += A x_F dt + K⁺_o[V_F] (y_o dt − C_o x_F dt)
 * by Euler–Maruyama. Output is bit-identical for a fixed seed.
 */
TrajectoryBundle simulate_joint(const SystemModel& model, const Unravelling& u_o, const Unravelling& u_u,
                                const SimulationConfig& cfg, const SteadySolveConfig& solve);

/// Independent trajectories with seeds trajectory_seed(cfg.seed, i), run in parallel, returned in index order.
std::vector<TrajectoryBundle> simulate_ensemble(const SystemModel& model, const Unravelling& u_o,
                                                const Unravelling& u_u, const SimulationConfig& cfg,
                                                const SteadySolveConfig& solve, std::size_t n_traj);

/// Time average of (x_T − x_F)(x_T − x_F)ᵀ over steps starting at or after burn_in.
Matrix mixture_statistic(const TrajectoryBundle& bundle, double burn_in);

/// Innovations y_o dt − C_o x_F dt; one column per step.
Matrix innovations(const TrajectoryBundle& bundle, const Unravelling& u_o);

struct Snapshot {
    std::vector<Vector> mean_path;
    std::vector<CovMatrix> cov_path;
};

/// Evolves a putative true state under the observer's filter only.
/// The covariance path does not depend on the seed.
Snapshot evolve_snapshot(const SystemModel& model, const Unravelling& u_o, const CovMatrix& v_t,
                         const Vector& mean0, double dt, double duration, std::uint64_t seed);

/// Points on the one-standard-deviation contour of the (q, p) marginal of mode `mode_index`.
std::vector<Eigen::Vector2d> ellipse_points(const GaussianState& state, int n_points, int mode_index = 0);

/// CSV with a "# seed=..., dt=..." header, then t, means, and y_1..y_M (observed channels first).
void write_bundle_csv(std::ostream& out, const TrajectoryBundle& bundle);

}  // namespace lgq

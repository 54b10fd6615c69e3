#pragma once

#include "lgq/model.hpp"
#include "lgq/realizability.hpp"
#include "lgq/riccati.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lgq {

/// Rectangular (γ, δ) grid, endpoints inclusive.
struct GridSpec {
    double gamma_lo = 0.05;
    double gamma_hi = 1.2;
    int gamma_steps = 200;
    double delta_lo = -0.9;
    double delta_hi = 0.9;
    int delta_steps = 200;

    void validate() const;
    double gamma_at(int i) const;
    double delta_at(int j) const;
    std::size_t size() const { return static_cast<std::size_t>(gamma_steps) * delta_steps; }

    /// "glo:ghi:gsteps,dlo:dhi:dsteps", e.g. "0.05:1.2:200,-0.9:0.9:200".
    static GridSpec parse(const std::string& text);
    std::string to_string() const;
};

struct SweepRow {
    double gamma = 0.0;
    double delta = 0.0;
    RealizabilityReport report;
    std::optional<double> det_vs;  ///< empty when the smoothing inverses fail
    bool singular = false;
    std::string error;
};

/// Classifies and smooths every grid point. Rows come back row-major (γ outer, δ inner)
/// whatever the thread count; `threads = 0` uses the hardware concurrency.
std::vector<SweepRow> sweep_grid(const ReferenceSolutions& refs, const SystemModel& model, const Unravelling& u_o,
                                 const GridSpec& grid, double tol, unsigned threads = 0);

std::vector<SweepRow> sweep_grid(const SystemModel& model, const Unravelling& u_o, const GridSpec& grid,
                                 const SteadySolveConfig& cfg, double tol, unsigned threads = 0);

struct BoundaryPoint {
    double theta_u = 0.0;
    std::optional<CovMatrix> v_t;
    PutativeParams params;
    RealizabilityCheck check;
    std::string error;  ///< non-empty when the true-state solve failed for this phase
};

/**
 * True covariances generated by homodyne detection of the unmonitored
 * output at phases θ_u = kπ/n, k = 0..n−1.
 *
 * Single mode and single observed channel only. The unobserved efficiency
 * defaults to 1 − (efficiency of u_o), which makes every true state pure.
 */
std::vector<BoundaryPoint> homodyne_boundary(const SystemModel& model, const Unravelling& u_o, int n_phases,
                                             const SteadySolveConfig& cfg, double tol,
                                             std::optional<double> eta_u = std::nullopt);

/// Columns: gamma, delta, pure, sclass, unc_fit, filt_fit, realizable, extremal, det_vs, singular.
/// `header` is written verbatim after "# " as the first line.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& header);

void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& points, const SystemModel& model,
                        const std::string& header);

}  // namespace lgq

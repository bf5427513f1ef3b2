#pragma once

#include "eeplab/model.hpp"
#include "eeplab/payoff.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace eeplab {

// One uniform axis in log-price.
struct GridAxis {
    double lower = 0.0;
    double step = 0.0;
    std::size_t nodes = 0;

    double coord(std::size_t k) const noexcept { return lower + static_cast<double>(k) * step; }
    double upper() const noexcept { return coord(nodes - 1); }
};

/// Tensor grid over [t_start, t_end] x (log-price box). Node (k_0, k_1) has
/// flat index k_0 + nodes_0 * k_1.
struct LogGrid {
    std::vector<GridAxis> axes;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t time_steps = 0;

    std::size_t dim() const noexcept { return axes.size(); }
    std::size_t size() const noexcept;
    double dt() const noexcept { return (t_end - t_start) / static_cast<double>(time_steps); }
    double time(std::size_t level) const noexcept;
    std::size_t stride(std::size_t axis) const noexcept { return axis == 0 ? 1 : axes[0].nodes; }
    bool is_boundary(std::size_t flat) const noexcept;
    // Price-space coordinates of a node.
    std::vector<double> spot_at(std::size_t flat) const;
};

/// Grid centred on log(spot) with half-width 5 sqrt(a_ii T) per axis.
/// Requires n <= 2, odd nodes_per_axis >= 51 and time_steps >= 50.
LogGrid build_grid(const ModelParams& params, const SpotPoint& spot,
                   std::size_t nodes_per_axis, std::size_t time_steps);

struct PdeSolverInfo {
    std::size_t total_iterations = 0;
    std::size_t max_iterations_per_step = 0;
    double max_complementarity_residual = 0.0;
};

/// Option value u on a LogGrid. values[m][flat] is u(grid.time(m), node);
/// values[time_steps] equals the payoff.
struct ValueSurface {
    LogGrid grid;
    PayoffSpec payoff;
    std::vector<std::vector<double>> values;
    std::vector<double> payoff_values;
    PdeSolverInfo info;
};

struct PsorSettings {
    double omega = 1.3;
    double tolerance = 1e-9;
    std::size_t max_sweeps = 10000;
};

/// American value from the discrete obstacle problem
/// min(u - psi, A u - b) = 0 at every backward theta-step, solved by
/// projected SOR. Spatial boundary nodes are held at psi.
///
/// In two dimensions the sweep runs over anti-diagonals of the node array
/// with Jacobi updates inside each anti-diagonal, which makes the iteration
/// commute with swapping the axes.
ValueSurface solve_lcp(const ModelParams& params, const PayoffSpec& payoff, const LogGrid& grid,
                       double theta, const PsorSettings& psor = {});

/// Penalised approximation u_t + L u = r u - penalty (u - psi)^-, with the
/// penalty implicit and solved by semi-smooth Newton each step. penalty = 0
/// gives the European value. u >= psi is not enforced.
ValueSurface solve_penalized(const ModelParams& params, const PayoffSpec& payoff,
                             const LogGrid& grid, double theta, double penalty,
                             double newton_tolerance = 1e-9);

double default_exercise_threshold(const PayoffSpec& payoff);

struct ExerciseRegion {
    double threshold = 0.0;
    // mask[m][flat]; the terminal level is all true.
    std::vector<std::vector<std::uint8_t>> mask;

    bool empty_at(std::size_t level) const;
};

/// Node-wise {u - psi <= threshold}. Before maturity only interior nodes with
/// psi > 0 qualify; boundary nodes carry imposed values, not solved ones.
ExerciseRegion exercise_region(const ValueSurface& surface, std::optional<double> threshold = {});

/// u(t, x), multilinear in log-price and linear in time.
/// Throws ExtrapolationError outside the grid.
double value_at(const ValueSurface& surface, double t, std::span<const double> x);

/// Non-throwing variant for hot loops; nullopt outside the grid.
std::optional<double> try_value_at(const ValueSurface& surface, double t, std::span<const double> x);

/// sigma(x) u_x with sigma(x)_ij = sigma_ij x_i, from central differences of
/// nodal values interpolated to (t, x).
std::vector<double> delta(const ValueSurface& surface, const ModelParams& params, double t,
                          std::span<const double> x);

/// Off-grid membership: psi(x) > 0 and the interpolated nodal excess u - psi
/// at (t, x) is <= threshold.
/// Points outside the grid box are reported as outside the region.
bool in_region(const ValueSurface& surface, double threshold, double t, std::span<const double> x);

/// Lowest and highest node coordinate (price space) in the region per level
/// for a one-dimensional grid; NaN where the level is empty.
struct RegionExtent {
    double lower;
    double upper;
};
std::vector<RegionExtent> region_extents_1d(const ValueSurface& surface, const ExerciseRegion& region);

// CSV: t, x1..xn, u, psi[, in_region[, boundary_lo, boundary_hi]]
void write_surface_csv(std::ostream& os, const ValueSurface& surface);
void write_region_csv(std::ostream& os, const ValueSurface& surface, const ExerciseRegion& region);

}  // namespace eeplab

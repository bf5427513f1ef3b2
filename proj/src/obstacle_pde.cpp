#include "eeplab/obstacle_pde.hpp"

#include "eeplab/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace eeplab {

std::size_t LogGrid::size() const noexcept {
    std::size_t s = 1;
    for (const auto& ax : axes) s *= ax.nodes;
    return s;
}

double LogGrid::time(std::size_t level) const noexcept {
    if (level == time_steps) return t_end;
    return t_start + static_cast<double>(level) * dt();
}

bool LogGrid::is_boundary(std::size_t flat) const noexcept {
    for (std::size_t ax = 0; ax < axes.size(); ++ax) {
        const std::size_t k = (flat / stride(ax)) % axes[ax].nodes;
        if (k == 0 || k + 1 == axes[ax].nodes) return true;
    }
    return false;
}

std::vector<double> LogGrid::spot_at(std::size_t flat) const {
    std::vector<double> x(axes.size());
    for (std::size_t ax = 0; ax < axes.size(); ++ax) {
        const std::size_t k = (flat / stride(ax)) % axes[ax].nodes;
        x[ax] = std::exp(axes[ax].coord(k));
    }
    return x;
}

LogGrid build_grid(const ModelParams& params, const SpotPoint& spot, std::size_t nodes_per_axis,
                   std::size_t time_steps) {
    validate_spot(params, spot);
    const std::size_t n = params.n();
    if (n > 2) {
        throw UnsupportedDimensionError("grid solver supports at most 2 assets, got " + std::to_string(n));
    }
    if (nodes_per_axis < 51 || nodes_per_axis % 2 == 0) {
        throw ValidationError("nodes per axis must be odd and >= 51", "pde.nodes");
    }
    if (time_steps < 50) {
        throw ValidationError("time steps must be >= 50", "pde.steps");
    }
    LogGrid grid;
    grid.t_start = spot.s;
    grid.t_end = params.maturity();
    grid.time_steps = time_steps;
    const double half_nodes = static_cast<double>(nodes_per_axis - 1) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double half_width = 5.0 * std::sqrt(params.a()(ii, ii) * params.maturity());
        GridAxis ax;
        ax.nodes = nodes_per_axis;
        ax.step = half_width / half_nodes;
        ax.lower = std::log(spot.x[i]) - half_nodes * ax.step;
        grid.axes.push_back(ax);
    }
    return grid;
}

namespace {

// Constant-coefficient log-space generator
//   sum mu_i d_i + 1/2 sum a_ij d_ij - r
// as a stencil around interior nodes.
struct Stencil {
    double center = 0.0;
    std::vector<std::ptrdiff_t> offsets;
    std::vector<double> coeffs;
};

Stencil assemble_stencil(const ModelParams& params, const LogGrid& grid) {
    Stencil st;
    st.center = -params.r();
    const std::size_t n = grid.dim();
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double h = grid.axes[i].step;
        const double diff = 0.5 * params.a()(ii, ii) / (h * h);
        const double conv = params.log_drift(i) / (2.0 * h);
        const auto s = static_cast<std::ptrdiff_t>(grid.stride(i));
        st.center -= 2.0 * diff;
        st.offsets.push_back(s);
        st.coeffs.push_back(diff + conv);
        st.offsets.push_back(-s);
        st.coeffs.push_back(diff - conv);
    }
    if (n == 2) {
        const double c = params.a()(0, 1) / (4.0 * grid.axes[0].step * grid.axes[1].step);
        const auto s0 = static_cast<std::ptrdiff_t>(grid.stride(0));
        const auto s1 = static_cast<std::ptrdiff_t>(grid.stride(1));
        st.offsets.insert(st.offsets.end(), {s0 + s1, -s0 - s1, s0 - s1, -s0 + s1});
        st.coeffs.insert(st.coeffs.end(), {c, c, -c, -c});
    }
    return st;
}

double apply(const Stencil& st, const std::vector<double>& v, std::size_t k) {
    double acc = st.center * v[k];
    for (std::size_t q = 0; q < st.offsets.size(); ++q) {
        acc += st.coeffs[q] * v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + st.offsets[q])];
    }
    return acc;
}

// Interior nodes grouped by anti-diagonal (sum of axis indices).
std::vector<std::vector<std::size_t>> interior_groups(const LogGrid& grid) {
    std::vector<std::vector<std::size_t>> groups;
    if (grid.dim() == 1) {
        for (std::size_t k = 1; k + 1 < grid.axes[0].nodes; ++k) groups.push_back({k});
        return groups;
    }
    const std::size_t n0 = grid.axes[0].nodes;
    const std::size_t n1 = grid.axes[1].nodes;
    groups.resize(n0 + n1 - 1);
    for (std::size_t j = 1; j + 1 < n1; ++j) {
        for (std::size_t i = 1; i + 1 < n0; ++i) groups[i + j].push_back(i + n0 * j);
    }
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    return groups;
}

std::vector<double> payoff_on_grid(const PayoffSpec& payoff, const LogGrid& grid) {
    std::vector<double> psi(grid.size());
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = evaluate(payoff, grid.spot_at(k));
    return psi;
}

void check_inputs(const ModelParams& params, const PayoffSpec& payoff, const LogGrid& grid,
                  double theta) {
    if (grid.dim() != params.n() || grid.dim() == 0 || grid.dim() > 2) {
        throw UnsupportedDimensionError("grid dimension must match the model and be 1 or 2");
    }
    validate(payoff, params.n());
    if (!(theta >= 0.5 && theta <= 1.0)) {
        throw ValidationError("theta must lie in [0.5, 1]", "pde.theta");
    }
}

}  // namespace

ValueSurface solve_lcp(const ModelParams& params, const PayoffSpec& payoff, const LogGrid& grid,
                       double theta, const PsorSettings& psor) {
    check_inputs(params, payoff, grid, theta);
    const Stencil st = assemble_stencil(params, grid);
    const auto groups = interior_groups(grid);
    const double dt = grid.dt();
    const double diag = 1.0 - theta * dt * st.center;
    const double omega = psor.omega;

    ValueSurface out{grid, payoff, {}, payoff_on_grid(payoff, grid), {}};
    const auto& psi = out.payoff_values;
    out.values.assign(grid.time_steps + 1, {});
    out.values[grid.time_steps] = psi;

    std::vector<double> v = psi;
    std::vector<double> rhs(v.size(), 0.0);
    std::vector<double> scratch;

    auto gs_target = [&](std::size_t k) {
        double acc = rhs[k];
        for (std::size_t q = 0; q < st.offsets.size(); ++q) {
            acc += theta * dt * st.coeffs[q] *
                   v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + st.offsets[q])];
        }
        return acc / diag;
    };

    for (std::size_t level = grid.time_steps; level-- > 0;) {
        for (const auto& g : groups) {
            for (std::size_t k : g) rhs[k] = v[k] + (1.0 - theta) * dt * apply(st, v, k);
        }
        std::size_t sweep = 0;
        double change = std::numeric_limits<double>::infinity();
        while (change > psor.tolerance) {
            if (sweep == psor.max_sweeps) {
                throw SolverError("PSOR did not converge at time level " + std::to_string(level) +
                                      " (last update " + std::to_string(change) + ")",
                                  change);
            }
            change = 0.0;
            for (const auto& g : groups) {
                scratch.resize(g.size());
                for (std::size_t q = 0; q < g.size(); ++q) {
                    const std::size_t k = g[q];
                    scratch[q] = std::max(psi[k], v[k] + omega * (gs_target(k) - v[k]));
                }
                for (std::size_t q = 0; q < g.size(); ++q) {
                    const std::size_t k = g[q];
                    change = std::max(change, std::abs(scratch[q] - v[k]));
                    v[k] = scratch[q];
                }
            }
            ++sweep;
        }
        out.info.total_iterations += sweep;
        out.info.max_iterations_per_step = std::max(out.info.max_iterations_per_step, sweep);
        for (const auto& g : groups) {
            for (std::size_t k : g) {
                const double lhs = diag * (v[k] - gs_target(k));
                const double res = std::min(v[k] - psi[k], lhs);
                out.info.max_complementarity_residual =
                    std::max(out.info.max_complementarity_residual, std::abs(res));
            }
        }
        out.values[level] = v;
    }
    return out;
}

ValueSurface solve_penalized(const ModelParams& params, const PayoffSpec& payoff,
                             const LogGrid& grid, double theta, double penalty,
                             double newton_tolerance) {
    check_inputs(params, payoff, grid, theta);
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
        throw ValidationError("penalty must be finite and >= 0", "pde.penalty.n");
    }
    const Stencil st = assemble_stencil(params, grid);
    const double dt = grid.dt();

    ValueSurface out{grid, payoff, {}, payoff_on_grid(payoff, grid), {}};
    const auto& psi = out.payoff_values;
    out.values.assign(grid.time_steps + 1, {});
    out.values[grid.time_steps] = psi;

    // Unknowns are the interior nodes.
    std::vector<std::ptrdiff_t> unknown(grid.size(), -1);
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!grid.is_boundary(k)) {
            unknown[k] = static_cast<std::ptrdiff_t>(nodes.size());
            nodes.push_back(k);
        }
    }
    const auto m = static_cast<Eigen::Index>(nodes.size());

    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd boundary_part = Eigen::VectorXd::Zero(m);
    for (Eigen::Index row = 0; row < m; ++row) {
        const std::size_t k = nodes[static_cast<std::size_t>(row)];
        trip.emplace_back(row, row, 1.0 - theta * dt * st.center);
        for (std::size_t q = 0; q < st.offsets.size(); ++q) {
            const auto nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + st.offsets[q]);
            if (unknown[nb] >= 0) {
                trip.emplace_back(row, unknown[nb], -theta * dt * st.coeffs[q]);
            } else {
                boundary_part[row] += theta * dt * st.coeffs[q] * psi[nb];
            }
        }
    }
    SpMat base(m, m);
    base.setFromTriplets(trip.begin(), trip.end());
    base.makeCompressed();

    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(base);

    std::vector<double> v = psi;
    Eigen::VectorXd rhs(m), x(m), psi_int(m);
    for (Eigen::Index row = 0; row < m; ++row) psi_int[row] = psi[nodes[static_cast<std::size_t>(row)]];
    const double weight = dt * penalty;

    for (std::size_t level = grid.time_steps; level-- > 0;) {
        for (Eigen::Index row = 0; row < m; ++row) {
            const std::size_t k = nodes[static_cast<std::size_t>(row)];
            rhs[row] = v[k] + (1.0 - theta) * dt * apply(st, v, k) + boundary_part[row];
            x[row] = v[k];
        }
        std::vector<std::uint8_t> active(static_cast<std::size_t>(m), 2);
        std::size_t iter = 0;
        for (;; ++iter) {
            if (iter == 100) {
                throw SolverError("penalty Newton did not converge at time level " + std::to_string(level), 0.0);
            }
            bool same = true;
            SpMat jac = base;
            Eigen::VectorXd b = rhs;
            for (Eigen::Index row = 0; row < m; ++row) {
                const std::uint8_t on = (weight > 0.0 && x[row] < psi_int[row]) ? 1 : 0;
                same = same && on == active[static_cast<std::size_t>(row)];
                active[static_cast<std::size_t>(row)] = on;
                if (on) {
                    jac.coeffRef(row, row) += weight;
                    b[row] += weight * psi_int[row];
                }
            }
            if (same) break;
            lu.factorize(jac);
            if (lu.info() != Eigen::Success) {
                throw SolverError("sparse factorisation failed", 0.0);
            }
            Eigen::VectorXd next = lu.solve(b);
            const double change = (next - x).cwiseAbs().maxCoeff();
            x = std::move(next);
            if (weight == 0.0 || change <= newton_tolerance) {
                ++iter;
                break;
            }
        }
        out.info.total_iterations += iter;
        out.info.max_iterations_per_step = std::max(out.info.max_iterations_per_step, iter);
        for (Eigen::Index row = 0; row < m; ++row) v[nodes[static_cast<std::size_t>(row)]] = x[row];
        out.values[level] = v;
    }
    return out;
}

double default_exercise_threshold(const PayoffSpec& payoff) {
    return 1e-6 * (1.0 + strike_scale(payoff));
}

bool ExerciseRegion::empty_at(std::size_t level) const {
    return std::none_of(mask[level].begin(), mask[level].end(), [](std::uint8_t b) { return b != 0; });
}

ExerciseRegion exercise_region(const ValueSurface& surface, std::optional<double> threshold) {
    ExerciseRegion region;
    region.threshold = threshold.value_or(default_exercise_threshold(surface.payoff));
    const auto& grid = surface.grid;
    const auto& psi = surface.payoff_values;
    region.mask.assign(grid.time_steps + 1, std::vector<std::uint8_t>(grid.size(), 0));
    std::fill(region.mask[grid.time_steps].begin(), region.mask[grid.time_steps].end(), 1);
    for (std::size_t level = 0; level < grid.time_steps; ++level) {
        const auto& u = surface.values[level];
        for (std::size_t k = 0; k < grid.size(); ++k) {
            region.mask[level][k] =
                (psi[k] > 0.0 && !grid.is_boundary(k) && u[k] - psi[k] <= region.threshold) ? 1 : 0;
        }
    }
    return region;
}

namespace {

constexpr double kSnap = 1e-9;

struct Cell {
    std::size_t base = 0;     // flat index of the lower corner
    double frac[2] = {0, 0};  // position inside the cell per axis
    std::size_t level = 0;
    double tfrac = 0.0;
};

bool locate(const LogGrid& grid, double t, std::span<const double> x, Cell& cell) {
    if (x.size() != grid.dim()) return false;
    const double tpos = (t - grid.t_start) / grid.dt();
    const double steps = static_cast<double>(grid.time_steps);
    if (!(tpos >= -kSnap && tpos <= steps + kSnap)) return false;
    double tl = std::floor(tpos + kSnap);
    if (tl >= steps) tl = steps - 1.0;
    if (tl < 0.0) tl = 0.0;
    cell.level = static_cast<std::size_t>(tl);
    cell.tfrac = std::clamp(tpos - tl, 0.0, 1.0);
    if (cell.tfrac < kSnap) cell.tfrac = 0.0;
    if (cell.tfrac > 1.0 - kSnap) cell.tfrac = 1.0;
    cell.base = 0;
    for (std::size_t ax = 0; ax < grid.dim(); ++ax) {
        const auto& a = grid.axes[ax];
        if (!(x[ax] > 0.0)) return false;
        const double pos = (std::log(x[ax]) - a.lower) / a.step;
        const double last = static_cast<double>(a.nodes - 1);
        if (!(pos >= -kSnap && pos <= last + kSnap)) return false;
        double k = std::floor(pos + kSnap);
        if (k >= last) k = last - 1.0;
        if (k < 0.0) k = 0.0;
        double f = std::clamp(pos - k, 0.0, 1.0);
        if (f < kSnap) f = 0.0;
        if (f > 1.0 - kSnap) f = 1.0;
        cell.frac[ax] = f;
        cell.base += static_cast<std::size_t>(k) * grid.stride(ax);
    }
    return true;
}

template <class NodeFn>
double interpolate_level(const LogGrid& grid, const Cell& cell, NodeFn&& node) {
    if (grid.dim() == 1) {
        const double f = cell.frac[0];
        double acc = 0.0;
        if (f < 1.0) acc += (1.0 - f) * node(cell.base);
        if (f > 0.0) acc += f * node(cell.base + 1);
        return acc;
    }
    const std::size_t s1 = grid.stride(1);
    double acc = 0.0;
    for (int c1 = 0; c1 < 2; ++c1) {
        const double w1 = c1 ? cell.frac[1] : 1.0 - cell.frac[1];
        if (w1 == 0.0) continue;
        for (int c0 = 0; c0 < 2; ++c0) {
            const double w0 = c0 ? cell.frac[0] : 1.0 - cell.frac[0];
            if (w0 == 0.0) continue;
            acc += w1 * w0 * node(cell.base + static_cast<std::size_t>(c0) + static_cast<std::size_t>(c1) * s1);
        }
    }
    return acc;
}

template <class LevelFn>
double interpolate_time(const Cell& cell, LevelFn&& at_level) {
    double acc = 0.0;
    if (cell.tfrac < 1.0) acc += (1.0 - cell.tfrac) * at_level(cell.level);
    if (cell.tfrac > 0.0) acc += cell.tfrac * at_level(cell.level + 1);
    return acc;
}

}  // namespace

std::optional<double> try_value_at(const ValueSurface& surface, double t, std::span<const double> x) {
    Cell cell;
    if (!locate(surface.grid, t, x, cell)) return std::nullopt;
    return interpolate_time(cell, [&](std::size_t level) {
        const auto& u = surface.values[level];
        return interpolate_level(surface.grid, cell, [&u](std::size_t k) { return u[k]; });
    });
}

double value_at(const ValueSurface& surface, double t, std::span<const double> x) {
    auto v = try_value_at(surface, t, x);
    if (!v) throw ExtrapolationError("query point lies outside the solved grid");
    return *v;
}

std::vector<double> delta(const ValueSurface& surface, const ModelParams& params, double t,
                          std::span<const double> x) {
    const auto& grid = surface.grid;
    Cell cell;
    if (!locate(grid, t, x, cell)) throw ExtrapolationError("delta query lies outside the solved grid");
    const std::size_t n = grid.dim();
    std::vector<double> du(n);
    for (std::size_t ax = 0; ax < n; ++ax) {
        const auto& a = grid.axes[ax];
        const std::size_t s = grid.stride(ax);
        const double dy = interpolate_time(cell, [&](std::size_t level) {
            const auto& u = surface.values[level];
            return interpolate_level(grid, cell, [&](std::size_t k) {
                const std::size_t i = (k / s) % a.nodes;
                if (i == 0) return (u[k + s] - u[k]) / a.step;
                if (i + 1 == a.nodes) return (u[k] - u[k - s]) / a.step;
                return (u[k + s] - u[k - s]) / (2.0 * a.step);
            });
        });
        du[ax] = dy / x[ax];
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i] += params.sigma()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[i] * du[j];
        }
    }
    return out;
}

bool in_region(const ValueSurface& surface, double threshold, double t, std::span<const double> x) {
    if (!(evaluate(surface.payoff, x) > 0.0)) return false;
    Cell cell;
    if (!locate(surface.grid, t, x, cell)) return false;
    // Interpolating u itself would overshoot a payoff that is convex in
    // log-price by O(x dy^2) and hide the region off the nodes.
    const auto& psi = surface.payoff_values;
    const double excess = interpolate_time(cell, [&](std::size_t level) {
        const auto& u = surface.values[level];
        return interpolate_level(surface.grid, cell, [&](std::size_t k) { return u[k] - psi[k]; });
    });
    return excess <= threshold;
}

std::vector<RegionExtent> region_extents_1d(const ValueSurface& surface, const ExerciseRegion& region) {
    const auto& grid = surface.grid;
    if (grid.dim() != 1) throw UnsupportedDimensionError("region extents are defined for one asset only");
    std::vector<RegionExtent> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& level : region.mask) {
        RegionExtent e{nan, nan};
        for (std::size_t k = 0; k < level.size(); ++k) {
            if (!level[k]) continue;
            const double xk = std::exp(grid.axes[0].coord(k));
            if (std::isnan(e.lower)) e.lower = xk;
            e.upper = xk;
        }
        out.push_back(e);
    }
    return out;
}

namespace {

void write_header(std::ostream& os, std::size_t n) {
    os << "t";
    for (std::size_t i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << ",u,psi";
}

void write_number(std::ostream& os, double v) {
    if (std::isnan(v)) return;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

void write_node(std::ostream& os, const ValueSurface& s, std::size_t level, std::size_t k) {
    write_number(os, s.grid.time(level));
    for (double xi : s.grid.spot_at(k)) {
        os << ',';
        write_number(os, xi);
    }
    os << ',';
    write_number(os, s.values[level][k]);
    os << ',';
    write_number(os, s.payoff_values[k]);
}

}  // namespace

void write_surface_csv(std::ostream& os, const ValueSurface& surface) {
    write_header(os, surface.grid.dim());
    os << '\n';
    for (std::size_t level = 0; level <= surface.grid.time_steps; ++level) {
        for (std::size_t k = 0; k < surface.grid.size(); ++k) {
            write_node(os, surface, level, k);
            os << '\n';
        }
    }
}

void write_region_csv(std::ostream& os, const ValueSurface& surface, const ExerciseRegion& region) {
    const bool one_d = surface.grid.dim() == 1;
    std::vector<RegionExtent> ext;
    if (one_d) ext = region_extents_1d(surface, region);
    write_header(os, surface.grid.dim());
    os << ",in_region";
    if (one_d) os << ",boundary_lo,boundary_hi";
    os << '\n';
    for (std::size_t level = 0; level <= surface.grid.time_steps; ++level) {
        for (std::size_t k = 0; k < surface.grid.size(); ++k) {
            write_node(os, surface, level, k);
            os << ',' << static_cast<int>(region.mask[level][k]);
            if (one_d) {
                os << ',';
                write_number(os, ext[level].lower);
                os << ',';
                write_number(os, ext[level].upper);
            }
            os << '\n';
        }
    }
}

}  // namespace eeplab

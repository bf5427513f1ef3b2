#include "eeplab/eep.hpp"

#include "eeplab/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace eeplab {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void finish(DecompositionResult& r) {
    r.residual = r.v_pde - r.v_european.value - r.premium.value;
    r.combined_stderr = std::sqrt(r.v_european.std_error * r.v_european.std_error +
                                  r.premium.std_error * r.premium.std_error +
                                  r.v_reference_stderr * r.v_reference_stderr);
    r.tolerance = std::max(r.tol_abs, 3.0 * r.combined_stderr);
    r.pass = std::abs(r.residual) <= r.tolerance;
}

// Premium and European legs started at (t, x) with the given region.
void monte_carlo_legs(const EepConfig& config, const SpotPoint& start, const RegionFn& region,
                      DecompositionResult& r) {
    const auto t0 = Clock::now();
    const auto& mc = config.mc;
    const McOptions opts{mc.antithetic, kEuropeanStream, config.execution()};
    r.v_european = stage("european", [&] {
        return price_european(config.params, config.payoff, start, mc.paths, mc.seed, opts);
    });
    // Keep the premium mesh aligned with the configured step size when
    // starting later than the configured valuation time.
    const double full = config.params.maturity() - config.spot.s;
    const double part = config.params.maturity() - start.s;
    const auto steps = std::max<std::size_t>(
        10, static_cast<std::size_t>(std::lround(static_cast<double>(mc.steps) * part / full)));
    r.premium = stage("premium", [&] {
        const PathBatch paths = simulate_paths(config.params, start, steps, mc.paths, mc.seed, mc.antithetic,
                                               kPremiumStream);
        return estimate_premium(config.params, config.payoff, paths, region, config.execution());
    });
    r.diagnostics.paths = mc.paths;
    r.diagnostics.mesh_steps = steps;
    r.diagnostics.seconds_mc = seconds_since(t0);
}

}  // namespace

std::string to_string(RegionSource source) { return source == RegionSource::pde ? "pde" : "lsmc"; }

LogGrid config_grid(const EepConfig& config) {
    return build_grid(config.params, config.spot, config.pde.nodes, config.pde.steps);
}

ValueSurface solve_config_surface(const EepConfig& config) {
    return solve_lcp(config.params, config.payoff, config_grid(config), config.pde.theta);
}

DecompositionResult decompose(const EepConfig& config) {
    validate(config.payoff, config.params.n());
    validate_spot(config.params, config.spot);
    DecompositionResult r;
    r.s = config.spot.s;
    r.x = config.spot.x;
    r.tol_abs = config.absolute_tolerance();
    r.diagnostics.region_source = to_string(config.region_source);
    const bool grid_ok = config.params.n() <= 2;
    if (config.region_source == RegionSource::pde && !grid_ok) {
        throw StageError("pde", "grid region needs at most 2 assets; use the lsmc region source");
    }

    std::optional<ValueSurface> surface;
    if (grid_ok) {
        const auto t0 = Clock::now();
        surface = stage("pde", [&] { return solve_config_surface(config); });
        r.v_pde = value_at(*surface, config.spot.s, config.spot.x);
        r.diagnostics.reference = "pde";
        r.diagnostics.grid_nodes = config.pde.nodes;
        r.diagnostics.grid_steps = config.pde.steps;
        r.diagnostics.psor_iterations = surface->info.total_iterations;
        r.diagnostics.seconds_pde = seconds_since(t0);
    }

    RegionFn region;
    std::optional<LsResult> ls;
    if (config.region_source == RegionSource::pde) {
        const double eps = config.pde.exercise_threshold.value_or(default_exercise_threshold(config.payoff));
        r.diagnostics.exercise_threshold = eps;
        const ValueSurface* surf = &*surface;
        region = [surf, eps](double t, std::span<const double> x) { return in_region(*surf, eps, t, x); };
    } else {
        ls = stage("lsmc", [&] {
            const PathBatch batch = simulate_paths(config.params, config.spot, config.ls.steps, config.ls.paths,
                                                   config.mc.seed, config.mc.antithetic, kRegressionStream);
            return longstaff_schwartz(config.payoff, batch, config.ls.degree, config.ls.pricing_paths,
                                      config.execution());
        });
        r.ls_price = ls->price;
        const StoppingRule* rule = &ls->rule;
        region = [rule](double t, std::span<const double> x) { return rule->exercise_at(t, x); };
        if (!grid_ok) {
            r.v_pde = ls->price.value;
            r.v_reference_stderr = ls->price.std_error;
            r.diagnostics.reference = "lsmc";
        }
    }

    monte_carlo_legs(config, config.spot, region, r);
    finish(r);
    return r;
}

DecompositionResult snell_residual(const EepConfig& config, const ValueSurface& surface, double t,
                                   std::span<const double> x) {
    DecompositionResult r;
    r.s = t;
    r.x.assign(x.begin(), x.end());
    r.tol_abs = config.absolute_tolerance();
    r.diagnostics.region_source = "pde";
    r.diagnostics.reference = "pde";
    r.diagnostics.grid_nodes = config.pde.nodes;
    r.diagnostics.grid_steps = config.pde.steps;
    if (t >= config.params.maturity()) {
        // u(T, .) = psi by definition; no interpolation needed.
        const double psi = evaluate(config.payoff, x);
        r.v_pde = psi;
        r.v_european = Estimate{psi, 0.0, config.mc.paths};
        r.premium = Estimate{0.0, 0.0, config.mc.paths};
        finish(r);
        return r;
    }
    r.v_pde = stage("pde", [&] { return value_at(surface, t, x); });
    const double eps = config.pde.exercise_threshold.value_or(default_exercise_threshold(config.payoff));
    r.diagnostics.exercise_threshold = eps;
    const RegionFn region = [&surface, eps](double tt, std::span<const double> xx) {
        return in_region(surface, eps, tt, xx);
    };
    monte_carlo_legs(config, SpotPoint{t, r.x}, region, r);
    finish(r);
    return r;
}

DecompositionResult snell_residual(const EepConfig& config, double t, std::span<const double> x) {
    const ValueSurface surface = stage("pde", [&] { return solve_config_surface(config); });
    return snell_residual(config, surface, t, x);
}

std::vector<ConvergenceRow> convergence_study(const EepConfig& config, const std::vector<LadderRung>& ladder,
                                              const PriceOracle& oracle) {
    std::vector<ConvergenceRow> rows;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rung : ladder) {
        EepConfig c = config;
        c.pde.nodes = rung.nodes;
        c.pde.steps = rung.steps;
        c.mc.paths = rung.paths;
        ConvergenceRow row{rung, decompose(c), {}, true};
        if (oracle) row.oracle = oracle(c);
        const double size = std::abs(row.result.residual);
        row.within_trend = size <= std::max(1.5 * best, 3.0 * row.result.combined_stderr);
        best = std::min(best, size);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
    os << "nodes,steps,paths,V_pde,V_E,V_E_stderr,premium,premium_stderr,residual,combined_stderr,"
          "tolerance,oracle,oracle_gap,status,trend\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        const auto& r = row.result;
        os << row.rung.nodes << ',' << row.rung.steps << ',' << row.rung.paths << ',' << num(r.v_pde) << ','
           << num(r.v_european.value) << ',' << num(r.v_european.std_error) << ',' << num(r.premium.value) << ','
           << num(r.premium.std_error) << ',' << num(r.residual) << ',' << num(r.combined_stderr) << ','
           << num(r.tolerance) << ',';
        if (row.oracle) os << num(*row.oracle) << ',' << num(r.v_pde - *row.oracle);
        else os << ',';
        os << ',' << (r.pass ? "PASS" : "FAIL") << ',' << (row.within_trend ? "ok" : "regressed") << '\n';
    }
}

}  // namespace eeplab

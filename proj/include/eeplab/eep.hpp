#pragma once

#include "eeplab/mc.hpp"
#include "eeplab/model.hpp"
#include "eeplab/obstacle_pde.hpp"
#include "eeplab/payoff.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eeplab {

struct PdeSettings {
    std::size_t nodes = 201;
    std::size_t steps = 200;
    double theta = 0.5;
    std::optional<double> exercise_threshold;  // default 1e-6 (1 + strike scale)
    bool penalty_enabled = false;
    double penalty = 1e7;
};

struct McSettings {
    std::size_t paths = 1'000'000;
    std::size_t steps = 200;
    std::uint64_t seed = 20240601;
    bool antithetic = false;
    std::size_t threads = 0;
};

struct LsSettings {
    std::size_t paths = 100'000;            // regression batch
    std::size_t pricing_paths = 1'000'000;  // independent pricing batch
    std::size_t steps = 100;                // exercise dates
    int degree = 3;
};

enum class RegionSource { pde, lsmc };

std::string to_string(RegionSource source);

struct EepConfig {
    EepConfig(ModelParams p, PayoffSpec f, SpotPoint x)
        : params(std::move(p)), payoff(std::move(f)), spot(std::move(x)) {}

    ModelParams params;
    PayoffSpec payoff;
    SpotPoint spot;
    PdeSettings pde;
    McSettings mc;
    LsSettings ls;
    RegionSource region_source = RegionSource::pde;
    std::optional<double> tol_abs;  // default 2e-3 * strike scale

    double absolute_tolerance() const { return tol_abs.value_or(2e-3 * strike_scale(payoff)); }
    Execution execution() const { return Execution{mc.threads}; }
};

struct DecompositionDiagnostics {
    std::size_t grid_nodes = 0;
    std::size_t grid_steps = 0;
    std::size_t paths = 0;
    std::size_t mesh_steps = 0;
    std::string region_source;
    std::string reference;  // "pde" or "lsmc"
    std::size_t psor_iterations = 0;
    double exercise_threshold = 0.0;
    double seconds_pde = 0.0;
    double seconds_mc = 0.0;
};

/// V = V^E + premium, checked with the grid value as reference.
struct DecompositionResult {
    double s = 0.0;
    std::vector<double> x;
    double v_pde = 0.0;
    double v_reference_stderr = 0.0;  // nonzero only for an LSMC reference
    Estimate v_european;
    Estimate premium;
    double residual = 0.0;
    double combined_stderr = 0.0;
    double tol_abs = 0.0;
    double tolerance = 0.0;  // max(tol_abs, 3 combined_stderr)
    bool pass = false;
    std::optional<Estimate> ls_price;
    DecompositionDiagnostics diagnostics;
};

/// Grid for the configured spot; requires n <= 2.
LogGrid config_grid(const EepConfig& config);

/// Solves the obstacle problem for the configured spot.
ValueSurface solve_config_surface(const EepConfig& config);

/// Full pipeline: obstacle solve, exercise region, European price and the
/// premium integral along exact paths. Failures are rethrown as StageError.
DecompositionResult decompose(const EepConfig& config);

/// Same identity started at an interior point (t, x), reusing `surface`
/// solved from the configured spot.
DecompositionResult snell_residual(const EepConfig& config, const ValueSurface& surface, double t,
                                   std::span<const double> x);
DecompositionResult snell_residual(const EepConfig& config, double t, std::span<const double> x);

struct LadderRung {
    std::size_t nodes;
    std::size_t steps;
    std::size_t paths;
};

struct ConvergenceRow {
    LadderRung rung;
    DecompositionResult result;
    std::optional<double> oracle;
    bool within_trend = true;  // |residual| <= max(1.5 best previous, 3 combined stderr)
};

using PriceOracle = std::function<std::optional<double>(const EepConfig&)>;

std::vector<ConvergenceRow> convergence_study(const EepConfig& config, const std::vector<LadderRung>& ladder,
                                              const PriceOracle& oracle = {});

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);

}  // namespace eeplab

#include "eeplab/cli.hpp"

#include "eeplab/acceptance.hpp"
#include "eeplab/config.hpp"
#include "eeplab/errors.hpp"
#include "eeplab/oracles.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace eeplab::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json estimate_json(const Estimate& e) {
    return {{"value", e.value}, {"stderr", e.std_error}, {"samples", e.n_samples}};
}

json header(const RunConfig& rc, const std::string& command) {
    json j;
    j["command"] = command;
    j["family"] = std::string(family_name(rc.eep.payoff));
    j["params_hash"] = params_hash(rc);
    j["config"] = rc.source;
    j["seed"] = rc.eep.mc.seed;
    if (const auto* pp = std::get_if<PowerProduct>(&rc.eep.payoff)) {
        j["premium_density"] = {
            {"coefficient", power_product_coefficient(*pp, rc.eep.params)},
            {"coefficient_without_half_factors", power_product_coefficient_unhalved(*pp, rc.eep.params)},
        };
    }
    return j;
}

json result_json(const DecompositionResult& r) {
    json j;
    j["s"] = r.s;
    j["x"] = r.x;
    j["V_pde"] = {{"value", r.v_pde}, {"tolerance", r.tol_abs}};
    if (r.v_reference_stderr > 0.0) j["V_pde"]["stderr"] = r.v_reference_stderr;
    j["V_european"] = estimate_json(r.v_european);
    j["premium"] = estimate_json(r.premium);
    j["residual"] = {{"value", r.residual}, {"combined_stderr", r.combined_stderr}, {"tolerance", r.tolerance}};
    j["status"] = r.pass ? "PASS" : "FAIL";
    if (r.ls_price) j["ls_price"] = estimate_json(*r.ls_price);
    const auto& d = r.diagnostics;
    j["diagnostics"] = {{"grid_nodes", d.grid_nodes},       {"grid_steps", d.grid_steps},
                        {"paths", d.paths},                 {"mesh_steps", d.mesh_steps},
                        {"region_source", d.region_source}, {"reference", d.reference},
                        {"psor_iterations", d.psor_iterations}, {"exercise_threshold", d.exercise_threshold}};
    return j;
}

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr const char* kSummaryHeader =
    "family,params_hash,command,V_pde,V_pde_tolerance,V_E,V_E_stderr,premium,premium_stderr,residual,"
    "combined_stderr,tolerance,status\n";

std::string summary_row(const RunConfig& rc, const std::string& command, const DecompositionResult& r) {
    return std::string(family_name(rc.eep.payoff)) + ',' + params_hash(rc) + ',' + command + ',' + num(r.v_pde) +
           ',' + num(r.tol_abs) + ',' + num(r.v_european.value) + ',' + num(r.v_european.std_error) + ',' +
           num(r.premium.value) + ',' + num(r.premium.std_error) + ',' + num(r.residual) + ',' +
           num(r.combined_stderr) + ',' + num(r.tolerance) + ',' + (r.pass ? "PASS" : "FAIL") + '\n';
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
}

void write_json(const fs::path& dir, const json& j) { open_output(dir, "report.json") << j.dump(2) << '\n'; }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_optional_surface_outputs(const RunConfig& rc, const fs::path& dir, const ValueSurface* surface) {
    if (rc.output.surface_csv && surface) {
        auto f = open_output(dir, "surface.csv");
        write_surface_csv(f, *surface);
    }
    if (rc.output.region_csv && surface) {
        auto f = open_output(dir, "region.csv");
        write_region_csv(f, *surface, exercise_region(*surface, rc.eep.pde.exercise_threshold));
    }
    if (rc.output.paths_csv > 0) {
        const auto& c = rc.eep;
        const std::size_t n = std::max<std::size_t>(rc.output.paths_csv, c.mc.antithetic ? 2 : 1);
        const PathBatch batch = simulate_paths(c.params, c.spot, c.mc.steps, n + (c.mc.antithetic ? n % 2 : 0),
                                               c.mc.seed, c.mc.antithetic, kPremiumStream);
        auto f = open_output(dir, "paths.csv");
        write_paths_csv(f, batch, rc.output.paths_csv);
    }
}

int cmd_price(const RunConfig& rc, const fs::path& dir, std::ostream& out) {
    const EepConfig& c = rc.eep;
    json report = header(rc, "price");
    DecompositionResult row;  // only the price columns are filled
    row.s = c.spot.s;
    row.x = c.spot.x;
    row.tol_abs = c.absolute_tolerance();
    row.residual = row.combined_stderr = row.tolerance = row.premium.value = row.premium.std_error = NAN;

    std::optional<ValueSurface> surface;
    const auto t0 = std::chrono::steady_clock::now();
    if (c.params.n() <= 2) {
        surface = solve_config_surface(c);
        row.v_pde = value_at(*surface, c.spot.s, c.spot.x);
        const auto d = delta(*surface, c.params, c.spot.s, c.spot.x);
        report["V_pde"] = {{"value", row.v_pde}, {"tolerance", row.tol_abs}};
        report["delta"] = {{"value", d}, {"method", "central differences on the grid"}};
        report["solver"] = {{"psor_iterations", surface->info.total_iterations},
                            {"max_complementarity_residual", surface->info.max_complementarity_residual}};
        out << "V_pde  = " << num(row.v_pde) << '\n';
        out << "delta  =";
        for (double v : d) out << ' ' << num(v);
        out << '\n';
        if (c.pde.penalty_enabled) {
            const ValueSurface pen = solve_penalized(c.params, c.payoff, surface->grid, c.pde.theta, c.pde.penalty);
            double gap = 0.0;
            for (std::size_t m = 0; m < pen.values.size(); ++m) {
                for (std::size_t i = 0; i < pen.values[m].size(); ++i) {
                    gap = std::max(gap, std::abs(pen.values[m][i] - surface->values[m][i]));
                }
            }
            const double vp = value_at(pen, c.spot.s, c.spot.x);
            report["V_penalized"] = {{"value", vp}, {"penalty", c.pde.penalty}, {"sup_gap_to_obstacle_solution", gap}};
            out << "V_pen  = " << num(vp) << " (n=" << num(c.pde.penalty) << ", sup gap " << num(gap) << ")\n";
        }
    } else {
        const PathBatch batch = simulate_paths(c.params, c.spot, c.ls.steps, c.ls.paths, c.mc.seed, c.mc.antithetic,
                                               kRegressionStream);
        const LsResult ls = longstaff_schwartz(c.payoff, batch, c.ls.degree, c.ls.pricing_paths, c.execution());
        report["V_lsmc"] = estimate_json(ls.price);
        report["warnings"] = ls.warnings;
        row.v_pde = NAN;
        out << "V_lsmc = " << num(ls.price.value) << " +- " << num(ls.price.std_error) << '\n';
    }
    row.v_european = price_european(c.params, c.payoff, c.spot, c.mc.paths, c.mc.seed,
                                    McOptions{c.mc.antithetic, kEuropeanStream, c.execution()});
    report["V_european"] = estimate_json(row.v_european);
    out << "V_E    = " << num(row.v_european.value) << " +- " << num(row.v_european.std_error) << '\n';
    out << "elapsed " << elapsed(t0) << " s\n";

    write_json(dir, report);
    auto summary = open_output(dir, "summary.csv");
    std::string line = summary_row(rc, "price", row);
    line.replace(line.rfind("FAIL"), 4, "OK");
    summary << kSummaryHeader << line;
    write_optional_surface_outputs(rc, dir, surface ? &*surface : nullptr);
    return 0;
}

int cmd_decompose(const RunConfig& rc, const fs::path& dir, std::ostream& out) {
    const EepConfig& c = rc.eep;
    const DecompositionResult r = decompose(c);
    json report = header(rc, "decompose");
    report["result"] = result_json(r);
    write_json(dir, report);
    open_output(dir, "summary.csv") << kSummaryHeader << summary_row(rc, "decompose", r);

    std::optional<ValueSurface> surface;
    if (c.params.n() <= 2 && (rc.output.region_csv || rc.output.surface_csv)) surface = solve_config_surface(c);
    write_optional_surface_outputs(rc, dir, surface ? &*surface : nullptr);

    const bool grid_reference = r.diagnostics.reference == "pde";
    out << (grid_reference ? "V_pde     = " : "V_lsmc    = ") << num(r.v_pde);
    if (!grid_reference) out << " +- " << num(r.v_reference_stderr);
    out << '\n'
        << "V_E       = " << num(r.v_european.value) << " +- " << num(r.v_european.std_error) << '\n'
        << "premium   = " << num(r.premium.value) << " +- " << num(r.premium.std_error) << '\n'
        << "residual  = " << num(r.residual) << " (tolerance " << num(r.tolerance) << ")\n";
    if (r.ls_price && grid_reference) out << "V_lsmc    = " << num(r.ls_price->value) << " +- " << num(r.ls_price->std_error) << '\n';
    out << (r.pass ? "PASS" : "FAIL") << "  (grid " << r.diagnostics.seconds_pde << " s, monte carlo "
        << r.diagnostics.seconds_mc << " s)\n";
    return r.pass ? 0 : 1;
}

int cmd_region(const RunConfig& rc, const fs::path& dir, std::ostream& out) {
    const EepConfig& c = rc.eep;
    if (c.params.n() > 2) throw ValidationError("region dumps need at most 2 assets", "model.d");
    const ValueSurface surface = solve_config_surface(c);
    const ExerciseRegion region = exercise_region(surface, c.pde.exercise_threshold);
    {
        auto f = open_output(dir, "region.csv");
        write_region_csv(f, surface, region);
    }
    if (rc.output.surface_csv) {
        auto f = open_output(dir, "surface.csv");
        write_surface_csv(f, surface);
    }

    // The value is nonincreasing in t for time-homogeneous coefficients, so
    // the exercise set at an earlier level lies inside the one at any later level.
    std::size_t violations = 0;
    std::vector<std::size_t> counts;
    for (std::size_t m = 0; m < region.mask.size(); ++m) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < region.mask[m].size(); ++i) {
            k += region.mask[m][i];
            if (m + 1 < region.mask.size() && region.mask[m][i] && !region.mask[m + 1][i]) ++violations;
        }
        counts.push_back(k);
    }
    const bool nested = violations == 0;
    json report = header(rc, "region");
    report["exercise_threshold"] = region.threshold;
    report["levels"] = region.mask.size();
    report["nodes_in_region"] = counts;
    report["checks"] = {{"region_grows_in_t", nested}, {"violations", violations}};
    report["status"] = nested ? "PASS" : "FAIL";
    if (c.params.n() == 1) {
        const auto ext = region_extents_1d(surface, region);
        json bound = json::array();
        for (std::size_t m = 0; m < ext.size(); ++m) {
            json e = {{"t", surface.grid.time(m)}};
            e["lower"] = std::isnan(ext[m].lower) ? json(nullptr) : json(ext[m].lower);
            e["upper"] = std::isnan(ext[m].upper) ? json(nullptr) : json(ext[m].upper);
            bound.push_back(e);
        }
        report["extents"] = bound;
    }
    write_json(dir, report);
    open_output(dir, "summary.csv") << "family,params_hash,command,exercise_threshold,levels,violations,status\n"
                                    << family_name(c.payoff) << ',' << params_hash(rc) << ",region,"
                                    << num(region.threshold) << ',' << region.mask.size() << ',' << violations << ','
                                    << (nested ? "PASS" : "FAIL") << '\n';
    out << "region.csv written to " << (dir / "region.csv").string() << "; nesting violations: " << violations
        << '\n'
        << (nested ? "PASS" : "FAIL") << '\n';
    return nested ? 0 : 1;
}

// CRR reference for single-asset index payoffs; nothing otherwise.
std::optional<double> tree_oracle(const EepConfig& c) {
    if (c.params.n() != 1) return std::nullopt;
    const double vol = std::sqrt(c.params.a()(0, 0));
    const double tau = c.params.maturity() - c.spot.s;
    const auto price = [&](const std::vector<double>& w, double k, bool call) -> std::optional<double> {
        if (w[0] <= 0.0) return std::nullopt;
        return oracle::crr_price(w[0] * c.spot.x[0], k, c.params.r(), c.params.d()(0), vol, tau, call,
                                 oracle::Exercise::american, 10'000);
    };
    if (const auto* p = std::get_if<IndexPut>(&c.payoff)) return price(p->w, p->strike, false);
    if (const auto* p = std::get_if<IndexCall>(&c.payoff)) return price(p->w, p->strike, true);
    return std::nullopt;
}

int cmd_convergence(const RunConfig& rc, const fs::path& dir, std::ostream& out) {
    const auto rows = convergence_study(rc.eep, rc.ladder, tree_oracle);
    {
        auto f = open_output(dir, "convergence.csv");
        write_convergence_csv(f, rows);
    }
    json report = header(rc, "convergence");
    json arr = json::array();
    bool ok = true;
    auto summary = open_output(dir, "summary.csv");
    summary << kSummaryHeader;
    for (const auto& row : rows) {
        json j = {{"nodes", row.rung.nodes}, {"steps", row.rung.steps}, {"paths", row.rung.paths}};
        j["result"] = result_json(row.result);
        j["within_trend"] = row.within_trend;
        if (row.oracle) j["oracle"] = {{"value", *row.oracle}, {"gap", row.result.v_pde - *row.oracle}};
        arr.push_back(j);
        ok = ok && row.result.pass && row.within_trend;
        summary << summary_row(rc, "convergence", row.result);
        out << row.rung.nodes << 'x' << row.rung.steps << ' ' << row.rung.paths << " paths: residual "
            << num(row.result.residual) << " (tol " << num(row.result.tolerance) << ") "
            << (row.result.pass ? "PASS" : "FAIL") << (row.within_trend ? "" : " [regressed]") << '\n';
    }
    report["rungs"] = arr;
    report["status"] = ok ? "PASS" : "FAIL";
    write_json(dir, report);
    return ok ? 0 : 1;
}

int cmd_selftest(const Overrides& ov, std::ostream& out) {
    acceptance::Options opts;
    opts.threads = ov.threads.value_or(0);
    const auto outcomes = acceptance::run(opts, out);
    const bool ok = acceptance::all_passed(outcomes);
    std::size_t passed = 0;
    for (const auto& o : outcomes) passed += o.pass;
    out << passed << '/' << outcomes.size() << " criteria passed\n";
    if (ov.out) {
        fs::create_directories(*ov.out);
        json j = json::array();
        for (const auto& o : outcomes) j.push_back({{"id", o.id}, {"pass", o.pass}, {"detail", o.detail}});
        write_json(*ov.out, json{{"command", "selftest"}, {"criteria", j}, {"status", ok ? "PASS" : "FAIL"}});
    }
    return ok ? 0 : 1;
}

}  // namespace

int run(const std::string& command, const std::optional<fs::path>& config, const Overrides& overrides,
        std::ostream& out, std::ostream& err) {
    try {
        if (command == "selftest") return cmd_selftest(overrides, out);
        if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
            throw ValidationError("unknown command '" + command + "'");
        }
        if (!config) throw ValidationError("--config is required for '" + command + "'");
        RunConfig rc = load_run_config(*config);
        if (overrides.seed) rc.eep.mc.seed = *overrides.seed;
        if (overrides.threads) rc.eep.mc.threads = *overrides.threads;
        const fs::path dir = overrides.out.value_or(rc.output.dir);
        fs::create_directories(dir);
        if (command == "price") return cmd_price(rc, dir, out);
        if (command == "decompose") return cmd_decompose(rc, dir, out);
        if (command == "region") return cmd_region(rc, dir, out);
        return cmd_convergence(rc, dir, out);
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace eeplab::cli

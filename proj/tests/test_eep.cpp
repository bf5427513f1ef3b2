#include "eeplab/eep.hpp"
#include "eeplab/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace eeplab;

namespace {

// Desk put at reduced resolution so each decomposition takes about a second.
EepConfig small_put(double d = 0.02) {
    EepConfig c(ModelParams(0.05, Vector{{d}}, Matrix::Constant(1, 1, 0.04), 1.0), IndexPut{{1.0}, 100.0},
                SpotPoint{0.0, {100.0}});
    c.pde.nodes = 101;
    c.pde.steps = 100;
    c.mc.paths = 100'000;
    c.mc.steps = 100;
    return c;
}

}  // namespace

TEST(Decompose, PutIdentityHolds) {
    const DecompositionResult r = decompose(small_put());
    EXPECT_TRUE(r.pass) << r.residual << " vs " << r.tolerance;
    EXPECT_GT(r.premium.value, 0.2);
    EXPECT_GT(r.premium.std_error, 0.0);
    EXPECT_NEAR(r.residual, r.v_pde - r.v_european.value - r.premium.value, 1e-14);
    EXPECT_DOUBLE_EQ(r.tol_abs, 0.2);
    EXPECT_NEAR(r.combined_stderr, std::hypot(r.v_european.std_error, r.premium.std_error), 1e-15);
}

TEST(Decompose, CallWithoutDividendsHasNoPremium) {
    EepConfig c = small_put(0.0);
    c.payoff = IndexCall{{1.0}, 100.0};
    const DecompositionResult r = decompose(c);
    EXPECT_EQ(r.premium.value, 0.0);
    EXPECT_EQ(r.premium.std_error, 0.0);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.residual, r.v_pde - r.v_european.value, 1e-14);
}

TEST(Decompose, RegressionRegionAlsoWorks) {
    EepConfig c = small_put();
    c.region_source = RegionSource::lsmc;
    c.ls.paths = 50'000;
    c.ls.pricing_paths = 50'000;
    c.ls.steps = 50;
    const DecompositionResult r = decompose(c);
    ASSERT_TRUE(r.ls_price.has_value());
    EXPECT_EQ(r.diagnostics.region_source, "lsmc");
    EXPECT_TRUE(r.pass) << r.residual << " vs " << r.tolerance;
}

TEST(Decompose, GridRegionNeedsAtMostTwoAssets) {
    Matrix a = Matrix::Identity(3, 3) * 0.04;
    EepConfig c(ModelParams(0.05, Vector::Constant(3, 0.02), a, 1.0), MinPut{100.0}, SpotPoint{0.0, {100, 100, 100}});
    try {
        decompose(c);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "pde");
    }
}

TEST(Decompose, PutPremiumFallsWithDividends) {
    double previous = 1e9, previous_se = 0.0;
    for (double d : {0.0, 0.03, 0.06}) {
        const DecompositionResult r = decompose(small_put(d));
        EXPECT_LT(r.premium.value + 3 * std::hypot(r.premium.std_error, previous_se), previous) << d;
        previous = r.premium.value;
        previous_se = r.premium.std_error;
    }
}

TEST(Snell, AtMaturityBothSidesArePayoff) {
    const EepConfig c = small_put();
    const ValueSurface u = solve_config_surface(c);
    const double x[] = {90.0};
    const DecompositionResult r = snell_residual(c, u, 1.0, x);
    EXPECT_DOUBLE_EQ(r.v_pde, 10.0);
    EXPECT_DOUBLE_EQ(r.v_european.value, 10.0);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_TRUE(r.pass);
}

TEST(Snell, AtValuationTimeEqualsDecompose) {
    const EepConfig c = small_put();
    const DecompositionResult a = decompose(c);
    const DecompositionResult b = snell_residual(c, c.spot.s, c.spot.x);
    EXPECT_EQ(a.v_pde, b.v_pde);
    EXPECT_EQ(a.v_european.value, b.v_european.value);
    EXPECT_EQ(a.premium.value, b.premium.value);
    EXPECT_EQ(a.residual, b.residual);
}

TEST(Snell, InteriorPointPasses) {
    const EepConfig c = small_put();
    const double x[] = {95.0};
    const DecompositionResult r = snell_residual(c, 0.5, x);
    EXPECT_TRUE(r.pass) << r.residual;
    EXPECT_EQ(r.diagnostics.mesh_steps, 50u);
}

TEST(Convergence, LadderRowsAndCsv) {
    EepConfig c = small_put();
    const std::vector<LadderRung> ladder{{51, 50, 10'000}, {101, 100, 40'000}};
    const auto rows = convergence_study(c, ladder, [](const EepConfig&) { return std::optional<double>(6.66); });
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        EXPECT_TRUE(row.result.pass);
        EXPECT_TRUE(row.within_trend);
        ASSERT_TRUE(row.oracle.has_value());
    }
    EXPECT_EQ(rows[1].result.diagnostics.grid_nodes, 101u);
    std::ostringstream os;
    write_convergence_csv(os, rows);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header.substr(0, 17), "nodes,steps,paths");
}

TEST(Convergence, DegenerateMarketRejectedUpFront) {
    EXPECT_THROW(ModelParams(0.05, Vector{{0.0}}, Matrix::Constant(1, 1, 0.0), 1.0), NotPositiveDefiniteError);
}

TEST(Decompose, RegionSourcesAgreeOnMaxCall) {
    Matrix a(2, 2);
    a << 0.04, 0.012, 0.012, 0.04;
    EepConfig c(ModelParams(0.05, Vector::Constant(2, 0.1), a, 1.0), MaxCall{100.0}, SpotPoint{0.0, {100.0, 100.0}});
    c.mc.paths = 100'000;
    c.ls.pricing_paths = 100'000;
    const DecompositionResult grid = decompose(c);
    c.region_source = RegionSource::lsmc;
    const DecompositionResult regression = decompose(c);
    EXPECT_LT(std::abs(grid.premium.value - regression.premium.value),
              3 * std::hypot(grid.premium.std_error, regression.premium.std_error));
}

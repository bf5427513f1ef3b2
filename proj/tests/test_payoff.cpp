#include "eeplab/errors.hpp"
#include "eeplab/payoff.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace eeplab;

namespace {

ModelParams two_assets(double d1, double d2) {
    Matrix a(2, 2);
    a << 0.04, 0.012, 0.012, 0.0625;
    return ModelParams(0.05, Vector{{d1, d2}}, a, 1.0);
}

std::vector<PayoffSpec> two_asset_catalog() {
    return {IndexCall{{0.6, 0.4}, 100.0}, IndexPut{{0.6, 0.4}, 100.0}, MaxCall{100.0},
            MinPut{100.0},                MultiStrike{{95.0, 105.0}},  PowerProduct{0.5, 100.0}};
}

}  // namespace

TEST(Payoff, Examples) {
    const std::vector<double> x{110.0, 90.0};
    EXPECT_DOUBLE_EQ(evaluate(IndexCall{{0.5, 0.5}, 95.0}, x), 5.0);
    EXPECT_DOUBLE_EQ(evaluate(IndexPut{{0.5, 0.5}, 95.0}, x), 0.0);
    EXPECT_DOUBLE_EQ(evaluate(MaxCall{100.0}, x), 10.0);
    EXPECT_DOUBLE_EQ(evaluate(MinPut{100.0}, x), 10.0);
    EXPECT_DOUBLE_EQ(evaluate(MultiStrike{{105.0, 80.0}}, x), 10.0);
    EXPECT_NEAR(evaluate(PowerProduct{0.5, 90.0}, x), std::sqrt(110.0 * 90.0) - 90.0, 1e-12);
}

TEST(Payoff, ValidationNamesTheField) {
    try {
        validate(IndexCall{{1.0}, 100.0}, 2);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "payoff.w");
    }
    try {
        validate(MaxCall{-1.0}, 2);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "payoff.K");
    }
}

TEST(Payoff, ConvexAlongSegments) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> price(20.0, 200.0), lambda(0.0, 1.0);
    const std::vector<PayoffSpec> convex{IndexCall{{0.6, 0.4}, 100.0}, IndexPut{{0.6, 0.4}, 100.0},
                                         MaxCall{100.0}, MinPut{100.0}, MultiStrike{{95.0, 105.0}}};
    for (const auto& spec : convex) {
        for (int k = 0; k < 500; ++k) {
            const std::vector<double> x{price(rng), price(rng)}, y{price(rng), price(rng)};
            const double l = lambda(rng);
            const std::vector<double> m{l * x[0] + (1 - l) * y[0], l * x[1] + (1 - l) * y[1]};
            EXPECT_LE(evaluate(spec, m), l * evaluate(spec, x) + (1 - l) * evaluate(spec, y) + 1e-12)
                << family_name(spec);
        }
    }
}

TEST(PremiumDensity, HomogeneousInPriceAndStrike) {
    const ModelParams p = two_assets(0.08, 0.02);
    const std::vector<double> x{120.0, 85.0};
    for (double s : {0.5, 2.0, 10.0}) {
        const std::vector<double> sx{s * x[0], s * x[1]};
        EXPECT_NEAR(premium_density(IndexPut{{0.5, 0.5}, s * 100.0}, p, sx),
                    s * premium_density(IndexPut{{0.5, 0.5}, 100.0}, p, x), 1e-12 * s);
        EXPECT_NEAR(premium_density(MaxCall{s * 100.0}, p, sx), s * premium_density(MaxCall{100.0}, p, x), 1e-12 * s);
        EXPECT_NEAR(premium_density(MinPut{s * 100.0}, p, sx), s * premium_density(MinPut{100.0}, p, x), 1e-12 * s);
        EXPECT_NEAR(premium_density(MultiStrike{{s * 90.0, s * 100.0}}, p, sx),
                    s * premium_density(MultiStrike{{90.0, 100.0}}, p, x), 1e-12 * s);
    }
}

TEST(PremiumDensity, VanishesForCallsWithoutDividends) {
    const ModelParams p = two_assets(0.0, 0.0);
    const std::vector<double> x{150.0, 140.0};
    EXPECT_EQ(premium_density(IndexCall{{0.5, 0.5}, 100.0}, p, x), 0.0);
    EXPECT_EQ(premium_density(MaxCall{100.0}, p, x), 0.0);
}

TEST(PremiumDensity, MatchesOracleOnEveryFamily) {
    const ModelParams p = two_assets(0.09, 0.11);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> price(40.0, 250.0);
    for (const auto& spec : two_asset_catalog()) {
        int checked = 0;
        while (checked < 50) {
            const std::vector<double> x{price(rng), price(rng)};
            if (evaluate(spec, x) <= 0.0) continue;
            double fd;
            try {
                fd = density_oracle(spec, p, x);
            } catch (const OracleInvalidError&) {
                continue;
            }
            const double exact = premium_density(spec, p, x);
            EXPECT_LE(std::abs(exact - fd), 1e-6 * std::max(exact, p.r() * 100.0)) << family_name(spec);
            ++checked;
        }
    }
}

TEST(PremiumDensity, PowerProductReducesToVanillaCall) {
    const ModelParams p(0.05, Vector{{0.07}}, Matrix::Constant(1, 1, 0.04), 1.0);
    const std::vector<double> x{130.0};
    const double expected = std::max(0.07 * 130.0 - 0.05 * 100.0, 0.0);
    EXPECT_NEAR(density_oracle(PowerProduct{1.0, 100.0}, p, x), expected, 1e-6);
    EXPECT_NEAR(premium_density(PowerProduct{1.0, 100.0}, p, x), expected, 1e-12);
    EXPECT_NEAR(power_product_coefficient(PowerProduct{1.0, 100.0}, p), 0.07, 1e-15);
}

TEST(PremiumDensity, OracleRefusesKinks) {
    const ModelParams p = two_assets(0.02, 0.02);
    const std::vector<double> at_strike{100.0, 80.0};
    const std::vector<double> on_diagonal{120.0, 120.0};
    EXPECT_THROW(density_oracle(IndexCall{{1.0, 0.0}, 100.0}, p, at_strike), OracleInvalidError);
    EXPECT_THROW(density_oracle(MaxCall{100.0}, p, on_diagonal), OracleInvalidError);
    const std::vector<double> far_out{50.0, 40.0};
    EXPECT_EQ(density_oracle(MaxCall{100.0}, p, far_out), 0.0);
}

TEST(Payoff, PermutationIsConsistent) {
    const std::size_t perm[] = {1, 0};
    const std::vector<double> x{130.0, 70.0}, px{70.0, 130.0};
    const ModelParams p = two_assets(0.09, 0.11);
    const ModelParams q = p.permuted(perm);
    for (const auto& spec : two_asset_catalog()) {
        const PayoffSpec swapped = permuted(spec, perm);
        EXPECT_DOUBLE_EQ(evaluate(swapped, px), evaluate(spec, x)) << family_name(spec);
        EXPECT_NEAR(premium_density(swapped, q, px), premium_density(spec, p, x), 1e-12) << family_name(spec);
    }
}

TEST(Payoff, Exchangeability) {
    EXPECT_TRUE(exchangeable(MaxCall{100.0}));
    EXPECT_TRUE(exchangeable(IndexCall{{0.5, 0.5}, 100.0}));
    EXPECT_FALSE(exchangeable(IndexCall{{0.6, 0.4}, 100.0}));
    EXPECT_FALSE(exchangeable(MultiStrike{{90.0, 100.0}}));
}

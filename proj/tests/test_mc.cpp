#include "eeplab/errors.hpp"
#include "eeplab/mc.hpp"
#include "eeplab/oracles.hpp"
#include "eeplab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace eeplab;

namespace {

ModelParams put_market() { return ModelParams(0.05, Vector{{0.02}}, Matrix::Constant(1, 1, 0.04), 1.0); }

}  // namespace

TEST(Philox, KnownAnswerVectors) {
    using A4 = std::array<std::uint32_t, 4>;
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Accumulator, MergeMatchesSinglePass) {
    Accumulator all, left, right;
    for (int i = 0; i < 1000; ++i) {
        const double v = std::sin(i * 0.37) * 10 + i * 0.01;
        all.add(v);
        (i < 400 ? left : right).add(v);
    }
    left.merge(right);
    EXPECT_EQ(left.count(), all.count());
    EXPECT_NEAR(left.estimate().value, all.estimate().value, 1e-12);
    EXPECT_NEAR(left.estimate().std_error, all.estimate().std_error, 1e-12);
}

TEST(European, ConstantPayoffIsExact) {
    const auto p = put_market();
    const Estimate e = price_european(p, [](std::span<const double>) { return 1.0; }, SpotPoint{0.0, {100.0}},
                                      10'000, 1);
    EXPECT_NEAR(e.value, std::exp(-0.05), 1e-15);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(European, MatchesBlackScholes) {
    const auto p = put_market();
    const Estimate e = price_european(p, IndexPut{{1.0}, 100.0}, SpotPoint{0.0, {100.0}}, 400'000, 42);
    EXPECT_LT(std::abs(e.value - oracle::black_scholes(100, 100, 0.05, 0.02, 0.2, 1.0, false)), 4 * e.std_error);
}

TEST(European, DeterministicAcrossThreadCounts) {
    const auto p = put_market();
    const SpotPoint x0{0.0, {100.0}};
    const Estimate a = price_european(p, IndexPut{{1.0}, 100.0}, x0, 50'000, 7, McOptions{false, kEuropeanStream, {1}});
    const Estimate b = price_european(p, IndexPut{{1.0}, 100.0}, x0, 50'000, 7, McOptions{false, kEuropeanStream, {4}});
    const Estimate c = price_european(p, IndexPut{{1.0}, 100.0}, x0, 50'000, 8, McOptions{false, kEuropeanStream, {1}});
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_NE(a.value, c.value);
}

TEST(European, StandardErrorScalesWithPaths) {
    const auto p = put_market();
    const SpotPoint x0{0.0, {100.0}};
    const Estimate small = price_european(p, IndexPut{{1.0}, 100.0}, x0, 100'000, 3);
    const Estimate large = price_european(p, IndexPut{{1.0}, 100.0}, x0, 200'000, 3);
    EXPECT_NEAR(small.std_error / large.std_error, std::sqrt(2.0), 0.05);
}

TEST(European, AntitheticPairsReduceError) {
    const auto p = put_market();
    const SpotPoint x0{0.0, {100.0}};
    const Estimate plain = price_european(p, IndexPut{{1.0}, 100.0}, x0, 100'000, 3);
    const Estimate pairs = price_european(p, IndexPut{{1.0}, 100.0}, x0, 100'000, 3, McOptions{true});
    EXPECT_EQ(pairs.n_samples, 50'000u);
    EXPECT_LT(pairs.std_error, plain.std_error);
}

TEST(Paths, AntitheticPartnersMirrorEachOther) {
    const PathBatch batch = simulate_paths(put_market(), SpotPoint{0.0, {100.0}}, 20, 4, 5, true);
    std::vector<double> a(21), b(21);
    batch.generate(2, a);
    batch.generate(3, b);
    const double drift = put_market().log_drift(0) * (1.0 / 20);
    for (std::size_t k = 1; k <= 20; ++k) {
        const double la = std::log(a[k] / a[k - 1]) - drift;
        const double lb = std::log(b[k] / b[k - 1]) - drift;
        EXPECT_NEAR(la, -lb, 1e-12);
    }
    EXPECT_THROW(simulate_paths(put_market(), SpotPoint{0.0, {100.0}}, 20, 5, 5, true), ValidationError);
    EXPECT_THROW(simulate_paths(put_market(), SpotPoint{0.0, {100.0}}, 5, 4, 5), ValidationError);
}

TEST(Paths, CsvHasOneRowPerPathAndStep) {
    const PathBatch batch = simulate_paths(put_market(), SpotPoint{0.0, {100.0}}, 10, 8, 5);
    std::ostringstream os;
    write_paths_csv(os, batch, 3);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("path,", 0), 0u);
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 3u * 11u);
}

TEST(Premium, ZeroWhenDensityVanishes) {
    const ModelParams p(0.05, Vector{{0.0}}, Matrix::Constant(1, 1, 0.04), 1.0);
    const PathBatch batch = simulate_paths(p, SpotPoint{0.0, {100.0}}, 50, 2000, 1);
    const Estimate e = estimate_premium(p, IndexCall{{1.0}, 100.0}, batch, [](double, auto) { return true; });
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(Premium, WholeRegionIntegralIsDeterministic) {
    // MinPut with d = 0 has density r K everywhere; with the region covering
    // everything the integral is the same trapezoid sum on every path.
    Matrix a(2, 2);
    a << 0.04, 0.01, 0.01, 0.04;
    const ModelParams p(0.05, Vector::Zero(2), a, 1.0);
    const std::size_t steps = 100;
    const PathBatch batch = simulate_paths(p, SpotPoint{0.0, {100.0, 100.0}}, steps, 1000, 1);
    const Estimate e = estimate_premium(p, MinPut{100.0}, batch, [](double, auto) { return true; });
    double trapezoid = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        trapezoid += w * 0.05 * 100.0 * std::exp(-0.05 * k / double(steps)) / double(steps);
    }
    EXPECT_NEAR(e.value, trapezoid, 1e-12);
    EXPECT_LT(e.std_error, 1e-12);
    EXPECT_NEAR(e.value, 100.0 * (1 - std::exp(-0.05)), 1e-4);
}

TEST(Premium, EmptyRegionGivesZero) {
    const auto p = put_market();
    const PathBatch batch = simulate_paths(p, SpotPoint{0.0, {100.0}}, 50, 2000, 1);
    const Estimate e = estimate_premium(p, IndexPut{{1.0}, 100.0}, batch, [](double, auto) { return false; });
    EXPECT_EQ(e.value, 0.0);
}

TEST(Lsmc, PutCloseToBinomialTree) {
    const auto p = put_market();
    const PathBatch batch = simulate_paths(p, SpotPoint{0.0, {100.0}}, 50, 50'000, 17, false, kRegressionStream);
    const LsResult ls = longstaff_schwartz(IndexPut{{1.0}, 100.0}, batch, 3, 100'000);
    const double tree = oracle::crr_price(100, 100, 0.05, 0.02, 0.2, 1.0, false, oracle::Exercise::american, 2000);
    // Fifty dates and a cubic basis leave a small low bias on top of the noise.
    EXPECT_LT(std::abs(ls.price.value - tree), 3 * ls.price.std_error + 0.05);
    EXPECT_GT(ls.price.value, oracle::black_scholes(100, 100, 0.05, 0.02, 0.2, 1.0, false));
    EXPECT_TRUE(ls.warnings.empty());
    // Deep in the money the rule exercises, out of the money it never does.
    const double deep[] = {60.0}, otm[] = {120.0};
    EXPECT_TRUE(ls.rule.exercise_at(0.5, deep));
    EXPECT_FALSE(ls.rule.exercise_at(0.5, otm));
}

TEST(Lsmc, RejectsBadSettings) {
    const auto p = put_market();
    const PathBatch coarse = simulate_paths(p, SpotPoint{0.0, {100.0}}, 10, 1000, 1);
    EXPECT_THROW(longstaff_schwartz(IndexPut{{1.0}, 100.0}, coarse, 2, 1000), ValidationError);
    const PathBatch fine = simulate_paths(p, SpotPoint{0.0, {100.0}}, 30, 1000, 1);
    EXPECT_THROW(longstaff_schwartz(IndexPut{{1.0}, 100.0}, fine, 0, 1000), ValidationError);
    EXPECT_THROW(longstaff_schwartz(IndexPut{{1.0}, 100.0}, fine, 4, 1000), ValidationError);
}

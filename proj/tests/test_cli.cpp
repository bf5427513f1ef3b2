#include "eeplab/cli.hpp"
#include "eeplab/config.hpp"
#include "eeplab/errors.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace eeplab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json put_doc() {
    return json::parse(R"({
      "model": {"r": 0.05, "d": [0.02], "a": [[0.04]], "T": 1.0},
      "payoff": {"family": "index_put", "w": [1.0], "K": 100.0},
      "spot": {"s": 0.0, "x": [100.0]},
      "pde": {"nodes": 101, "steps": 100},
      "mc": {"paths": 20000, "steps": 50, "seed": 7}
    })");
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("eeplab_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path p = dir / "run.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Config, ParsesAndAppliesDefaults) {
    const RunConfig rc = parse_run_config(put_doc());
    EXPECT_EQ(rc.eep.params.n(), 1u);
    EXPECT_EQ(rc.eep.pde.nodes, 101u);
    EXPECT_EQ(rc.eep.pde.theta, 0.5);
    EXPECT_EQ(rc.eep.mc.seed, 7u);
    EXPECT_EQ(rc.eep.region_source, RegionSource::pde);
    EXPECT_DOUBLE_EQ(rc.eep.absolute_tolerance(), 0.2);
    EXPECT_EQ(rc.ladder.size(), 3u);
}

TEST(Config, ErrorsNameTheField) {
    auto field_of = [](json doc) {
        try {
            parse_run_config(doc);
        } catch (const ValidationError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    json d = put_doc();
    d["model"]["d"] = {0.02, 0.01};
    EXPECT_EQ(field_of(d), "model.d");  // a has one row, so n = 1
    d = put_doc();
    d["model"]["a"] = {{0.04, 0.0}, {0.0}};
    EXPECT_EQ(field_of(d), "model.a");
    d = put_doc();
    d["model"]["d"] = {0.02, 0.01};
    d["model"]["a"] = {{0.04, 0.0}, {0.0, 0.04}};
    EXPECT_EQ(field_of(d), "payoff.w");
    d = put_doc();
    d["spot"]["x"] = {100.0, 100.0};
    EXPECT_EQ(field_of(d), "spot.x");
    d = put_doc();
    d["pde"]["colour"] = "blue";
    EXPECT_EQ(field_of(d), "pde.colour");
    d = put_doc();
    d["payoff"]["family"] = "digital";
    EXPECT_EQ(field_of(d), "payoff.family");
    d = put_doc();
    d["mc"]["paths"] = -5;
    EXPECT_EQ(field_of(d), "mc.paths");
}

TEST(Config, HashTracksEconomicInputsOnly) {
    const std::string h = params_hash(parse_run_config(put_doc()));
    EXPECT_EQ(h.size(), 16u);
    json other = put_doc();
    other["mc"]["seed"] = 8;
    EXPECT_EQ(params_hash(parse_run_config(other)), h);
    other["payoff"]["K"] = 101.0;
    EXPECT_NE(params_hash(parse_run_config(other)), h);
}

TEST(Cli, MalformedDividendsExitNonzeroNamingField) {
    const fs::path dir = scratch_dir("bad");
    json doc = put_doc();
    doc["model"]["d"] = {0.02, 0.03};
    doc["model"]["a"] = {{0.04}};
    std::ostringstream out, err;
    const int code = cli::run("decompose", write_config(dir, doc), {dir}, out, err);
    EXPECT_NE(code, 0);
    EXPECT_NE(err.str().find("model.d"), std::string::npos) << err.str();

    doc = put_doc();
    doc["model"]["a"] = {{0.04, 0.0}, {0.0, 0.04}};
    std::ostringstream out2, err2;
    EXPECT_NE(cli::run("price", write_config(dir, doc), {dir}, out2, err2), 0);
    EXPECT_NE(err2.str().find("model.d"), std::string::npos) << err2.str();
}

TEST(Cli, DecomposeCallWithoutDividends) {
    const fs::path dir = scratch_dir("call");
    json doc = put_doc();
    doc["model"]["d"] = {0.0};
    doc["payoff"] = {{"family", "index_call"}, {"w", {1.0}}, {"K", 100.0}};
    std::ostringstream out, err;
    ASSERT_EQ(cli::run("decompose", write_config(dir, doc), {dir}, out, err), 0) << err.str();
    const json report = json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(report["result"]["premium"]["value"], 0.0);
    EXPECT_EQ(report["result"]["premium"]["stderr"], 0.0);
    EXPECT_EQ(report["result"]["status"], "PASS");
    const auto rows = read_csv(dir / "summary.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0][0], "family");
    EXPECT_EQ(rows[1][0], "index_call");
    EXPECT_EQ(rows[1].back(), "PASS");
}

TEST(Cli, OutputsAreByteIdenticalAcrossRunsAndThreads) {
    const fs::path a = scratch_dir("rep_a"), b = scratch_dir("rep_b");
    json doc = put_doc();
    doc["output"] = {{"region_csv", true}, {"paths_csv", 5}};
    const fs::path cfg = write_config(a, doc);
    std::ostringstream out, err;
    ASSERT_EQ(cli::run("decompose", cfg, {a, std::nullopt, 1}, out, err), 0) << err.str();
    ASSERT_EQ(cli::run("decompose", cfg, {b, std::nullopt, 3}, out, err), 0) << err.str();
    for (const char* f : {"report.json", "summary.csv", "region.csv", "paths.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    // A different seed changes the Monte Carlo numbers.
    const fs::path c = scratch_dir("rep_c");
    ASSERT_EQ(cli::run("decompose", cfg, {c, 99, 1}, out, err), 0) << err.str();
    EXPECT_NE(slurp(a / "summary.csv"), slurp(c / "summary.csv"));
}

TEST(Cli, RegionBoundaryIsNondecreasingInTime) {
    const fs::path dir = scratch_dir("region");
    std::ostringstream out, err;
    ASSERT_EQ(cli::run("region", write_config(dir, put_doc()), {dir}, out, err), 0) << err.str();
    const auto rows = read_csv(dir / "region.csv");
    ASSERT_GT(rows.size(), 1u);
    ASSERT_EQ(rows[0].back(), "boundary_hi");
    const std::size_t col = rows[0].size() - 1;
    double last_t = -1.0, last_b = -1e300;
    std::size_t levels = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][0]);
        if (t == last_t || rows[i][col].empty()) continue;
        const double b = std::stod(rows[i][col]);
        EXPECT_GE(b, last_b - 1e-12) << "t=" << t;
        last_t = t;
        last_b = b;
        ++levels;
    }
    EXPECT_EQ(levels, 101u);
    const json report = json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(report["status"], "PASS");
}

TEST(Cli, PriceWritesValuesWithUncertainty) {
    const fs::path dir = scratch_dir("price");
    json doc = put_doc();
    doc["pde"]["penalty"] = {{"mode", "on"}, {"n", 1e6}};
    doc["output"] = {{"surface_csv", true}};
    std::ostringstream out, err;
    ASSERT_EQ(cli::run("price", write_config(dir, doc), {dir}, out, err), 0) << err.str();
    const json report = json::parse(slurp(dir / "report.json"));
    EXPECT_TRUE(report["V_pde"].contains("tolerance"));
    EXPECT_TRUE(report["V_european"].contains("stderr"));
    EXPECT_LT(report["delta"]["value"][0].get<double>(), 0.0);
    EXPECT_LT(std::abs(report["V_penalized"]["value"].get<double>() - report["V_pde"]["value"].get<double>()), 1e-3);
    EXPECT_TRUE(fs::exists(dir / "surface.csv"));
}

TEST(Cli, PowerProductReportShowsBothCoefficients) {
    const fs::path dir = scratch_dir("power");
    json doc = put_doc();
    doc["payoff"] = {{"family", "power_product"}, {"gamma", 1.0}, {"K", 100.0}};
    std::ostringstream out, err;
    ASSERT_EQ(cli::run("price", write_config(dir, doc), {dir}, out, err), 0) << err.str();
    const json report = json::parse(slurp(dir / "report.json"));
    ASSERT_TRUE(report.contains("premium_density"));
    EXPECT_NEAR(report["premium_density"]["coefficient"].get<double>(), 0.02, 1e-15);
    EXPECT_NE(report["premium_density"]["coefficient"], report["premium_density"]["coefficient_without_half_factors"]);
}

TEST(Cli, UnknownCommandAndMissingConfig) {
    std::ostringstream out, err;
    EXPECT_NE(cli::run("plot", fs::path("x.json"), {}, out, err), 0);
    EXPECT_NE(cli::run("price", std::nullopt, {}, out, err), 0);
    EXPECT_NE(cli::run("price", fs::path("/nonexistent/run.json"), {}, out, err), 0);
}

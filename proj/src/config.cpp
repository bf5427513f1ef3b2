#include "eeplab/config.hpp"

#include "eeplab/errors.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace eeplab {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& block, const std::string& path, std::set<std::string> allowed) {
    for (const auto& [key, value] : block.items()) {
        if (!allowed.count(key)) throw ValidationError("unknown key", join(path, key));
    }
}

const json& require_object(const json& parent, const std::string& key, const std::string& path) {
    if (!parent.contains(key)) throw ValidationError("missing block", join(path, key));
    const json& v = parent.at(key);
    if (!v.is_object()) throw ValidationError("must be an object", join(path, key));
    return v;
}

double get_number(const json& block, const std::string& key, const std::string& path) {
    if (!block.contains(key)) throw ValidationError("missing number", join(path, key));
    const json& v = block.at(key);
    if (!v.is_number()) throw ValidationError("must be a number", join(path, key));
    return v.get<double>();
}

double get_number(const json& block, const std::string& key, const std::string& path, double fallback) {
    return block.contains(key) ? get_number(block, key, path) : fallback;
}

std::size_t get_count(const json& block, const std::string& key, const std::string& path, std::size_t fallback) {
    if (!block.contains(key)) return fallback;
    const json& v = block.at(key);
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::size_t>();
    // Allow 1e6-style literals as long as they are whole.
    if (v.is_number_float() && v.get<double>() >= 0.0 && v.get<double>() == std::floor(v.get<double>())) {
        return static_cast<std::size_t>(v.get<double>());
    }
    throw ValidationError("must be a non-negative integer", join(path, key));
}

bool get_bool(const json& block, const std::string& key, const std::string& path, bool fallback) {
    if (!block.contains(key)) return fallback;
    if (!block.at(key).is_boolean()) throw ValidationError("must be true or false", join(path, key));
    return block.at(key).get<bool>();
}

std::vector<double> get_vector(const json& block, const std::string& key, const std::string& path) {
    if (!block.contains(key)) throw ValidationError("missing array", join(path, key));
    const json& v = block.at(key);
    if (!v.is_array()) throw ValidationError("must be an array of numbers", join(path, key));
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError("must be an array of numbers", join(path, key));
        out.push_back(e.get<double>());
    }
    return out;
}

// Square matrix given as rows; its size fixes the number of assets.
Matrix get_matrix(const json& block, const std::string& key, const std::string& path) {
    if (!block.contains(key) || !block.at(key).is_array() || block.at(key).empty()) {
        throw ValidationError("must be a non-empty n x n array of rows", join(path, key));
    }
    const json& rows = block.at(key);
    const std::size_t n = rows.size();
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = rows[i];
        if (!row.is_array() || row.size() != n) {
            throw ValidationError("each row must have length n", join(path, key));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!row[j].is_number()) throw ValidationError("entries must be numbers", join(path, key));
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
        }
    }
    return m;
}

ModelParams parse_model(const json& block) {
    const std::string path = "model";
    reject_unknown(block, path, {"r", "d", "a", "T"});
    const Matrix a = get_matrix(block, "a", path);
    const auto d = get_vector(block, "d", path);
    return ModelParams(get_number(block, "r", path), Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size())),
                       a, get_number(block, "T", path));
}

}  // namespace

PayoffSpec parse_payoff(const json& block) {
    const std::string path = "payoff";
    if (!block.contains("family") || !block.at("family").is_string()) {
        throw ValidationError("missing family name", "payoff.family");
    }
    const std::string family = block.at("family").get<std::string>();
    if (family == "index_call" || family == "index_put") {
        reject_unknown(block, path, {"family", "w", "K"});
        auto w = get_vector(block, "w", path);
        const double k = get_number(block, "K", path);
        if (family == "index_call") return IndexCall{std::move(w), k};
        return IndexPut{std::move(w), k};
    }
    if (family == "max_call") {
        reject_unknown(block, path, {"family", "K"});
        return MaxCall{get_number(block, "K", path)};
    }
    if (family == "min_put") {
        reject_unknown(block, path, {"family", "K"});
        return MinPut{get_number(block, "K", path)};
    }
    if (family == "multi_strike") {
        reject_unknown(block, path, {"family", "K"});
        return MultiStrike{get_vector(block, "K", path)};
    }
    if (family == "power_product") {
        reject_unknown(block, path, {"family", "gamma", "K"});
        return PowerProduct{get_number(block, "gamma", path), get_number(block, "K", path)};
    }
    throw ValidationError("unknown family '" + family + "'", "payoff.family");
}

json payoff_to_json(const PayoffSpec& spec) {
    json out;
    out["family"] = std::string(family_name(spec));
    std::visit(
        [&out](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, IndexCall> || std::is_same_v<T, IndexPut>) {
                out["w"] = p.w;
                out["K"] = p.strike;
            } else if constexpr (std::is_same_v<T, MultiStrike>) {
                out["K"] = p.strikes;
            } else if constexpr (std::is_same_v<T, PowerProduct>) {
                out["gamma"] = p.gamma;
                out["K"] = p.strike;
            } else {
                out["K"] = p.strike;
            }
        },
        spec);
    return out;
}

std::vector<LadderRung> default_ladder() {
    return {{51, 50, 10'000}, {101, 100, 100'000}, {201, 200, 1'000'000}};
}

RunConfig parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config must be a JSON object");
    reject_unknown(doc, "", {"model", "payoff", "spot", "pde", "mc", "lsmc", "region_source", "tolerances",
                             "threads", "convergence", "output"});

    ModelParams params = parse_model(require_object(doc, "model", ""));
    const std::size_t n = params.n();

    PayoffSpec payoff = parse_payoff(require_object(doc, "payoff", ""));
    validate(payoff, n);

    const json& spot_block = require_object(doc, "spot", "");
    reject_unknown(spot_block, "spot", {"s", "x"});
    SpotPoint spot{get_number(spot_block, "s", "spot", 0.0), get_vector(spot_block, "x", "spot")};
    validate_spot(params, spot);

    RunConfig rc{EepConfig{std::move(params), std::move(payoff), std::move(spot)}, default_ladder(), {}, doc};
    EepConfig& c = rc.eep;

    if (doc.contains("pde")) {
        const json& b = require_object(doc, "pde", "");
        reject_unknown(b, "pde", {"nodes", "steps", "theta", "eps_ex", "penalty"});
        c.pde.nodes = get_count(b, "nodes", "pde", c.pde.nodes);
        c.pde.steps = get_count(b, "steps", "pde", c.pde.steps);
        c.pde.theta = get_number(b, "theta", "pde", c.pde.theta);
        if (b.contains("eps_ex") && !b.at("eps_ex").is_null()) {
            const double eps = get_number(b, "eps_ex", "pde");
            if (!(eps >= 0.0)) throw ValidationError("must be >= 0", "pde.eps_ex");
            c.pde.exercise_threshold = eps;
        }
        if (b.contains("penalty")) {
            const json& pb = require_object(b, "penalty", "pde");
            reject_unknown(pb, "pde.penalty", {"mode", "n"});
            if (pb.contains("mode")) {
                const json& m = pb.at("mode");
                if (!m.is_string() || (m != "on" && m != "off")) {
                    throw ValidationError("must be \"on\" or \"off\"", "pde.penalty.mode");
                }
                c.pde.penalty_enabled = m == "on";
            }
            c.pde.penalty = get_number(pb, "n", "pde.penalty", c.pde.penalty);
            if (!(c.pde.penalty >= 0.0)) throw ValidationError("must be >= 0", "pde.penalty.n");
        }
        if (!(c.pde.theta >= 0.5 && c.pde.theta <= 1.0)) throw ValidationError("must lie in [0.5, 1]", "pde.theta");
        if (c.params.n() <= 2 && (c.pde.nodes < 51 || c.pde.nodes % 2 == 0)) {
            throw ValidationError("must be odd and >= 51", "pde.nodes");
        }
        if (c.pde.steps < 50) throw ValidationError("must be >= 50", "pde.steps");
    }

    if (doc.contains("mc")) {
        const json& b = require_object(doc, "mc", "");
        reject_unknown(b, "mc", {"paths", "steps", "seed", "antithetic"});
        c.mc.paths = get_count(b, "paths", "mc", c.mc.paths);
        c.mc.steps = get_count(b, "steps", "mc", c.mc.steps);
        c.mc.seed = get_count(b, "seed", "mc", c.mc.seed);
        c.mc.antithetic = get_bool(b, "antithetic", "mc", c.mc.antithetic);
        if (c.mc.paths < 1000) throw ValidationError("must be >= 1000", "mc.paths");
        if (c.mc.steps < 10) throw ValidationError("must be >= 10", "mc.steps");
        if (c.mc.antithetic && c.mc.paths % 2 != 0) throw ValidationError("must be even with antithetic pairing", "mc.paths");
    }

    if (doc.contains("lsmc")) {
        const json& b = require_object(doc, "lsmc", "");
        reject_unknown(b, "lsmc", {"paths", "pricing_paths", "steps", "degree"});
        c.ls.paths = get_count(b, "paths", "lsmc", c.ls.paths);
        c.ls.pricing_paths = get_count(b, "pricing_paths", "lsmc", c.ls.pricing_paths);
        c.ls.steps = get_count(b, "steps", "lsmc", c.ls.steps);
        c.ls.degree = static_cast<int>(get_count(b, "degree", "lsmc", static_cast<std::size_t>(c.ls.degree)));
        if (c.ls.steps < 25) throw ValidationError("must be >= 25", "lsmc.steps");
        if (c.ls.degree < 1 || c.ls.degree > 3) throw ValidationError("must be 1, 2 or 3", "lsmc.degree");
    }

    if (doc.contains("region_source")) {
        const json& v = doc.at("region_source");
        if (v == "pde") c.region_source = RegionSource::pde;
        else if (v == "lsmc") c.region_source = RegionSource::lsmc;
        else throw ValidationError("must be \"pde\" or \"lsmc\"", "region_source");
    }
    if (c.region_source == RegionSource::pde && c.params.n() > 2) {
        throw ValidationError("the grid region supports at most 2 assets; use \"lsmc\"", "region_source");
    }

    if (doc.contains("tolerances")) {
        const json& b = require_object(doc, "tolerances", "");
        reject_unknown(b, "tolerances", {"tol_abs"});
        if (b.contains("tol_abs")) {
            const double tol = get_number(b, "tol_abs", "tolerances");
            if (!(tol >= 0.0)) throw ValidationError("must be >= 0", "tolerances.tol_abs");
            c.tol_abs = tol;
        }
    }

    c.mc.threads = get_count(doc, "threads", "", 0);

    if (doc.contains("convergence")) {
        const json& b = require_object(doc, "convergence", "");
        reject_unknown(b, "convergence", {"ladder"});
        if (b.contains("ladder")) {
            const json& l = b.at("ladder");
            if (!l.is_array() || l.empty()) throw ValidationError("must be a non-empty array", "convergence.ladder");
            rc.ladder.clear();
            for (std::size_t i = 0; i < l.size(); ++i) {
                const std::string p = "convergence.ladder[" + std::to_string(i) + "]";
                if (!l[i].is_object()) throw ValidationError("must be an object", p);
                reject_unknown(l[i], p, {"nodes", "steps", "paths"});
                rc.ladder.push_back({get_count(l[i], "nodes", p, 0), get_count(l[i], "steps", p, 0),
                                     get_count(l[i], "paths", p, 0)});
            }
        }
    }

    if (doc.contains("output")) {
        const json& b = require_object(doc, "output", "");
        reject_unknown(b, "output", {"dir", "region_csv", "surface_csv", "paths_csv"});
        if (b.contains("dir")) {
            if (!b.at("dir").is_string()) throw ValidationError("must be a string", "output.dir");
            rc.output.dir = b.at("dir").get<std::string>();
        }
        rc.output.region_csv = get_bool(b, "region_csv", "output", false);
        rc.output.surface_csv = get_bool(b, "surface_csv", "output", false);
        rc.output.paths_csv = get_count(b, "paths_csv", "output", 0);
    }
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(doc);
}

std::string params_hash(const RunConfig& config) {
    json key;
    key["model"] = config.source.at("model");
    key["payoff"] = payoff_to_json(config.eep.payoff);
    key["spot"] = config.source.at("spot");
    const std::string text = key.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace eeplab

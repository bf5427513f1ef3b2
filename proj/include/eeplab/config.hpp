#pragma once

#include "eeplab/eep.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace eeplab {

struct OutputSettings {
    std::filesystem::path dir = "out";
    bool region_csv = false;
    bool surface_csv = false;
    std::size_t paths_csv = 0;  // number of paths to dump, 0 = none
};

/// One experiment: everything needed to reproduce a run.
struct RunConfig {
    EepConfig eep;
    std::vector<LadderRung> ladder;
    OutputSettings output;
    nlohmann::json source;  // the parsed document
};

/// Parses and validates a run-config document. Errors are ValidationError
/// with field() set to the offending path, e.g. "model.d".
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

PayoffSpec parse_payoff(const nlohmann::json& block);
nlohmann::json payoff_to_json(const PayoffSpec& spec);

/// Stable 64-bit FNV-1a hash (hex) of the model, payoff and spot blocks.
std::string params_hash(const RunConfig& config);

std::vector<LadderRung> default_ladder();

}  // namespace eeplab

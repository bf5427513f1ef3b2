#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eeplab::cli {

struct Overrides {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"price", "decompose", "region", "convergence", "selftest"};
    return names;
}

/// Executes one command. Returns the process exit status: 0 when every
/// check the command performs passes, 1 when a check fails, 2 on invalid
/// input (message on `err`, naming the config field when known).
int run(const std::string& command, const std::optional<std::filesystem::path>& config, const Overrides& overrides,
        std::ostream& out, std::ostream& err);

}  // namespace eeplab::cli

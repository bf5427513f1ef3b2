#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace eeplab::acceptance {

struct Outcome {
    std::string id;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct Options {
    std::size_t threads = 0;
    std::vector<std::string> only;  // empty = every criterion
};

struct Criterion {
    std::string id;
    std::string title;
    std::function<Outcome(const Options&)> run;
};

const std::vector<Criterion>& criteria();

/// Runs the selected criteria, printing one "PASS id: ..." or "FAIL id: ..."
/// line each to `out`. Exceptions count as failures.
std::vector<Outcome> run(const Options& options, std::ostream& out);

bool all_passed(const std::vector<Outcome>& outcomes);

}  // namespace eeplab::acceptance

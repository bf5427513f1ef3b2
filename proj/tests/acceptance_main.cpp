// Acceptance suite: one PASS/FAIL line per criterion; exit status 0 iff all pass.
// Optional arguments restrict the run to the named criteria.

#include "eeplab/acceptance.hpp"

#include <iostream>

int main(int argc, char** argv) {
    eeplab::acceptance::Options opts;
    for (int i = 1; i < argc; ++i) opts.only.emplace_back(argv[i]);
    const auto outcomes = eeplab::acceptance::run(opts, std::cout);
    return eeplab::acceptance::all_passed(outcomes) ? 0 : 1;
}

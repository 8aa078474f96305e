// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The same checks back the CLI `verify` subcommand.

#include <cstdio>

#include "cavitylab/verify.hpp"

int main() {
    auto results = cavitylab::verify::run_all(/*threads=*/2);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  %s  [%.2fs]  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        all = all && r.pass;
    }
    std::printf("%s\n", all ? "acceptance: all criteria passed" : "acceptance: FAILURES present");
    return all ? 0 : 1;
}

// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 3 5        selected criteria
// Exit status is nonzero if any selected criterion fails.

#include "qbench/verify.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    qbench::VerifyOptions opt;
    if (const char* s = std::getenv("QBENCH_SCRATCH"); s && *s) opt.scratch = s;
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    bool ok = true;
    for (int id : ids) {
        const auto r = qbench::run_criterion(id, opt);
        ok = ok && r.passed;
        std::printf("%s\n", qbench::format_result(r).c_str());
        std::fflush(stdout);
    }
    return ok ? 0 : 1;
}

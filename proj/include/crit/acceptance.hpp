#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crit {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;  // observed values against targets and tolerances
    double seconds = 0.0;
};

/// Acceptance criteria 1..11 (all when `which` is empty). Each result is
/// printed as one line on `log` as soon as it is known.
std::vector<CheckResult> run_acceptance(const std::vector<int>& which, int workers, std::ostream& log);

/// Closed-form and trivial checks; well under a minute.
std::vector<CheckResult> run_fast_checks(std::ostream& log);

}  // namespace crit

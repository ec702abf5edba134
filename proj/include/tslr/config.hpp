#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tslr/harness.hpp"
#include "tslr/sim.hpp"

namespace tslr {

// Declarative `key = value[, value...]` files. `#` starts a comment.
// Errors are reported as DataError with the offending line.
using KeyValues = std::map<std::string, std::vector<std::string>>;

KeyValues parse_key_values(std::istream& in);

// Keys: n_control, n_experimental, accrual_months, target_deaths,
// median_pfs_control, median_os_control, median_os_experimental,
// switch_prob, seed.
TrialScenario parse_scenario(std::istream& in);

// Keys: the scenario-grid axes of PowerStudyConfig (lists allowed),
// p_prime, design_*, n_*, accrual_months, replications, alpha, tests,
// fh (two numbers), seed, workers.
PowerStudyConfig parse_power_config(std::istream& in);

std::string scenario_json(const TrialScenario& scenario, double cutoff,
                          std::size_t events);

}  // namespace tslr

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tslr/sim.hpp"
#include "tslr/survdata.hpp"

namespace tslr::testing {

// Small random dataset with ties (times on a 0.5 grid) and censoring.
inline SurvivalDataset random_dataset(std::uint64_t seed, int n_min = 6,
                                      int n_max = 60) {
  RandomStream rng(seed);
  const int n = n_min + static_cast<int>(rng.next() % (n_max - n_min + 1));
  std::vector<SubjectRecord> recs;
  for (int i = 0; i < n; ++i) {
    SubjectRecord r;
    r.arm = (i % 2 == 0) ? Arm::control : Arm::experimental;
    r.time = 0.5 * (1 + static_cast<int>(rng.next() % 40));
    r.event = rng.uniform() < 0.7;
    recs.push_back(r);
  }
  // Guarantee each arm has a death.
  recs[0].event = true;
  recs[1].event = true;
  return SurvivalDataset(std::move(recs));
}

inline SurvivalDataset make_dataset(
    const std::vector<double>& control_deaths,
    const std::vector<double>& control_censored,
    const std::vector<double>& exp_deaths,
    const std::vector<double>& exp_censored) {
  std::vector<SubjectRecord> recs;
  for (double t : control_deaths) recs.push_back({t, true, Arm::control, {}});
  for (double t : control_censored)
    recs.push_back({t, false, Arm::control, {}});
  for (double t : exp_deaths) recs.push_back({t, true, Arm::experimental, {}});
  for (double t : exp_censored)
    recs.push_back({t, false, Arm::experimental, {}});
  return SurvivalDataset(std::move(recs));
}

// Control deaths {1,4,6}; experimental deaths {2,5}, censored {7}.
inline SurvivalDataset six_subjects() {
  return make_dataset({1, 4, 6}, {}, {2, 5}, {7});
}

}  // namespace tslr::testing

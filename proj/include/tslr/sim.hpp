#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tslr/model.hpp"
#include "tslr/survdata.hpp"

namespace tslr {

// SplitMix64. Small state, so every subject can own an independent stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
  // Infinite when rate is 0.
  double exponential(double rate);

 private:
  std::uint64_t state_;
};

// Mixes two words into a seed for an independent sub-stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct TrialScenario {
  std::uint32_t n_control = 139;
  std::uint32_t n_experimental = 277;
  double accrual_months = 12.0;
  std::uint32_t target_deaths = 221;
  SwitchModelParams true_params{2.0, 10.0, 15.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedSubject {
  Arm arm = Arm::control;
  double enroll_calendar = 0.0;
  std::optional<double> progression_time;
  bool switched = false;
  double death_time = 0.0;
};

/// Draws one subject. Control patients race progression against death;
/// at progression they switch with probability p, after which death occurs
/// at the experimental rate from the progression time on. Non-switchers keep
/// their original death draw (memorylessness makes the residual valid).
SimulatedSubject simulate_subject(const RateSet& rates, double switch_prob,
                                  double accrual_months, Arm arm,
                                  RandomStream& rng);

struct SimulatedTrial {
  SurvivalDataset data;
  double cutoff = 0.0;  // calendar time of the target death
};

// Subject i (control first, then experimental) uses the sub-stream
// derive_seed(seed, i). Follow-up is cut at the calendar time of the
// target_deaths-th death.
SimulatedTrial simulate_trial(const TrialScenario& scenario);
SimulatedTrial simulate_trial(const TrialScenario& scenario,
                              std::uint64_t seed);

}  // namespace tslr

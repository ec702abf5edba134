#include "tslr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tslr {

double RandomStream::exponential(double rate) {
  const double u = uniform();
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(u) / rate;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  RandomStream s(base ^ (index * 0xd1b54a32d192ed03ull));
  s.next();
  return s.next() ^ index;
}

void TrialScenario::validate() const {
  true_params.validate();
  if (n_control < 1 || n_experimental < 1)
    throw std::invalid_argument("each arm needs at least one subject");
  if (!(accrual_months >= 0.0) || !std::isfinite(accrual_months))
    throw std::invalid_argument("accrual_months must be finite and >= 0");
  if (target_deaths < 1)
    throw std::invalid_argument("target_deaths must be >= 1");
  if (target_deaths > n_control + n_experimental)
    throw std::invalid_argument("target_deaths (" +
                                std::to_string(target_deaths) +
                                ") exceeds the number of subjects");
}

SimulatedSubject simulate_subject(const RateSet& rates, double switch_prob,
                                  double accrual_months, Arm arm,
                                  RandomStream& rng) {
  SimulatedSubject s;
  s.arm = arm;
  s.enroll_calendar = accrual_months * rng.uniform();
  if (arm == Arm::experimental) {
    s.death_time = rng.exponential(rates.lambda_os1);
    return s;
  }
  const double progression = rng.exponential(rates.lambda_p0);
  const double death = rng.exponential(rates.lambda_os0);
  if (progression >= death) {
    s.death_time = death;
    return s;
  }
  s.progression_time = progression;
  s.switched = rng.uniform() < switch_prob;
  s.death_time = s.switched ? progression + rng.exponential(rates.lambda_os1)
                            : death;
  return s;
}

SimulatedTrial simulate_trial(const TrialScenario& scenario) {
  return simulate_trial(scenario, scenario.seed);
}

SimulatedTrial simulate_trial(const TrialScenario& scenario,
                              std::uint64_t seed) {
  scenario.validate();
  const RateSet rates = rates_from_medians(scenario.true_params);
  const double p = scenario.true_params.switch_prob;
  const std::size_t n =
      std::size_t{scenario.n_control} + scenario.n_experimental;

  std::vector<SimulatedSubject> subjects(n);
  std::vector<double> calendar(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(derive_seed(seed, i));
    const Arm arm = i < scenario.n_control ? Arm::control : Arm::experimental;
    subjects[i] =
        simulate_subject(rates, p, scenario.accrual_months, arm, rng);
    calendar[i] = subjects[i].enroll_calendar + subjects[i].death_time;
  }

  std::vector<double> sorted = calendar;
  const auto kth = sorted.begin() + (scenario.target_deaths - 1);
  std::nth_element(sorted.begin(), kth, sorted.end());
  const double cutoff = *kth;

  std::vector<SubjectRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = subjects[i];
    SubjectRecord& r = records[i];
    r.arm = s.arm;
    if (calendar[i] <= cutoff) {
      r.event = true;
      r.time = s.death_time;
    } else {
      r.time = std::max(0.0, cutoff - s.enroll_calendar);
    }
    if (s.switched && *s.progression_time <= r.time)
      r.switch_time = s.progression_time;
  }
  return {SurvivalDataset(std::move(records)), cutoff};
}

}  // namespace tslr

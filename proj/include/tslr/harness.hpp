#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tslr/sim.hpp"
#include "tslr/survtests.hpp"

namespace tslr {

enum class TestKind { LR, mWLR, FH, MaxCombo, RMST };

TestKind parse_test_kind(const std::string& name);
std::string to_string(TestKind kind);

// One column of a power study. mWLR carries its design p'.
struct TestSpec {
  TestKind kind = TestKind::LR;
  double p_prime = 0.0;
  FHParams fh{};

  std::string label() const;
};

// One cell of the scenario grid (the truth a trial is simulated under).
struct Scenario {
  double median_pfs_control = 2.0;
  double median_os_control = 10.0;
  double median_os_experimental = 15.0;
  double switch_prob = 1.0;
  std::uint32_t target_deaths = 221;
};

struct PowerStudyConfig {
  // Grid axes; scenarios are their Cartesian product.
  std::vector<double> median_os_control{10.0};
  std::vector<double> switch_prob{1.0};
  std::vector<double> median_pfs_control{2.0};
  std::vector<std::uint32_t> target_deaths{221};
  double median_os_experimental = 15.0;

  // Design p' values; one mWLR column each.
  std::vector<double> p_prime{1.0};
  // Design medians for mWLR; unset means "same as the truth".
  std::optional<double> design_median_pfs_control;
  std::optional<double> design_median_os_control;
  std::optional<double> design_median_os_experimental;

  std::uint32_t n_control = 139;
  std::uint32_t n_experimental = 277;
  double accrual_months = 12.0;

  std::uint32_t replications = 2000;
  double alpha = 0.025;
  std::vector<TestKind> tests{TestKind::LR, TestKind::mWLR};
  FHParams fh{0.0, 1.0};
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const;
  std::vector<Scenario> scenarios() const;
  std::vector<TestSpec> test_specs() const;
  SwitchModelParams design_for(const Scenario& s, double p_prime) const;
  TrialScenario trial_for(const Scenario& s) const;
};

struct TestSummary {
  std::string test;
  double power = 0.0;
  double se = 0.0;
  double mean_z = 0.0;
  std::size_t degenerate = 0;
};

struct PairSummary {
  std::string test;
  std::string reference;
  std::optional<double> efficiency;  // percent
  double efficiency_se = 0.0;        // percent, delta method
  double dominance = 0.0;
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<TestSummary> tests;
  std::vector<PairSummary> pairs;
  // Per test, per replication. Degenerate replications hold NaN.
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> p;
  std::vector<std::uint64_t> dataset_hash;

  const TestSummary& summary(const std::string& test) const;
  const PairSummary& pair(const std::string& test,
                          const std::string& reference) const;
};

struct PowerStudyResult {
  PowerStudyConfig config;
  std::vector<TestSpec> tests;
  std::vector<ScenarioResult> scenarios;

  // True when some (scenario, test) had no usable replication.
  bool any_all_degenerate() const;
};

// Worker count: TSLR_WORKERS if set, else hardware threads.
unsigned default_workers();

/// Simulates `replications` trials per scenario and runs every configured
/// test on each. Replication r of every scenario is seeded with
/// derive_seed(seed, r), so all tests (and all scenarios) share the same
/// random numbers. Output is independent of the worker count.
PowerStudyResult run_power_study(const PowerStudyConfig& config);

// The dataset replication `rep` of scenario `s` sees.
SurvivalDataset replication_dataset(const PowerStudyConfig& config,
                                    const Scenario& s, std::uint32_t rep);

std::uint64_t dataset_hash(const SurvivalDataset& data);

// (mean z_a / mean z_b)^2 in percent over replications valid in both;
// nullopt when mean z_b <= 0.
std::optional<double> efficiency(std::span<const double> z_a,
                                 std::span<const double> z_b);
double efficiency_se(std::span<const double> z_a,
                     std::span<const double> z_b);

// Fraction of replications with p_a < p_b.
double p_value_dominance(std::span<const double> p_a,
                         std::span<const double> p_b);

struct EventsSweepRow {
  double switch_prob = 0.0;
  std::uint32_t target_deaths = 0;
  double power = 0.0;
  double se = 0.0;
};

// LR power against the target death count, once under proportional hazards
// (p = 0) and once under `switch_prob`. Uses the first control median and
// PFS median of the config.
std::vector<EventsSweepRow> events_sweep(const PowerStudyConfig& config,
                                         double switch_prob);

void write_results_csv(std::ostream& out, const PowerStudyResult& result);
std::string manifest_json(const PowerStudyResult& result);

}  // namespace tslr

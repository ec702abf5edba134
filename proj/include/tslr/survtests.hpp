#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tslr/model.hpp"
#include "tslr/normal.hpp"
#include "tslr/survdata.hpp"

namespace tslr {

// Zero variance or another degenerate configuration where z is undefined.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One-sided: positive z means excess control deaths, i.e. evidence that the
// experimental arm is better. p = 1 - Phi(z).
struct TestResult {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  double p = 0.5;
  std::vector<double> weights;  // per event time; empty for RMST
  std::optional<double> tau;    // RMST truncation time
};

struct FHParams {
  double rho = 0.0;
  double gamma = 0.0;
};

struct MaxComboResult {
  std::array<TestResult, 4> components;
  Eigen::Matrix4d correlation;
  double z_max = 0.0;
  double p = 0.5;
};

// Components used by max_combo, in order.
inline constexpr std::array<FHParams, 4> kMaxComboComponents{
    {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}};

// Per-row hypergeometric variance n0 n1 d (n - d) / (n^2 (n - 1)); 0 when n = 1.
double hypergeometric_variance(const RiskRow& row);

// Core weighted log-rank on a prebuilt table; weights aligned with rows.
TestResult weighted_logrank(const RiskTable& table,
                            std::span<const double> weights);

TestResult logrank(const SurvivalDataset& data);
TestResult weighted_logrank(const SurvivalDataset& data,
                            const std::function<double(double)>& weight);

/// Modified weighted log-rank: weights -log eta(t) from the switching model
/// evaluated under the design assumptions only. Type-I control relies on the
/// weights being non-negative and non-increasing, which holds when the
/// assumed experimental median exceeds the assumed control median.
TestResult mwlr(const SurvivalDataset& data, const SwitchModelParams& assumed);

// Weights S(t-)^rho (1 - S(t-))^gamma from the left-continuous pooled KM.
TestResult fleming_harrington(const SurvivalDataset& data, FHParams fh);

// Pooled KM left limits S(t_j-) at the rows of the table.
std::vector<double> pooled_km_left_limits(const RiskTable& table);

MaxComboResult max_combo(const SurvivalDataset& data,
                         const MvnOptions& mvn = {});

// p-value of max(Z_1..Z_m) for standard normal Z with correlation `corr`,
// clamped to the Bonferroni interval [1 - Phi(z), m (1 - Phi(z))].
double max_z_p_value(double z_max, const Eigen::MatrixXd& corr,
                     const MvnOptions& mvn = {});

// Difference in RMST (experimental - control) at the minimax follow-up time.
TestResult rmst_test(const SurvivalDataset& data);

}  // namespace tslr

#pragma once

// Exponential progression switching model for the control arm.
//
// Control patients move between three living states: non-progressed (np),
// progressed and switched to the experimental drug (ps), and progressed
// without switching (pns). Progression happens at rate lambda_p0, death at
// lambda_os0 (or lambda_os1 once switched). Experimental patients die at the
// constant rate lambda_os1. All times are in months.

namespace tslr {

struct SwitchModelParams {
  double median_pfs_control = 2.0;
  double median_os_control = 10.0;
  double median_os_experimental = 15.0;
  double switch_prob = 0.0;

  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

struct RateSet {
  double lambda_p0 = 0.0;
  double lambda_os0 = 0.0;
  double lambda_os1 = 0.0;
  double lambda_pfs0 = 0.0;
};

struct StateProbabilities {
  double s_np = 1.0;
  double s_ps = 0.0;
  double s_pns = 0.0;

  double total() const { return s_np + s_ps + s_pns; }
};

RateSet rates_from_medians(const SwitchModelParams& params);

// Median time to progression implied by the PFS and OS medians.
double median_time_to_progression(const SwitchModelParams& params);

// Probability that a control patient progresses and switches before dying.
double switch_fraction_q(const SwitchModelParams& params);

StateProbabilities state_probabilities(const RateSet& rates, double p, double t);
double control_survival(const RateSet& rates, double p, double t);
double control_hazard(const RateSet& rates, double p, double t);

// eta(t) = lambda_os1 / h0(t).
double hazard_ratio(const RateSet& rates, double p, double t);

/// Pre-specified mWLR weight w(t) = -log eta(t), built from design-time
/// assumptions only (assumed medians and assumed switch probability p').
/// Never looks at trial data.
double weight_function(const SwitchModelParams& assumed, double t);

// Same, for callers that evaluate many time points under one design.
class WeightFunction {
 public:
  explicit WeightFunction(const SwitchModelParams& assumed);
  double operator()(double t) const;
  const SwitchModelParams& assumed() const { return assumed_; }

 private:
  SwitchModelParams assumed_;
  RateSet rates_;
};

}  // namespace tslr

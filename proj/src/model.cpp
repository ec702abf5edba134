#include "tslr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tslr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative width of the band around lambda_pfs0 == lambda_os1 where the
// switched-state solution is replaced by its analytic limit.
constexpr double kSingularBand = 1e-9;

// Log of the three living-state probabilities. Working in log space keeps the
// hazard well defined far out in the tail where the states underflow.
struct LogStates {
  double np;
  double ps;
  double pns;
};

// log((1 - exp(-x t)) / x), the integral of exp(-x u) over [0, t].
double log_exp_integral(double x, double t) {
  if (t <= 0.0) return kNegInf;
  if (x > 0.0) return std::log(-std::expm1(-x * t)) - std::log(x);
  // x < 0: (exp(a t) - 1) / a with a = -x
  const double a = -x;
  return a * t + std::log(-std::expm1(-a * t)) - std::log(a);
}

LogStates log_states(const RateSet& r, double p, double t) {
  LogStates s{};
  s.np = -r.lambda_pfs0 * t;

  if (p <= 0.0 || r.lambda_p0 <= 0.0 || t <= 0.0) {
    s.ps = kNegInf;
  } else {
    const double delta = r.lambda_pfs0 - r.lambda_os1;
    const double log_g = std::abs(delta) < kSingularBand * r.lambda_os1
                             ? std::log(t)
                             : log_exp_integral(delta, t);
    s.ps = std::log(p * r.lambda_p0) - r.lambda_os1 * t + log_g;
  }

  if (p >= 1.0 || r.lambda_p0 <= 0.0 || t <= 0.0) {
    s.pns = kNegInf;
  } else {
    s.pns = std::log1p(-p) - r.lambda_os0 * t +
            std::log(-std::expm1(-r.lambda_p0 * t));
  }
  return s;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void SwitchModelParams::validate() const {
  auto positive = [](double m) { return std::isfinite(m) && m > 0.0; };
  require(positive(median_pfs_control),
          "median_pfs_control must be finite and > 0");
  require(positive(median_os_control),
          "median_os_control must be finite and > 0");
  require(positive(median_os_experimental),
          "median_os_experimental must be finite and > 0");
  require(median_os_control > median_pfs_control,
          "median_os_control must exceed median_pfs_control "
          "(progression rate would be non-positive)");
  require(switch_prob >= 0.0 && switch_prob <= 1.0,
          "switch_prob must lie in [0, 1]");
}

RateSet rates_from_medians(const SwitchModelParams& params) {
  params.validate();
  constexpr double ln2 = std::numbers::ln2;
  RateSet r;
  r.lambda_os0 = ln2 / params.median_os_control;
  r.lambda_os1 = ln2 / params.median_os_experimental;
  r.lambda_pfs0 = ln2 / params.median_pfs_control;
  r.lambda_p0 = r.lambda_pfs0 - r.lambda_os0;
  return r;
}

double median_time_to_progression(const SwitchModelParams& params) {
  params.validate();
  return params.median_pfs_control * params.median_os_control /
         (params.median_os_control - params.median_pfs_control);
}

double switch_fraction_q(const SwitchModelParams& params) {
  params.validate();
  return (1.0 - params.median_pfs_control / params.median_os_control) *
         params.switch_prob;
}

StateProbabilities state_probabilities(const RateSet& rates, double p,
                                       double t) {
  if (t < 0.0) throw std::invalid_argument("t must be >= 0");
  const LogStates l = log_states(rates, p, t);
  return {std::exp(l.np), std::exp(l.ps), std::exp(l.pns)};
}

double control_survival(const RateSet& rates, double p, double t) {
  return state_probabilities(rates, p, t).total();
}

double control_hazard(const RateSet& rates, double p, double t) {
  if (t < 0.0) throw std::invalid_argument("t must be >= 0");
  const LogStates l = log_states(rates, p, t);
  // Survivors die at lambda_os0 unless switched. Scale by the largest state so
  // the ratio survives underflow of every individual term.
  const double top = std::max({l.np, l.ps, l.pns});
  const double np = std::exp(l.np - top);
  const double ps = std::exp(l.ps - top);
  const double pns = std::exp(l.pns - top);
  return (rates.lambda_os0 * (np + pns) + rates.lambda_os1 * ps) /
         (np + ps + pns);
}

double hazard_ratio(const RateSet& rates, double p, double t) {
  return rates.lambda_os1 / control_hazard(rates, p, t);
}

double weight_function(const SwitchModelParams& assumed, double t) {
  return WeightFunction(assumed)(t);
}

WeightFunction::WeightFunction(const SwitchModelParams& assumed)
    : assumed_(assumed), rates_(rates_from_medians(assumed)) {}

double WeightFunction::operator()(double t) const {
  return std::log(control_hazard(rates_, assumed_.switch_prob, t) /
                  rates_.lambda_os1);
}

}  // namespace tslr

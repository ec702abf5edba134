#include "tslr/survtests.hpp"

#include <algorithm>
#include <cmath>

namespace tslr {

namespace {

TestResult finish(double u, double v) {
  if (!(v > 0.0)) throw DegenerateError("test variance is zero");
  TestResult r;
  r.u = u;
  r.v = v;
  r.z = u / std::sqrt(v);
  r.p = norm_sf(r.z);
  return r;
}

std::vector<double> evaluate_weights(const RiskTable& table,
                                     const std::function<double(double)>& w) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(w(row.time));
  return out;
}

std::vector<double> fh_weights(std::span<const double> s_left, FHParams fh) {
  std::vector<double> w(s_left.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double s = s_left[j];
    w[j] = std::pow(s, fh.rho) * std::pow(1.0 - s, fh.gamma);
  }
  return w;
}

}  // namespace

double hypergeometric_variance(const RiskRow& row) {
  const double n = row.n();
  if (n <= 1.0) return 0.0;
  const double d = row.d();
  return row.n0 * row.n1 * d * (n - d) / (n * n * (n - 1.0));
}

TestResult weighted_logrank(const RiskTable& table,
                            std::span<const double> weights) {
  if (weights.size() != table.rows.size())
    throw std::invalid_argument("one weight per risk-table row required");
  double u = 0.0, v = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double w = weights[j];
    if (!std::isfinite(w))
      throw std::invalid_argument("non-finite weight at event time " +
                                  std::to_string(table.rows[j].time));
    const auto& row = table.rows[j];
    u += w * (row.d0 - row.d() * row.n0 / row.n());
    v += w * w * hypergeometric_variance(row);
  }
  TestResult r = finish(u, v);
  r.weights.assign(weights.begin(), weights.end());
  return r;
}

TestResult logrank(const SurvivalDataset& data) {
  const RiskTable table = build_risk_table(data);
  const std::vector<double> ones(table.rows.size(), 1.0);
  return weighted_logrank(table, ones);
}

TestResult weighted_logrank(const SurvivalDataset& data,
                            const std::function<double(double)>& weight) {
  const RiskTable table = build_risk_table(data);
  return weighted_logrank(table, evaluate_weights(table, weight));
}

TestResult mwlr(const SurvivalDataset& data, const SwitchModelParams& assumed) {
  const WeightFunction w(assumed);
  const RiskTable table = build_risk_table(data);
  return weighted_logrank(table, evaluate_weights(table, w));
}

std::vector<double> pooled_km_left_limits(const RiskTable& table) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  double s = 1.0;
  for (const auto& row : table.rows) {
    out.push_back(s);
    s *= 1.0 - row.d() / row.n();
  }
  return out;
}

TestResult fleming_harrington(const SurvivalDataset& data, FHParams fh) {
  if (!(fh.rho >= 0.0) || !(fh.gamma >= 0.0) || !std::isfinite(fh.rho) ||
      !std::isfinite(fh.gamma))
    throw std::invalid_argument("FH rho and gamma must be finite and >= 0");
  const RiskTable table = build_risk_table(data);
  return weighted_logrank(table, fh_weights(pooled_km_left_limits(table), fh));
}

double max_z_p_value(double z_max, const Eigen::MatrixXd& corr,
                     const MvnOptions& mvn) {
  const auto m = static_cast<std::size_t>(corr.rows());
  const std::vector<double> upper(m, z_max);
  const double below = mvn_lower_orthant(upper, corr, mvn).value;
  const double tail = norm_sf(z_max);
  return std::clamp(1.0 - below, tail,
                    std::min(1.0, static_cast<double>(m) * tail));
}

MaxComboResult max_combo(const SurvivalDataset& data, const MvnOptions& mvn) {
  const RiskTable table = build_risk_table(data);
  const std::vector<double> s_left = pooled_km_left_limits(table);

  MaxComboResult res;
  for (std::size_t a = 0; a < 4; ++a)
    res.components[a] =
        weighted_logrank(table, fh_weights(s_left, kMaxComboComponents[a]));

  std::vector<double> v(table.rows.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = hypergeometric_variance(table.rows[j]);

  for (int a = 0; a < 4; ++a) {
    res.correlation(a, a) = 1.0;
    for (int b = 0; b < a; ++b) {
      const auto& wa = res.components[a].weights;
      const auto& wb = res.components[b].weights;
      double cov = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) cov += wa[j] * wb[j] * v[j];
      const double c =
          cov / std::sqrt(res.components[a].v * res.components[b].v);
      res.correlation(a, b) = c;
      res.correlation(b, a) = c;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(
      res.correlation, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw DegenerateError("Max Combo correlation matrix is not PSD");

  res.z_max = res.components[0].z;
  for (const auto& c : res.components) res.z_max = std::max(res.z_max, c.z);
  res.p = max_z_p_value(res.z_max, res.correlation, mvn);
  return res;
}

TestResult rmst_test(const SurvivalDataset& data) {
  const double tau = minimax_time(data);
  const RiskTable table = build_risk_table(data);
  if (!(tau > table.rows.front().time))
    throw DegenerateError("RMST truncation time precedes the first event");

  double diff = 0.0, var = 0.0;
  for (Arm arm : {Arm::control, Arm::experimental}) {
    const KMCurve km = kaplan_meier(data.subset(arm));
    const double total = rmst(km, tau);
    diff += arm == Arm::experimental ? total : -total;

    // Area from t_j to tau, accumulated backwards over this arm's deaths.
    const bool ctl = arm == Arm::control;
    double area_before = 0.0, prev_t = 0.0, prev_s = 1.0;
    for (const auto& row : table.rows) {
      if (row.time > tau) break;
      const double d = ctl ? row.d0 : row.d1;
      const double n = ctl ? row.n0 : row.n1;
      if (d == 0.0) continue;
      area_before += prev_s * (row.time - prev_t);
      prev_t = row.time;
      const double tail_area = total - area_before;
      if (n == d) {
        if (row.time < tau && tail_area > 0.0)
          throw DegenerateError("RMST variance term is infinite");
      } else {
        var += tail_area * tail_area * d / (n * (n - d));
      }
      prev_s *= 1.0 - d / n;
    }
  }
  TestResult r = finish(diff, var);
  r.tau = tau;
  return r;
}

}  // namespace tslr

// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tslr/harness.hpp"
#include "tslr/model.hpp"
#include "tslr/sim.hpp"
#include "tslr/survtests.hpp"

using namespace tslr;

namespace {

// Pinned tolerances.
constexpr double kCoincidenceTol = 1e-12;
constexpr double kRk4Tol = 1e-8;
constexpr double kHazardRelTol = 1e-5;
constexpr double kKmSupTol = 0.005;
constexpr double kSwitchSe = 3.0;
constexpr double kLrPower5 = 0.96, kLrPower5Tol = 0.03;
constexpr double kMwlrPower5 = 0.99, kMwlrPower5Tol = 0.02;
constexpr double kLrPower75 = 0.45, kLrPower75Tol = 0.04;
constexpr double kMwlrPower75 = 0.66, kMwlrPower75Tol = 0.04;
constexpr double kEff11 = 187, kEff11Tol = 20;
constexpr double kEff007 = 87, kEff007Tol = 6;
constexpr double kEff0707 = 115, kEff0707Tol = 10;
constexpr double kDominanceMin = 0.98;
constexpr double kAlpha = 0.025, kAlphaTol = 0.006;
constexpr double kSweepPeakSe = 3.0, kSweepMonotoneSe = 2.0;
constexpr double kEffRmst = 137, kEffRmstTol = 15;
constexpr double kEffMaxCombo = 200, kEffMaxComboTol = 25;
constexpr double kPfsGapSe = 2.0;
constexpr double kOrthantSe = 3.0;

constexpr std::uint32_t kDeskReps = 2000;
constexpr std::uint32_t kNullReps = 10000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

PowerStudyConfig desk_config() {
  PowerStudyConfig c;
  c.replications = kDeskReps;
  c.seed = 20240601;
  c.workers = default_workers();
  return c;
}

double eff(const ScenarioResult& s, const std::string& a,
           const std::string& b) {
  const auto e = s.pair(a, b).efficiency;
  return e ? *e : std::nan("");
}

const ScenarioResult& find_scenario(const PowerStudyResult& r, double os0,
                                    double p, double pfs0 = 2.0) {
  for (const auto& s : r.scenarios)
    if (s.scenario.median_os_control == os0 && s.scenario.switch_prob == p &&
        s.scenario.median_pfs_control == pfs0)
      return s;
  throw std::runtime_error("scenario not in study");
}

std::array<double, 3> rk4(const RateSet& r, double p, double t_end, double h,
                          std::array<double, 3> s) {
  auto f = [&](const std::array<double, 3>& x) {
    return std::array<double, 3>{
        -(r.lambda_p0 + r.lambda_os0) * x[0],
        p * r.lambda_p0 * x[0] - r.lambda_os1 * x[1],
        (1 - p) * r.lambda_p0 * x[0] - r.lambda_os0 * x[2]};
  };
  const int steps = static_cast<int>(std::lround(t_end / h));
  for (int i = 0; i < steps; ++i) {
    std::array<double, 3> k1 = f(s), tmp, k2, k3, k4;
    for (int j = 0; j < 3; ++j) tmp[j] = s[j] + 0.5 * h * k1[j];
    k2 = f(tmp);
    for (int j = 0; j < 3; ++j) tmp[j] = s[j] + 0.5 * h * k2[j];
    k3 = f(tmp);
    for (int j = 0; j < 3; ++j) tmp[j] = s[j] + h * k3[j];
    k4 = f(tmp);
    for (int j = 0; j < 3; ++j)
      s[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return s;
}

Outcome c1_coincidence() {
  double worst_mwlr = 0, worst_fh = 0;
  for (std::uint64_t s = 1; s <= 200; ++s) {
    const auto d = tslr::testing::random_dataset(s, 10, 200);
    const double z = logrank(d).z;
    worst_mwlr = std::max(worst_mwlr, std::abs(mwlr(d, {2, 10, 15, 0}).z - z));
    worst_fh =
        std::max(worst_fh, std::abs(fleming_harrington(d, {0, 0}).z - z));
  }
  return {worst_mwlr <= kCoincidenceTol && worst_fh <= kCoincidenceTol,
          "max |dz| mWLR(p'=0) " + num(worst_mwlr) + ", FH(0,0) " +
              num(worst_fh)};
}

Outcome c2_rk4() {
  // Nine median triples (three with lambda_pfs0 == lambda_os1) by three p.
  const std::vector<std::array<double, 3>> medians{
      {2, 10, 15}, {1, 10, 15}, {4, 10, 15}, {2, 5, 15}, {3, 7.5, 12},
      {1.5, 20, 30}, {5, 10, 5}, {3, 8, 3}, {2, 4, 2}};
  double worst = 0;
  int combos = 0;
  for (const auto& m : medians) {
    for (double p : {0.3, 0.7, 1.0}) {
      ++combos;
      const RateSet r = rates_from_medians({m[0], m[1], m[2], p});
      std::array<double, 3> s{1, 0, 0};
      const double h = 0.005;
      for (int k = 1; k <= 100; ++k) {
        s = rk4(r, p, 0.5, h, s);
        const auto c = state_probabilities(r, p, 0.5 * k);
        worst = std::max({worst, std::abs(c.s_np - s[0]),
                          std::abs(c.s_ps - s[1]), std::abs(c.s_pns - s[2])});
      }
    }
  }
  return {worst <= kRk4Tol,
          std::to_string(combos) + " combos, sup error " + num(worst)};
}

Outcome c3_hazard() {
  const double d = 1e-5;
  double worst = 0;
  for (double pfs : {1.0, 2.0, 4.0})
    for (double p : {0.2, 0.5, 1.0}) {
      const RateSet r = rates_from_medians({pfs, 10, 15, p});
      for (double t = 0.01; t <= 40.0 + 1e-9; t += 0.01) {
        const double fd = -(std::log(control_survival(r, p, t + d)) -
                            std::log(control_survival(r, p, t - d))) /
                          (2 * d);
        const double h = control_hazard(r, p, t);
        worst = std::max(worst, std::abs(h - fd) / h);
      }
    }
  return {worst <= kHazardRelTol, "max relative error " + num(worst)};
}

Outcome c4_simulator() {
  const SwitchModelParams params{2, 10, 15, 1};
  const RateSet rates = rates_from_medians(params);
  const int n = 1000000;
  std::vector<SubjectRecord> recs;
  recs.reserve(n);
  int switched = 0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng(derive_seed(424242, i));
    const auto s = simulate_subject(rates, 1.0, 12, Arm::control, rng);
    switched += s.switched;
    recs.push_back({s.death_time, true, Arm::control, {}});
  }
  const KMCurve km = kaplan_meier(SurvivalDataset(std::move(recs)));
  double sup = 0;
  const auto times = km.jump_times();
  for (double t : times) {
    if (t > 30) break;
    const double s0 = control_survival(rates, 1.0, t);
    sup = std::max({sup, std::abs(km.at(t) - s0), std::abs(km.before(t) - s0)});
  }
  const double q = switch_fraction_q(params);
  const double frac = static_cast<double>(switched) / n;
  const double se = std::sqrt(q * (1 - q) / n);
  return {sup <= kKmSupTol && std::abs(frac - q) <= kSwitchSe * se,
          "KM sup distance " + num(sup) + ", switch fraction " + num(frac, 5) +
              " (q " + num(q) + ", " + num(std::abs(frac - q) / se, 3) +
              " SE)"};
}

Outcome c5_power(const PowerStudyResult& r) {
  const auto& a = find_scenario(r, 5, 1);
  const auto& b = find_scenario(r, 7.5, 1);
  const double lr5 = a.summary("LR").power, mw5 = a.summary("mWLR(p'=1)").power;
  const double lr75 = b.summary("LR").power,
               mw75 = b.summary("mWLR(p'=1)").power;
  const bool ok = std::abs(lr5 - kLrPower5) <= kLrPower5Tol &&
                  std::abs(mw5 - kMwlrPower5) <= kMwlrPower5Tol &&
                  std::abs(lr75 - kLrPower75) <= kLrPower75Tol &&
                  std::abs(mw75 - kMwlrPower75) <= kMwlrPower75Tol;
  return {ok, "mOS0=5: LR " + num(lr5, 3) + " mWLR " + num(mw5, 3) +
                  "; mOS0=7.5: LR " + num(lr75, 3) + " mWLR " + num(mw75, 3)};
}

Outcome c6_efficiency(const PowerStudyResult& r) {
  const double e11 = eff(find_scenario(r, 10, 1), "mWLR(p'=1)", "LR");
  const double e007 = eff(find_scenario(r, 10, 0), "mWLR(p'=0.7)", "LR");
  const double e77 = eff(find_scenario(r, 10, 0.7), "mWLR(p'=0.7)", "LR");
  const bool ok = std::abs(e11 - kEff11) <= kEff11Tol &&
                  std::abs(e007 - kEff007) <= kEff007Tol &&
                  std::abs(e77 - kEff0707) <= kEff0707Tol;
  return {ok, "p=p'=1 " + num(e11) + "%, p=0 p'=0.7 " + num(e007) +
                  "%, p=p'=0.7 " + num(e77) + "%"};
}

Outcome c7_dominance(const PowerStudyResult& r) {
  const double dom =
      find_scenario(r, 10, 1).pair("mWLR(p'=1)", "LR").dominance;
  return {dom >= kDominanceMin,
          "P(p_mWLR < p_LR) = " + num(dom, 4) + " (need >= " +
              num(kDominanceMin) + ")"};
}

Outcome c8_type_one() {
  PowerStudyConfig c = desk_config();
  c.replications = kNullReps;
  c.median_os_control = {15};
  c.median_os_experimental = 15;
  c.switch_prob = {1};
  c.design_median_os_control = 10;
  c.design_median_os_experimental = 15;
  c.design_median_pfs_control = 2;
  c.p_prime = {0.7, 1.0};
  c.tests = {TestKind::LR, TestKind::mWLR, TestKind::RMST, TestKind::MaxCombo};
  const PowerStudyResult r = run_power_study(c);
  bool ok = true;
  std::string detail;
  for (const auto& t : r.scenarios[0].tests) {
    ok = ok && std::abs(t.power - kAlpha) <= kAlphaTol;
    detail += t.test + " " + num(t.power, 3) + " ";
  }
  return {ok, detail};
}

Outcome c9_events_sweep() {
  PowerStudyConfig c = desk_config();
  c.target_deaths = {20, 40, 60, 80, 100, 150, 200, 250, 300, 350, 400, 416};
  const auto rows = events_sweep(c, 1.0);
  std::vector<EventsSweepRow> null_rows, sw_rows;
  for (const auto& row : rows)
    (row.switch_prob == 0 ? null_rows : sw_rows).push_back(row);
  const auto& last = sw_rows.back();
  std::size_t best = 1;
  for (std::size_t i = 2; i + 1 < sw_rows.size(); ++i)
    if (sw_rows[i].power > sw_rows[best].power) best = i;
  const double gap = sw_rows[best].power - last.power;
  const double gap_se =
      std::sqrt(sw_rows[best].se * sw_rows[best].se + last.se * last.se);
  const bool peak = gap > kSweepPeakSe * gap_se;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < null_rows.size(); ++i) {
    const double se = std::sqrt(null_rows[i].se * null_rows[i].se +
                                 null_rows[i + 1].se * null_rows[i + 1].se);
    if (null_rows[i + 1].power < null_rows[i].power - kSweepMonotoneSe * se)
      monotone = false;
  }
  std::string curve;
  for (const auto& row : sw_rows) curve += num(row.power, 3) + " ";
  return {peak && monotone,
          "p=1 powers " + curve + "| peak at " +
              std::to_string(sw_rows[best].target_deaths) + " deaths exceeds " +
              std::to_string(last.target_deaths) + " by " +
              num(gap / gap_se, 3) + " SE; p=0 monotone " +
              (monotone ? "yes" : "no")};
}

Outcome c10_comparators() {
  PowerStudyConfig c = desk_config();
  c.p_prime = {0.7};
  c.tests = {TestKind::LR, TestKind::mWLR, TestKind::RMST, TestKind::MaxCombo};
  const PowerStudyResult r = run_power_study(c);
  const auto& s = r.scenarios[0];
  const double er = eff(s, "mWLR(p'=0.7)", "RMST");
  const double em = eff(s, "mWLR(p'=0.7)", "MaxCombo");
  return {std::abs(er - kEffRmst) <= kEffRmstTol &&
              std::abs(em - kEffMaxCombo) <= kEffMaxComboTol,
          "vs RMST " + num(er) + "% (SE " +
              num(s.pair("mWLR(p'=0.7)", "RMST").efficiency_se, 3) +
              "), vs MaxCombo " + num(em) + "% (SE " +
              num(s.pair("mWLR(p'=0.7)", "MaxCombo").efficiency_se, 3) + ")"};
}

Outcome c11_pfs_sensitivity() {
  PowerStudyConfig c = desk_config();
  c.median_pfs_control = {1, 2, 4};
  const PowerStudyResult r = run_power_study(c);
  std::vector<double> e, se;
  for (double pfs : {1.0, 2.0, 4.0}) {
    const auto& pr = find_scenario(r, 10, 1, pfs).pair("mWLR(p'=1)", "LR");
    e.push_back(pr.efficiency.value_or(std::nan("")));
    se.push_back(pr.efficiency_se);
  }
  bool ok = true;
  std::string gaps;
  for (int i = 0; i < 2; ++i) {
    const double g = e[i] - e[i + 1];
    const double gse = std::sqrt(se[i] * se[i] + se[i + 1] * se[i + 1]);
    ok = ok && g > kPfsGapSe * gse;
    gaps += num(g / gse, 3) + " SE ";
  }
  return {ok, "mPFS0=1,2,4: " + num(e[0]) + "%, " + num(e[1]) + "%, " +
                  num(e[2]) + "%; gaps " + gaps};
}

Outcome c12_orthant() {
  TrialScenario sc;
  sc.n_control = 60;
  sc.n_experimental = 90;
  sc.target_deaths = 100;
  const int draws = 1000000;
  double worst = 0;
  bool bounds = true;
  for (std::uint64_t k = 0; k < 50; ++k) {
    sc.true_params.switch_prob = (k % 5) / 4.0;
    const auto d = simulate_trial(sc, 9000 + k).data;
    const MaxComboResult m = max_combo(d);
    const double tail = norm_sf(m.z_max);
    bounds = bounds && m.p >= tail && m.p <= 4 * tail;
    // Sample through the symmetric square root, which handles the
    // singular matrix.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m.correlation);
    const Eigen::Matrix4d root =
        eig.eigenvectors() *
        eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
        eig.eigenvectors().transpose();
    std::mt19937_64 gen(derive_seed(31337, k));
    std::normal_distribution<double> normal;
    long exceed = 0;
    for (int i = 0; i < draws; ++i) {
      Eigen::Vector4d e;
      for (int j = 0; j < 4; ++j) e[j] = normal(gen);
      exceed += (root * e).maxCoeff() > m.z_max;
    }
    const double mc = static_cast<double>(exceed) / draws;
    const double se = std::sqrt(std::max(mc * (1 - mc), 1e-12) / draws);
    worst = std::max(worst, std::abs(m.p - mc) / se);
  }
  return {worst <= kOrthantSe && bounds,
          "worst |p - p_MC| = " + num(worst, 3) + " MC SE; Bonferroni " +
              (bounds ? "ok" : "violated")};
}

Outcome c13_determinism() {
  PowerStudyConfig c = desk_config();
  c.replications = 200;
  c.median_os_control = {7.5, 10};
  c.p_prime = {0.7, 1};
  c.tests = {TestKind::LR, TestKind::mWLR, TestKind::FH, TestKind::MaxCombo,
             TestKind::RMST};
  std::string out[2];
  const unsigned workers[2] = {1, 8};
  for (int i = 0; i < 2; ++i) {
    c.workers = workers[i];
    std::ostringstream os;
    write_results_csv(os, run_power_study(c));
    out[i] = os.str();
  }
  return {out[0] == out[1], std::to_string(out[0].size()) +
                                " bytes, identical: " +
                                (out[0] == out[1] ? "yes" : "no")};
}

}  // namespace

int main() {
  // Shared desk-scale study for the power, efficiency and dominance points.
  PowerStudyResult main_study;
  auto study = [&]() -> const PowerStudyResult& {
    if (main_study.scenarios.empty()) {
      PowerStudyConfig c = desk_config();
      c.median_os_control = {5, 7.5, 10};
      c.switch_prob = {0, 0.7, 1};
      c.p_prime = {0.7, 1};
      main_study = run_power_study(c);
    }
    return main_study;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 exact coincidence with log-rank", c1_coincidence},
      {"C2 state probabilities vs RK4", c2_rk4},
      {"C3 hazard vs finite difference", c3_hazard},
      {"C4 simulator vs model", c4_simulator},
      {"C5 power points", [&] { return c5_power(study()); }},
      {"C6 efficiency points", [&] { return c6_efficiency(study()); }},
      {"C7 p-value dominance", [&] { return c7_dominance(study()); }},
      {"C8 type-I error", c8_type_one},
      {"C9 events sweep shape", c9_events_sweep},
      {"C10 comparator efficiency", c10_comparators},
      {"C11 mPFS0 sensitivity", c11_pfs_sensitivity},
      {"C12 Max Combo p-value vs Monte Carlo", c12_orthant},
      {"C13 determinism across workers", c13_determinism},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    failed += !o.pass;
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

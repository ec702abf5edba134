#include "tslr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tslr/version.hpp"

namespace tslr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

struct Outcome {
  double z = kNaN;
  double p = kNaN;
};

Outcome run_one(const TestSpec& spec, const SwitchModelParams& design,
                const SurvivalDataset& data) {
  try {
    switch (spec.kind) {
      case TestKind::LR: {
        const auto r = logrank(data);
        return {r.z, r.p};
      }
      case TestKind::mWLR: {
        const auto r = mwlr(data, design);
        return {r.z, r.p};
      }
      case TestKind::FH: {
        const auto r = fleming_harrington(data, spec.fh);
        return {r.z, r.p};
      }
      case TestKind::MaxCombo: {
        // z_max is not standard normal under H0; report the normal score
        // with the same one-sided p-value so z-based summaries compare.
        const auto r = max_combo(data);
        return {-norm_quantile(r.p), r.p};
      }
      case TestKind::RMST: {
        const auto r = rmst_test(data);
        return {r.z, r.p};
      }
    }
  } catch (const DegenerateError&) {
  } catch (const DataError&) {
  }
  return {};
}

struct Moments {
  double n = 0, mean_a = 0, mean_b = 0, var_a = 0, var_b = 0, cov = 0;
};

Moments paired_moments(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired lists must have equal length");
  Moments m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    m.n += 1;
    m.mean_a += a[i];
    m.mean_b += b[i];
  }
  if (m.n == 0) return m;
  m.mean_a /= m.n;
  m.mean_b /= m.n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double da = a[i] - m.mean_a, db = b[i] - m.mean_b;
    m.var_a += da * da;
    m.var_b += db * db;
    m.cov += da * db;
  }
  if (m.n > 1) {
    m.var_a /= m.n - 1;
    m.var_b /= m.n - 1;
    m.cov /= m.n - 1;
  }
  return m;
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
}

}  // namespace

TestKind parse_test_kind(const std::string& name) {
  if (name == "LR" || name == "lr") return TestKind::LR;
  if (name == "mWLR" || name == "mwlr") return TestKind::mWLR;
  if (name == "FH" || name == "fh") return TestKind::FH;
  if (name == "MaxCombo" || name == "maxcombo") return TestKind::MaxCombo;
  if (name == "RMST" || name == "rmst") return TestKind::RMST;
  throw std::invalid_argument("unknown test '" + name + "'");
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::LR: return "LR";
    case TestKind::mWLR: return "mWLR";
    case TestKind::FH: return "FH";
    case TestKind::MaxCombo: return "MaxCombo";
    case TestKind::RMST: return "RMST";
  }
  return "?";
}

std::string TestSpec::label() const {
  switch (kind) {
    case TestKind::mWLR:
      return "mWLR(p'=" + fmt_double(p_prime) + ")";
    case TestKind::FH:
      return "FH(" + fmt_double(fh.rho) + "," + fmt_double(fh.gamma) + ")";
    default:
      return to_string(kind);
  }
}

void PowerStudyConfig::validate() const {
  require(replications >= 1, "replications must be >= 1");
  require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 0.5)");
  require(!median_os_control.empty() && !switch_prob.empty() &&
              !median_pfs_control.empty() && !target_deaths.empty(),
          "scenario grid axes must be non-empty");
  require(!tests.empty(), "at least one test is required");
  const bool has_mwlr =
      std::find(tests.begin(), tests.end(), TestKind::mWLR) != tests.end();
  require(!has_mwlr || !p_prime.empty(), "mWLR requires p_prime values");
  for (double pp : p_prime)
    require(pp >= 0.0 && pp <= 1.0, "p_prime must lie in [0, 1]");
  for (const auto& s : scenarios()) {
    trial_for(s).validate();
    if (has_mwlr)
      for (double pp : p_prime) design_for(s, pp).validate();
  }
}

std::vector<Scenario> PowerStudyConfig::scenarios() const {
  std::vector<Scenario> out;
  for (double pfs : median_pfs_control)
    for (double os0 : median_os_control)
      for (double p : switch_prob)
        for (std::uint32_t deaths : target_deaths)
          out.push_back({pfs, os0, median_os_experimental, p, deaths});
  return out;
}

std::vector<TestSpec> PowerStudyConfig::test_specs() const {
  std::vector<TestSpec> out;
  for (TestKind k : tests) {
    if (k == TestKind::mWLR) {
      for (double pp : p_prime) out.push_back({k, pp, {}});
    } else {
      out.push_back({k, 0.0, k == TestKind::FH ? fh : FHParams{}});
    }
  }
  return out;
}

SwitchModelParams PowerStudyConfig::design_for(const Scenario& s,
                                               double p_prime) const {
  return {design_median_pfs_control.value_or(s.median_pfs_control),
          design_median_os_control.value_or(s.median_os_control),
          design_median_os_experimental.value_or(s.median_os_experimental),
          p_prime};
}

TrialScenario PowerStudyConfig::trial_for(const Scenario& s) const {
  TrialScenario t;
  t.n_control = n_control;
  t.n_experimental = n_experimental;
  t.accrual_months = accrual_months;
  t.target_deaths = s.target_deaths;
  t.true_params = {s.median_pfs_control, s.median_os_control,
                   s.median_os_experimental, s.switch_prob};
  t.seed = seed;
  return t;
}

const TestSummary& ScenarioResult::summary(const std::string& test) const {
  for (const auto& t : tests)
    if (t.test == test) return t;
  throw std::out_of_range("no test " + test);
}

const PairSummary& ScenarioResult::pair(const std::string& test,
                                        const std::string& reference) const {
  for (const auto& p : pairs)
    if (p.test == test && p.reference == reference) return p;
  throw std::out_of_range("no pair " + test + " vs " + reference);
}

bool PowerStudyResult::any_all_degenerate() const {
  for (const auto& s : scenarios)
    for (const auto& t : s.tests)
      if (t.degenerate == config.replications) return true;
  return false;
}

unsigned default_workers() {
  if (const char* env = std::getenv("TSLR_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t dataset_hash(const SurvivalDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& r : data.records()) {
    fnv_mix(h, &r.time, sizeof r.time);
    const unsigned char flags =
        static_cast<unsigned char>((r.event ? 1 : 0) |
                                   (r.arm == Arm::experimental ? 2 : 0) |
                                   (r.switch_time ? 4 : 0));
    fnv_mix(h, &flags, 1);
    if (r.switch_time) fnv_mix(h, &*r.switch_time, sizeof(double));
  }
  return h;
}

SurvivalDataset replication_dataset(const PowerStudyConfig& config,
                                    const Scenario& s, std::uint32_t rep) {
  return simulate_trial(config.trial_for(s), derive_seed(config.seed, rep))
      .data;
}

std::optional<double> efficiency(std::span<const double> z_a,
                                 std::span<const double> z_b) {
  const Moments m = paired_moments(z_a, z_b);
  if (m.n == 0 || !(m.mean_b > 0.0)) return std::nullopt;
  const double ratio = m.mean_a / m.mean_b;
  return 100.0 * ratio * ratio;
}

double efficiency_se(std::span<const double> z_a,
                     std::span<const double> z_b) {
  const Moments m = paired_moments(z_a, z_b);
  if (m.n < 2 || !(m.mean_b > 0.0)) return kNaN;
  const double a = m.mean_a, b = m.mean_b;
  const double ga = 200.0 * a / (b * b);
  const double gb = -200.0 * a * a / (b * b * b);
  const double var =
      (ga * ga * m.var_a + gb * gb * m.var_b + 2.0 * ga * gb * m.cov) / m.n;
  return std::sqrt(std::max(0.0, var));
}

double p_value_dominance(std::span<const double> p_a,
                         std::span<const double> p_b) {
  if (p_a.size() != p_b.size())
    throw std::invalid_argument("paired lists must have equal length");
  if (p_a.empty()) return 0.0;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < p_a.size(); ++i)
    if (p_a[i] < p_b[i]) ++wins;
  return static_cast<double>(wins) / static_cast<double>(p_a.size());
}

PowerStudyResult run_power_study(const PowerStudyConfig& config) {
  config.validate();
  PowerStudyResult result;
  result.config = config;
  result.tests = config.test_specs();
  const std::size_t n_tests = result.tests.size();
  const std::uint32_t reps = config.replications;
  const double critical = norm_quantile(1.0 - config.alpha);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.workers ? config.workers
                                                     : default_workers(),
                                      reps));

  for (const Scenario& sc : config.scenarios()) {
    ScenarioResult sr;
    sr.scenario = sc;
    sr.z.assign(n_tests, std::vector<double>(reps, kNaN));
    sr.p.assign(n_tests, std::vector<double>(reps, kNaN));
    sr.dataset_hash.assign(reps, 0);

    std::vector<SwitchModelParams> designs;
    for (const auto& t : result.tests)
      designs.push_back(t.kind == TestKind::mWLR
                            ? config.design_for(sc, t.p_prime)
                            : SwitchModelParams{});

    // Workers claim replication indices; every slot is written by exactly
    // one worker, so the layout never depends on scheduling.
    std::atomic<std::uint32_t> next{0};
    auto work = [&] {
      for (std::uint32_t rep = next++; rep < reps; rep = next++) {
        const SurvivalDataset data = replication_dataset(config, sc, rep);
        sr.dataset_hash[rep] = dataset_hash(data);
        for (std::size_t t = 0; t < n_tests; ++t) {
          const Outcome o = run_one(result.tests[t], designs[t], data);
          sr.z[t][rep] = o.z;
          sr.p[t][rep] = o.p;
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    for (std::size_t t = 0; t < n_tests; ++t) {
      TestSummary s;
      s.test = result.tests[t].label();
      std::size_t rejections = 0, valid = 0;
      double z_sum = 0.0;
      for (double z : sr.z[t]) {
        if (std::isnan(z)) {
          ++s.degenerate;
          continue;
        }
        ++valid;
        z_sum += z;
        if (z > critical) ++rejections;
      }
      s.power = static_cast<double>(rejections) / reps;
      s.se = std::sqrt(s.power * (1.0 - s.power) / reps);
      s.mean_z = valid ? z_sum / static_cast<double>(valid) : kNaN;
      sr.tests.push_back(s);
    }
    for (std::size_t a = 0; a < n_tests; ++a) {
      for (std::size_t b = 0; b < n_tests; ++b) {
        if (a == b) continue;
        PairSummary ps;
        ps.test = sr.tests[a].test;
        ps.reference = sr.tests[b].test;
        ps.efficiency = efficiency(sr.z[a], sr.z[b]);
        ps.efficiency_se = efficiency_se(sr.z[a], sr.z[b]);
        ps.dominance = p_value_dominance(sr.p[a], sr.p[b]);
        sr.pairs.push_back(ps);
      }
    }
    result.scenarios.push_back(std::move(sr));
  }
  return result;
}

std::vector<EventsSweepRow> events_sweep(const PowerStudyConfig& config,
                                         double switch_prob) {
  require(std::is_sorted(config.target_deaths.begin(),
                         config.target_deaths.end()),
          "target_deaths must be ascending");
  PowerStudyConfig c = config;
  c.median_os_control.resize(1);
  c.median_pfs_control.resize(1);
  c.switch_prob = {0.0};
  if (switch_prob != 0.0) c.switch_prob.push_back(switch_prob);
  c.tests = {TestKind::LR};
  const PowerStudyResult res = run_power_study(c);

  std::vector<EventsSweepRow> rows;
  for (const auto& s : res.scenarios)
    rows.push_back({s.scenario.switch_prob, s.scenario.target_deaths,
                    s.tests[0].power, s.tests[0].se});
  return rows;
}

void write_results_csv(std::ostream& out, const PowerStudyResult& result) {
  std::string buf =
      "scenario,median_pfs_control,median_os_control,median_os_experimental,"
      "switch_prob,target_deaths,test,reference,metric,value\n";
  for (std::size_t i = 0; i < result.scenarios.size(); ++i) {
    const auto& sr = result.scenarios[i];
    const auto& s = sr.scenario;
    const std::string prefix =
        std::to_string(i) + "," + fmt_double(s.median_pfs_control) + "," +
        fmt_double(s.median_os_control) + "," +
        fmt_double(s.median_os_experimental) + "," +
        fmt_double(s.switch_prob) + "," + std::to_string(s.target_deaths) +
        ",";
    auto row = [&](const std::string& test, const std::string& ref,
                   const char* metric, double value) {
      buf += prefix;
      // Labels contain commas (FH(0,1)); quote them.
      buf += '"' + test + "\",\"" + ref + "\",";
      buf += metric;
      buf += ',';
      buf += fmt_double(value);
      buf += '\n';
    };
    for (const auto& t : sr.tests) {
      row(t.test, "", "power", t.power);
      row(t.test, "", "se", t.se);
      row(t.test, "", "mean_z", t.mean_z);
      row(t.test, "", "degenerate", static_cast<double>(t.degenerate));
    }
    for (const auto& p : sr.pairs) {
      row(p.test, p.reference, "efficiency", p.efficiency.value_or(kNaN));
      row(p.test, p.reference, "efficiency_se", p.efficiency_se);
      row(p.test, p.reference, "dominance", p.dominance);
    }
  }
  out << buf;
}

std::string manifest_json(const PowerStudyResult& result) {
  const auto& c = result.config;
  nlohmann::ordered_json j;
  j["software"] = "tslr";
  j["version"] = kVersion;
  j["seed"] = c.seed;
  j["replications"] = c.replications;
  j["alpha"] = c.alpha;
  j["n_control"] = c.n_control;
  j["n_experimental"] = c.n_experimental;
  j["accrual_months"] = c.accrual_months;
  j["median_os_experimental"] = c.median_os_experimental;
  j["median_os_control"] = c.median_os_control;
  j["median_pfs_control"] = c.median_pfs_control;
  j["switch_prob"] = c.switch_prob;
  j["p_prime"] = c.p_prime;
  j["target_deaths"] = c.target_deaths;
  if (c.design_median_pfs_control)
    j["design_median_pfs_control"] = *c.design_median_pfs_control;
  if (c.design_median_os_control)
    j["design_median_os_control"] = *c.design_median_os_control;
  if (c.design_median_os_experimental)
    j["design_median_os_experimental"] = *c.design_median_os_experimental;
  j["fh"] = {c.fh.rho, c.fh.gamma};
  std::vector<std::string> tests;
  for (const auto& t : result.tests) tests.push_back(t.label());
  j["tests"] = tests;

  nlohmann::ordered_json scen = nlohmann::ordered_json::array();
  for (const auto& sr : result.scenarios) {
    std::uint64_t digest = 0xcbf29ce484222325ull;
    for (std::uint64_t h : sr.dataset_hash) fnv_mix(digest, &h, sizeof h);
    std::size_t degenerate = 0;
    for (const auto& t : sr.tests) degenerate += t.degenerate;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(digest));
    scen.push_back({{"median_pfs_control", sr.scenario.median_pfs_control},
                    {"median_os_control", sr.scenario.median_os_control},
                    {"switch_prob", sr.scenario.switch_prob},
                    {"target_deaths", sr.scenario.target_deaths},
                    {"dataset_digest", hex},
                    {"degenerate_results", degenerate}});
  }
  j["scenarios"] = scen;
  return j.dump(2) + "\n";
}

}  // namespace tslr

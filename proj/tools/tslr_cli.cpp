// tslr: weight curves, dataset analysis, trial simulation and power studies
// for log-rank tests under treatment switching. All times are in months.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tslr/config.hpp"
#include "tslr/harness.hpp"
#include "tslr/model.hpp"
#include "tslr/sim.hpp"
#include "tslr/survdata.hpp"
#include "tslr/survtests.hpp"

namespace {

using namespace tslr;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDegenerate = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to `path`, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct WeightsArgs {
  double pfs0 = 2.0, os0 = 10.0, os1 = 15.0;
  std::vector<double> p_prime{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  double t_max = 40.0, step = 0.1;
  std::string out = "-";
};

int run_weights(const WeightsArgs& a) {
  if (!(a.t_max > 0.0)) throw UsageError("--t-max must be > 0");
  if (!(a.step > 0.0)) throw UsageError("--step must be > 0");
  std::vector<WeightFunction> curves;
  std::vector<RateSet> rates;
  for (double pp : a.p_prime) {
    const SwitchModelParams params{a.pfs0, a.os0, a.os1, pp};
    try {
      params.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    curves.emplace_back(params);
    rates.push_back(rates_from_medians(params));
  }
  Output out(a.out);
  std::string buf = "p_prime,t,eta,w\n";
  const auto steps = static_cast<long>(std::floor(a.t_max / a.step + 1e-9));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (long k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * a.step;
      const double eta = hazard_ratio(rates[c], a.p_prime[c], t);
      buf += fmt(a.p_prime[c]) + "," + fmt(t) + "," + fmt(eta) + "," +
             fmt(curves[c](t)) + "\n";
    }
  }
  out.stream() << buf;
  return 0;
}

struct AnalyzeArgs {
  std::string data;
  std::vector<std::string> tests{"lr"};
  std::optional<double> p_prime;
  double pfs0 = 2.0, os0 = 10.0, os1 = 15.0;
  std::vector<double> fh{0.0, 1.0};
  std::string out = "-";
};

nlohmann::ordered_json result_json(const std::string& name,
                                   const TestResult& r) {
  nlohmann::ordered_json j;
  j["test"] = name;
  j["U"] = r.u;
  j["V"] = r.v;
  j["z"] = r.z;
  j["p"] = r.p;
  if (r.tau) j["tau"] = *r.tau;
  return j;
}

int run_analyze(const AnalyzeArgs& a) {
  std::vector<TestKind> kinds;
  for (const auto& t : a.tests) {
    try {
      kinds.push_back(parse_test_kind(t));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  SwitchModelParams design{a.pfs0, a.os0, a.os1, a.p_prime.value_or(0.0)};
  if (std::find(kinds.begin(), kinds.end(), TestKind::mWLR) != kinds.end()) {
    if (!a.p_prime) throw UsageError("mwlr requires --p-prime");
    try {
      design.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (a.fh.size() != 2) throw UsageError("--fh takes rho,gamma");

  const SurvivalDataset data = read_dataset_file(a.data);
  Output out(a.out);
  bool degenerate = false;
  for (TestKind k : kinds) {
    const std::string name = to_string(k);
    nlohmann::ordered_json j;
    try {
      switch (k) {
        case TestKind::LR: j = result_json(name, logrank(data)); break;
        case TestKind::mWLR: j = result_json(name, mwlr(data, design)); break;
        case TestKind::FH:
          j = result_json(name,
                          fleming_harrington(data, {a.fh[0], a.fh[1]}));
          break;
        case TestKind::RMST: j = result_json(name, rmst_test(data)); break;
        case TestKind::MaxCombo: {
          const MaxComboResult r = max_combo(data);
          j["test"] = name;
          j["U"] = nullptr;
          j["V"] = nullptr;
          j["z"] = r.z_max;
          j["p"] = r.p;
          break;
        }
      }
    } catch (const DegenerateError& e) {
      degenerate = true;
      j = nlohmann::ordered_json{{"test", name}, {"error", e.what()}};
    }
    out.stream() << j.dump() << "\n";
  }
  return degenerate ? kExitDegenerate : 0;
}

struct SimulateArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  if (!a.seed) throw UsageError("--seed is required");
  TrialScenario sc;
  if (!a.scenario.empty()) {
    std::ifstream in(a.scenario);
    if (!in) throw DataError("cannot open " + a.scenario);
    sc = parse_scenario(in);
  }
  sc.seed = *a.seed;
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SimulatedTrial trial = simulate_trial(sc);
  {
    Output out(a.out);
    write_dataset(out.stream(), trial.data);
  }
  Output sidecar(a.out + ".json");
  sidecar.stream() << scenario_json(sc, trial.cutoff, trial.data.events());
  return 0;
}

struct PowerArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> replications;
  bool full = false;
  std::optional<double> sweep_switch_prob;
};

int run_power(const PowerArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw DataError("cannot open " + a.config);
  std::stringstream text;
  text << in.rdbuf();
  bool has_seed = false;
  {
    std::istringstream probe(text.str());
    has_seed = parse_key_values(probe).count("seed") > 0;
  }
  if (!has_seed && !a.seed)
    throw UsageError("a seed is required (config key 'seed' or --seed)");
  std::istringstream cfg_in(text.str());
  PowerStudyConfig cfg = parse_power_config(cfg_in);
  if (a.seed) cfg.seed = *a.seed;
  if (a.full) cfg.replications = 10000;
  if (a.replications) cfg.replications = *a.replications;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::filesystem::create_directories(a.out_dir);
  const auto dir = std::filesystem::path(a.out_dir);
  const PowerStudyResult res = run_power_study(cfg);
  {
    Output csv((dir / "results.csv").string());
    write_results_csv(csv.stream(), res);
  }
  {
    Output manifest((dir / "manifest.json").string());
    manifest.stream() << manifest_json(res);
  }
  if (a.sweep_switch_prob) {
    const auto rows = events_sweep(cfg, *a.sweep_switch_prob);
    Output sweep((dir / "events_sweep.csv").string());
    sweep.stream() << "switch_prob,target_deaths,power,se\n";
    for (const auto& r : rows)
      sweep.stream() << fmt(r.switch_prob) << "," << r.target_deaths << ","
                     << fmt(r.power) << "," << fmt(r.se) << "\n";
  }
  return res.any_all_degenerate() ? kExitDegenerate : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Log-rank testing under treatment switching (times in months)"};
  app.require_subcommand(1);

  WeightsArgs wa;
  auto* weights = app.add_subcommand(
      "weights", "Emit eta(t) and mWLR weights w(t) = -log eta(t) as CSV");
  weights->add_option("--pfs0", wa.pfs0, "Assumed control median PFS (months)");
  weights->add_option("--os0", wa.os0, "Assumed control median OS (months)");
  weights->add_option("--os1", wa.os1,
                      "Assumed experimental median OS (months)");
  weights->add_option("--p-prime", wa.p_prime, "Assumed switch probabilities")
      ->delimiter(',');
  weights->add_option("--t-max", wa.t_max, "Last time point (months)");
  weights->add_option("--step", wa.step, "Grid step (months)");
  weights->add_option("--out", wa.out, "Output CSV ('-' for stdout)");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand(
      "analyze", "Run tests on a dataset CSV (time,event,arm[,switch_time])");
  analyze->add_option("--data", aa.data, "Dataset CSV")->required();
  analyze->add_option("--tests", aa.tests, "lr,mwlr,fh,maxcombo,rmst")
      ->delimiter(',');
  analyze->add_option("--p-prime", aa.p_prime,
                      "Design switch probability (required for mwlr)");
  analyze->add_option("--pfs0", aa.pfs0, "Design control median PFS (months)");
  analyze->add_option("--os0", aa.os0, "Design control median OS (months)");
  analyze->add_option("--os1", aa.os1,
                      "Design experimental median OS (months)");
  analyze->add_option("--fh", aa.fh, "FH rho,gamma for the fh test")
      ->delimiter(',');
  analyze->add_option("--out", aa.out, "Output JSON lines ('-' for stdout)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand(
      "simulate", "Simulate one trial; writes CSV plus <out>.json sidecar");
  simulate->add_option("--scenario", sa.scenario,
                       "Scenario file (defaults to 139/277 patients, 12 "
                       "months accrual, 221 deaths, medians 2/10/15, p=1)");
  simulate->add_option("--seed", sa.seed, "Random seed (required)");
  simulate->add_option("--out", sa.out, "Output dataset CSV")->required();

  PowerArgs pa;
  auto* power = app.add_subcommand(
      "power", "Monte Carlo power study; writes results.csv + manifest.json");
  power->add_option("--config", pa.config, "Study config file")->required();
  power->add_option("--out", pa.out_dir, "Output directory")->required();
  power->add_option("--seed", pa.seed, "Seed (overrides config)");
  power->add_option("--replications", pa.replications,
                    "Replications per scenario (overrides config)");
  power->add_flag("--full", pa.full, "Use 10000 replications");
  power->add_option("--events-sweep", pa.sweep_switch_prob,
                    "Also write LR power vs target deaths for p=0 and this p");
  app.footer("Worker threads: TSLR_WORKERS (default: all cores).");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*weights) return run_weights(wa);
    if (*analyze) return run_analyze(aa);
    if (*simulate) return run_simulate(sa);
    if (*power) return run_power(pa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateError& e) {
    std::cerr << "numerical degeneracy: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

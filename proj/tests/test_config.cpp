#include <doctest.h>

#include <sstream>

#include "tslr/config.hpp"

using namespace tslr;

namespace {

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_power_config(in);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("scenario file") {
  std::istringstream in(
      "# trial\n"
      "n_control = 100\n"
      "n_experimental = 200\n"
      "target_deaths = 150   # cutoff\n"
      "switch_prob = 0.5\n"
      "seed = 12\n");
  const TrialScenario s = parse_scenario(in);
  CHECK(s.n_control == 100);
  CHECK(s.n_experimental == 200);
  CHECK(s.target_deaths == 150);
  CHECK(s.true_params.switch_prob == 0.5);
  CHECK(s.true_params.median_os_control == 10.0);
  CHECK(s.seed == 12);
}

TEST_CASE("power config lists") {
  std::istringstream in(
      "median_os_control = 5, 7.5, 10\n"
      "switch_prob = 0, 1\n"
      "p_prime = 0.7\n"
      "tests = lr, mwlr, maxcombo\n"
      "fh = 1, 1\n"
      "design_median_os_control = 10\n"
      "replications = 50\n");
  const PowerStudyConfig c = parse_power_config(in);
  CHECK(c.median_os_control.size() == 3);
  CHECK(c.scenarios().size() == 6);
  CHECK(c.tests.size() == 3);
  CHECK(c.fh.rho == 1.0);
  CHECK(c.design_median_os_control == 10.0);
  CHECK_FALSE(c.design_median_pfs_control.has_value());
  CHECK(c.replications == 50);
}

TEST_CASE("config errors name the line") {
  CHECK(error_line("replications = 10\nbogus = 1\n") == 2);
  CHECK(error_line("seed = 1\nseed = 2\n") == 2);
  CHECK(error_line("\n\nreplications = many\n") == 3);
  CHECK(error_line("switch_prob = 0,,1\n") == 1);
  CHECK(error_line("tests = lr, nope\n") == 1);
  CHECK(error_line("fh = 1\n") == 1);
  CHECK(error_line("just words\n") == 1);
  CHECK(error_line("replications = 5, 6\n") == 1);
}

TEST_CASE("sidecar JSON") {
  TrialScenario s;
  s.seed = 3;
  const std::string j = scenario_json(s, 31.5, 221);
  CHECK(j.find("\"events\": 221") != std::string::npos);
  CHECK(j.find("\"cutoff_months\": 31.5") != std::string::npos);
}

#include "tslr/config.hpp"

#include <charconv>
#include <istream>
#include <set>
#include <string_view>

#include <json.hpp>

#include "tslr/version.hpp"

namespace tslr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Values keep the line they came from for error messages.
struct Entry {
  std::vector<std::string> values;
  std::size_t line = 0;
};

std::map<std::string, Entry> parse_entries(std::istream& in) {
  std::map<std::string, Entry> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw DataError("line " + std::to_string(line_no) +
                          ": expected key = value",
                      line_no);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty key",
                      line_no);
    if (out.count(key))
      throw DataError("line " + std::to_string(line_no) + ": duplicate key '" +
                          key + "'",
                      line_no);
    Entry e;
    e.line = line_no;
    std::string_view rest = line.substr(eq + 1);
    while (true) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (item.empty())
        throw DataError("line " + std::to_string(line_no) +
                            ": empty value for '" + key + "'",
                        line_no);
      e.values.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    out.emplace(key, std::move(e));
  }
  return out;
}

template <typename T>
T parse_value(const std::string& s, const std::string& key, std::size_t line) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError("line " + std::to_string(line) + ": invalid value '" + s +
                        "' for '" + key + "'",
                    line);
  return v;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries)
      : entries_(std::move(entries)) {}

  template <typename T>
  void scalar(const std::string& key, T& out) {
    const Entry* e = find(key);
    if (!e) return;
    if (e->values.size() != 1)
      throw DataError("line " + std::to_string(e->line) + ": '" + key +
                          "' takes a single value",
                      e->line);
    out = parse_value<T>(e->values[0], key, e->line);
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) {
    const Entry* e = find(key);
    if (!e) return;
    out.clear();
    for (const auto& v : e->values) out.push_back(parse_value<T>(v, key, e->line));
  }

  void optional(const std::string& key, std::optional<double>& out) {
    if (!find(key)) return;
    double v = 0.0;
    scalar(key, v);
    out = v;
  }

  const Entry* find(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void reject_unknown() const {
    for (const auto& [key, e] : entries_)
      if (!used_.count(key))
        throw DataError("line " + std::to_string(e.line) + ": unknown key '" +
                            key + "'",
                        e.line);
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  for (auto& [k, e] : parse_entries(in)) out.emplace(k, std::move(e.values));
  return out;
}

TrialScenario parse_scenario(std::istream& in) {
  Reader r(parse_entries(in));
  TrialScenario s;
  r.scalar("n_control", s.n_control);
  r.scalar("n_experimental", s.n_experimental);
  r.scalar("accrual_months", s.accrual_months);
  r.scalar("target_deaths", s.target_deaths);
  r.scalar("median_pfs_control", s.true_params.median_pfs_control);
  r.scalar("median_os_control", s.true_params.median_os_control);
  r.scalar("median_os_experimental", s.true_params.median_os_experimental);
  r.scalar("switch_prob", s.true_params.switch_prob);
  r.scalar("seed", s.seed);
  r.reject_unknown();
  return s;
}

PowerStudyConfig parse_power_config(std::istream& in) {
  Reader r(parse_entries(in));
  PowerStudyConfig c;
  r.list("median_os_control", c.median_os_control);
  r.list("switch_prob", c.switch_prob);
  r.list("median_pfs_control", c.median_pfs_control);
  r.list("target_deaths", c.target_deaths);
  r.scalar("median_os_experimental", c.median_os_experimental);
  r.list("p_prime", c.p_prime);
  r.optional("design_median_pfs_control", c.design_median_pfs_control);
  r.optional("design_median_os_control", c.design_median_os_control);
  r.optional("design_median_os_experimental", c.design_median_os_experimental);
  r.scalar("n_control", c.n_control);
  r.scalar("n_experimental", c.n_experimental);
  r.scalar("accrual_months", c.accrual_months);
  r.scalar("replications", c.replications);
  r.scalar("alpha", c.alpha);
  r.scalar("seed", c.seed);
  r.scalar("workers", c.workers);
  if (const Entry* e = r.find("tests")) {
    c.tests.clear();
    for (const auto& v : e->values) {
      try {
        c.tests.push_back(parse_test_kind(v));
      } catch (const std::invalid_argument& ex) {
        throw DataError("line " + std::to_string(e->line) + ": " + ex.what(),
                        e->line);
      }
    }
  }
  if (const Entry* e = r.find("fh")) {
    if (e->values.size() != 2)
      throw DataError("line " + std::to_string(e->line) +
                          ": fh takes two values (rho, gamma)",
                      e->line);
    c.fh.rho = parse_value<double>(e->values[0], "fh", e->line);
    c.fh.gamma = parse_value<double>(e->values[1], "fh", e->line);
  }
  r.reject_unknown();
  return c;
}

std::string scenario_json(const TrialScenario& s, double cutoff,
                          std::size_t events) {
  nlohmann::ordered_json j;
  j["software"] = "tslr";
  j["version"] = kVersion;
  j["seed"] = s.seed;
  j["n_control"] = s.n_control;
  j["n_experimental"] = s.n_experimental;
  j["accrual_months"] = s.accrual_months;
  j["target_deaths"] = s.target_deaths;
  j["median_pfs_control"] = s.true_params.median_pfs_control;
  j["median_os_control"] = s.true_params.median_os_control;
  j["median_os_experimental"] = s.true_params.median_os_experimental;
  j["switch_prob"] = s.true_params.switch_prob;
  j["cutoff_months"] = cutoff;
  j["events"] = events;
  return j.dump(2) + "\n";
}

}  // namespace tslr

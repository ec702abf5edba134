#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslr {

// Malformed or unusable input data. Carries the 1-based line when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Arm { control = 0, experimental = 1 };

inline Arm other(Arm a) {
  return a == Arm::control ? Arm::experimental : Arm::control;
}

struct SubjectRecord {
  double time = 0.0;  // months from randomization
  bool event = false;
  Arm arm = Arm::control;
  std::optional<double> switch_time;  // diagnostic only

  bool operator==(const SubjectRecord&) const = default;
};

class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  // Validates every record; throws DataError.
  explicit SurvivalDataset(std::vector<SubjectRecord> records);

  std::span<const SubjectRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t count(Arm arm) const;
  std::size_t events() const;
  std::size_t events(Arm arm) const;

  // Copy restricted to one arm.
  SurvivalDataset subset(Arm arm) const;
  // Copy with arm labels exchanged.
  SurvivalDataset swapped_arms() const;

 private:
  std::vector<SubjectRecord> records_;
};

SurvivalDataset read_dataset(std::istream& in);
SurvivalDataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const SurvivalDataset& data);

// One row per distinct death time, ascending.
struct RiskRow {
  double time;
  double n0, n1;  // at risk
  double d0, d1;  // deaths
  double n() const { return n0 + n1; }
  double d() const { return d0 + d1; }
};

struct RiskTable {
  std::vector<RiskRow> rows;
};

// Censorings tied with a death are counted at risk at that death time.
// Throws DataError if the pooled data contains no events.
RiskTable build_risk_table(const SurvivalDataset& data);

// Product-limit estimate stored as jumps at distinct death times.
class KMCurve {
 public:
  KMCurve() = default;
  KMCurve(std::vector<double> times, std::vector<double> survival,
          double max_time);

  // Right-continuous S(t).
  double at(double t) const;
  // Left limit S(t-).
  double before(double t) const;

  std::span<const double> jump_times() const { return times_; }
  std::span<const double> values() const { return survival_; }
  // Largest observed (event or censored) time in the source data.
  double max_time() const { return max_time_; }

 private:
  std::vector<double> times_;
  std::vector<double> survival_;
  double max_time_ = 0.0;
};

KMCurve kaplan_meier(const SurvivalDataset& data);

// Exact integral of the KM step function over [0, tau].
double rmst(const KMCurve& curve, double tau);

// Smallest per-arm maximum follow-up time.
double minimax_time(const SurvivalDataset& data);

}  // namespace tslr

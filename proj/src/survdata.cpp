#include "tslr/survdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

namespace tslr {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line,
                    const char* name) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw DataError("line " + std::to_string(line) + ": invalid " + name +
                        " '" + std::string(field) + "'",
                    line);
  return v;
}

Arm parse_arm(std::string_view field, std::size_t line) {
  if (field == "0" || field == "control") return Arm::control;
  if (field == "1" || field == "experimental") return Arm::experimental;
  throw DataError("line " + std::to_string(line) + ": unknown arm label '" +
                      std::string(field) + "'",
                  line);
}

void validate_record(const SubjectRecord& r, std::size_t line) {
  const std::string where =
      line ? "line " + std::to_string(line) + ": " : std::string("record: ");
  if (!std::isfinite(r.time) || r.time < 0.0)
    throw DataError(where + "time must be finite and >= 0", line);
  if (r.switch_time) {
    if (!std::isfinite(*r.switch_time) || *r.switch_time < 0.0 ||
        *r.switch_time > r.time)
      throw DataError(where + "switch_time must lie in [0, time]", line);
  }
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<SubjectRecord> records)
    : records_(std::move(records)) {
  for (const auto& r : records_) validate_record(r, 0);
}

std::size_t SurvivalDataset::count(Arm arm) const {
  return std::count_if(records_.begin(), records_.end(),
                       [arm](const SubjectRecord& r) { return r.arm == arm; });
}

std::size_t SurvivalDataset::events() const {
  return std::count_if(records_.begin(), records_.end(),
                       [](const SubjectRecord& r) { return r.event; });
}

std::size_t SurvivalDataset::events(Arm arm) const {
  return std::count_if(records_.begin(), records_.end(),
                       [arm](const SubjectRecord& r) {
                         return r.event && r.arm == arm;
                       });
}

SurvivalDataset SurvivalDataset::subset(Arm arm) const {
  SurvivalDataset out;
  std::copy_if(records_.begin(), records_.end(),
               std::back_inserter(out.records_),
               [arm](const SubjectRecord& r) { return r.arm == arm; });
  return out;
}

SurvivalDataset SurvivalDataset::swapped_arms() const {
  SurvivalDataset out = *this;
  for (auto& r : out.records_) r.arm = other(r.arm);
  return out;
}

SurvivalDataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("empty file", 0);
  ++line_no;

  const auto header = split_commas(trim(line));
  std::vector<std::string_view> cols;
  for (auto h : header) cols.push_back(trim(h));
  const bool has_switch = cols.size() == 4 && cols[3] == "switch_time";
  if (cols.size() < 3 || cols[0] != "time" || cols[1] != "event" ||
      cols[2] != "arm" || (cols.size() == 4 && !has_switch) ||
      cols.size() > 4)
    throw DataError("line 1: header must be time,event,arm[,switch_time]", 1);

  std::vector<SubjectRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_commas(body);
    if (fields.size() != cols.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(cols.size()) + " fields, got " +
                          std::to_string(fields.size()),
                      line_no);

    SubjectRecord r;
    r.time = parse_number(trim(fields[0]), line_no, "time");
    const auto ev = trim(fields[1]);
    if (ev == "1") {
      r.event = true;
    } else if (ev == "0") {
      r.event = false;
    } else {
      throw DataError("line " + std::to_string(line_no) +
                          ": event must be 0 or 1",
                      line_no);
    }
    r.arm = parse_arm(trim(fields[2]), line_no);
    if (has_switch) {
      const auto st = trim(fields[3]);
      if (!st.empty()) r.switch_time = parse_number(st, line_no, "switch_time");
    }
    validate_record(r, line_no);
    records.push_back(r);
  }
  if (records.empty()) throw DataError("dataset has no records", line_no);
  return SurvivalDataset(std::move(records));
}

SurvivalDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const SurvivalDataset& data) {
  const auto recs = data.records();
  const bool has_switch = std::any_of(
      recs.begin(), recs.end(),
      [](const SubjectRecord& r) { return r.switch_time.has_value(); });

  std::string buf = has_switch ? "time,event,arm,switch_time\n"
                               : "time,event,arm\n";
  for (const auto& r : recs) {
    append_double(buf, r.time);
    buf += r.event ? ",1," : ",0,";
    buf += r.arm == Arm::control ? '0' : '1';
    if (has_switch) {
      buf += ',';
      if (r.switch_time) append_double(buf, *r.switch_time);
    }
    buf += '\n';
  }
  out << buf;
}

RiskTable build_risk_table(const SurvivalDataset& data) {
  const auto recs = data.records();
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return recs[a].time < recs[b].time;
  });

  double at_risk[2] = {static_cast<double>(data.count(Arm::control)),
                       static_cast<double>(data.count(Arm::experimental))};
  RiskTable table;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = recs[order[i]].time;
    double deaths[2] = {0.0, 0.0};
    double leaving[2] = {0.0, 0.0};
    for (; i < order.size() && recs[order[i]].time == t; ++i) {
      const auto& r = recs[order[i]];
      const int a = static_cast<int>(r.arm);
      leaving[a] += 1.0;
      if (r.event) deaths[a] += 1.0;
    }
    if (deaths[0] + deaths[1] > 0.0)
      table.rows.push_back({t, at_risk[0], at_risk[1], deaths[0], deaths[1]});
    at_risk[0] -= leaving[0];
    at_risk[1] -= leaving[1];
  }
  if (table.rows.empty()) throw DataError("no events in pooled data");
  return table;
}

KMCurve::KMCurve(std::vector<double> times, std::vector<double> survival,
                 double max_time)
    : times_(std::move(times)),
      survival_(std::move(survival)),
      max_time_(max_time) {}

double KMCurve::at(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return survival_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double KMCurve::before(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return survival_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

KMCurve kaplan_meier(const SurvivalDataset& data) {
  if (data.empty()) throw DataError("Kaplan-Meier of an empty dataset");
  const auto recs = data.records();
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return recs[a].time < recs[b].time;
  });

  std::vector<double> times, surv;
  double s = 1.0;
  double at_risk = static_cast<double>(recs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    const double tj = recs[order[i]].time;
    double d = 0.0, leaving = 0.0;
    for (; i < order.size() && recs[order[i]].time == tj; ++i) {
      leaving += 1.0;
      if (recs[order[i]].event) d += 1.0;
    }
    if (d > 0.0) {
      s *= 1.0 - d / at_risk;
      times.push_back(tj);
      surv.push_back(s);
    }
    at_risk -= leaving;
  }
  return KMCurve(std::move(times), std::move(surv), recs[order.back()].time);
}

double rmst(const KMCurve& curve, double tau) {
  if (!(tau > 0.0)) throw DataError("rmst: tau must be > 0");
  if (tau > curve.max_time())
    throw DataError("rmst: tau beyond the last observed time");
  double area = 0.0;
  double prev_t = 0.0;
  double prev_s = 1.0;
  const auto times = curve.jump_times();
  const auto vals = curve.values();
  for (std::size_t j = 0; j < times.size() && times[j] < tau; ++j) {
    area += prev_s * (times[j] - prev_t);
    prev_t = times[j];
    prev_s = vals[j];
  }
  return area + prev_s * (tau - prev_t);
}

double minimax_time(const SurvivalDataset& data) {
  double max_time[2] = {-1.0, -1.0};
  for (const auto& r : data.records()) {
    double& m = max_time[static_cast<int>(r.arm)];
    m = std::max(m, r.time);
  }
  if (max_time[0] < 0.0 || max_time[1] < 0.0)
    throw DataError("minimax time needs both arms non-empty");
  return std::min(max_time[0], max_time[1]);
}

}  // namespace tslr

#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hqsim/scheduler.hpp"

namespace hqsim {

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricsReport {
  SimTime makespan{0};
  SimTime quantum_busy{0};
  SimTime quantum_allocated_idle{0};    // held by a unit, no quantum block running
  SimTime quantum_unallocated_idle{0};  // held by nobody within [0, makespan)
  std::map<std::string, SimTime> turnaround;  // job_id -> last Complete - submit

  SimTime quantum_total_idle() const { return quantum_allocated_idle + quantum_unallocated_idle; }
  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport compute_metrics(const ScheduleTrace& trace) {
  MetricsReport r;
  std::map<std::string, SimTime> completed;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::Complete) continue;
    r.makespan = std::max(r.makespan, e.time);
    completed[e.unit_id] = e.time;
  }

  std::vector<const AllocationInterval*> quantum;
  for (const auto& a : trace.allocations) {
    if (a.start > a.end) throw IntegrityError("allocation of '" + a.unit_id + "' ends before it starts");
    SimTime prev = a.start;
    for (const auto& b : a.busy) {
      if (b.start < prev || b.end > a.end || b.start > b.end)
        throw IntegrityError("busy interval of '" + a.unit_id + "' outside its allocation");
      prev = b.end;
    }
    if (a.end > r.makespan) throw IntegrityError("allocation of '" + a.unit_id + "' exceeds makespan");
    if (a.resource == ResourceKind::QuantumDevice) quantum.push_back(&a);
  }
  std::sort(quantum.begin(), quantum.end(),
            [](const auto* x, const auto* y) { return x->start < y->start; });

  SimTime allocated = 0;
  for (std::size_t i = 0; i < quantum.size(); ++i) {
    if (i > 0 && quantum[i]->start < quantum[i - 1]->end)
      throw IntegrityError("overlapping quantum allocations: '" + quantum[i - 1]->unit_id +
                           "' and '" + quantum[i]->unit_id + "'");
    const SimTime len = quantum[i]->end - quantum[i]->start;
    const SimTime busy = quantum[i]->busy_time();
    allocated += len;
    r.quantum_busy += busy;
    r.quantum_allocated_idle += len - busy;
  }
  r.quantum_unallocated_idle = r.makespan - allocated;

  for (const auto& u : trace.units) {
    auto it = completed.find(u.unit_id);
    if (it == completed.end()) throw IntegrityError("unit '" + u.unit_id + "' never completes");
    SimTime& t = r.turnaround[u.job_id];
    t = std::max(t, it->second - u.submit_time);
  }
  return r;
}

// ---------------------------------------------------------------------------

enum class Verdict { Improved, Unchanged, Regressed };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Improved: return "improved";
    case Verdict::Unchanged: return "unchanged";
    case Verdict::Regressed: return "regressed";
  }
  return "?";
}

struct MetricDelta {
  std::string name;
  SimTime monolithic{0};
  SimTime split{0};
  SimTime delta{0};   // split - monolithic
  double ratio{0.0};  // delta / monolithic, 0 when monolithic is 0
  Verdict verdict{Verdict::Unchanged};
};

struct ComparisonReport {
  MetricsReport monolithic;
  MetricsReport split;
  std::vector<MetricDelta> deltas;  // makespan, allocated_idle, total_idle

  const MetricDelta& at(std::string_view name) const {
    for (const auto& d : deltas)
      if (d.name == name) return d;
    throw std::out_of_range("no metric named " + std::string(name));
  }
};

/// Lower is better for every compared metric.
inline ComparisonReport compare(const MetricsReport& mono, const MetricsReport& split) {
  ComparisonReport c{mono, split, {}};
  auto add = [&](std::string name, SimTime m, SimTime s) {
    MetricDelta d{std::move(name), m, s, s - m, 0.0, Verdict::Unchanged};
    if (m != 0) d.ratio = static_cast<double>(d.delta) / static_cast<double>(m);
    d.verdict = d.delta < 0 ? Verdict::Improved : d.delta > 0 ? Verdict::Regressed : Verdict::Unchanged;
    c.deltas.push_back(std::move(d));
  };
  add("makespan", mono.makespan, split.makespan);
  add("allocated_idle", mono.quantum_allocated_idle, split.quantum_allocated_idle);
  add("total_idle", mono.quantum_total_idle(), split.quantum_total_idle());
  return c;
}

// ---------------------------------------------------------------------------
// Output formats

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["makespan"] = r.makespan;
  j["quantum_busy"] = r.quantum_busy;
  j["quantum_allocated_idle"] = r.quantum_allocated_idle;
  j["quantum_unallocated_idle"] = r.quantum_unallocated_idle;
  j["turnaround"] = nlohmann::ordered_json::object();
  for (const auto& [job, t] : r.turnaround) j["turnaround"][job] = t;
  return j;
}

inline std::string comparison_to_json(const ComparisonReport& c) {
  nlohmann::ordered_json j;
  j["monolithic"] = metrics_to_json(c.monolithic);
  j["split"] = metrics_to_json(c.split);
  j["comparison"] = nlohmann::ordered_json::array();
  for (const auto& d : c.deltas) {
    nlohmann::ordered_json o;
    o["metric"] = d.name;
    o["monolithic"] = d.monolithic;
    o["split"] = d.split;
    o["delta"] = d.delta;
    o["ratio"] = d.ratio;
    o["verdict"] = to_string(d.verdict);
    j["comparison"].push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

/// Human-readable one line per metric, e.g. "makespan: 18 -> 12 (-6, -33.3%) improved".
inline std::string comparison_summary(const ComparisonReport& c) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  for (const auto& d : c.deltas) {
    out << d.name << ": " << d.monolithic << " -> " << d.split << " (" << (d.delta > 0 ? "+" : "")
        << d.delta << ", " << (d.ratio > 0 ? "+" : "") << d.ratio * 100.0 << "%) "
        << to_string(d.verdict) << '\n';
  }
  return out.str();
}

/// Rows `unit,resource,start,end,busy_start,busy_end`; one row per busy
/// sub-interval, or one row with empty busy columns for a fully idle allocation.
inline std::string gantt_csv(const ScheduleTrace& trace) {
  std::ostringstream out;
  out << "unit,resource,start,end,busy_start,busy_end\n";
  for (const auto& a : trace.allocations) {
    const std::string prefix = a.unit_id + "," + std::string(to_string(a.resource)) + "," +
                               std::to_string(a.start) + "," + std::to_string(a.end) + ",";
    if (a.busy.empty()) out << prefix << ",\n";
    for (const auto& b : a.busy) out << prefix << b.start << ',' << b.end << '\n';
  }
  return out.str();
}

}  // namespace hqsim

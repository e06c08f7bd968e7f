#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "hqsim/model.hpp"
#include "hqsim/splitter.hpp"

namespace hqsim {

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quantum device held from Start until Complete (monolithic het-job).
struct FullDuration {
  bool operator==(const FullDuration&) const = default;
};
/// Quantum device held from Start until Start + offset (client cancelled).
struct UntilRelease {
  SimTime offset{0};
  bool operator==(const UntilRelease&) const = default;
};
using QuantumHold = std::variant<FullDuration, UntilRelease>;

struct SchedulableUnit {
  std::string unit_id;
  std::string job_id;  // parent job, used for turnaround
  int classical_nodes{1};
  SimTime total_duration{0};
  bool needs_quantum{false};
  QuantumHold quantum_hold{FullDuration{}};
  SimTime submit_time{0};
  std::optional<std::string> depends_on;
  std::vector<Phase> phases;

  /// Length of the quantum allocation relative to Start.
  SimTime quantum_hold_length() const {
    if (!needs_quantum) return 0;
    if (auto* r = std::get_if<UntilRelease>(&quantum_hold)) return r->offset;
    return total_duration;
  }
};

enum class EventKind { QuantumRelease, Complete, Submit, Start, QuantumAcquire };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Submit: return "Submit";
    case EventKind::Start: return "Start";
    case EventKind::QuantumAcquire: return "QuantumAcquire";
    case EventKind::QuantumRelease: return "QuantumRelease";
    case EventKind::Complete: return "Complete";
  }
  return "?";
}

struct TraceEvent {
  SimTime time{0};
  EventKind kind{EventKind::Submit};
  std::string unit_id;

  bool operator==(const TraceEvent&) const = default;
};

enum class ResourceKind { ClassicalNodes, QuantumDevice };

struct Interval {
  SimTime start{0};
  SimTime end{0};
  SimTime length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct AllocationInterval {
  std::string unit_id;
  ResourceKind resource{ResourceKind::ClassicalNodes};
  int nodes{0};  // classical node count; 0 for the quantum device
  SimTime start{0};
  SimTime end{0};
  std::vector<Interval> busy;

  SimTime busy_time() const {
    SimTime t = 0;
    for (const auto& b : busy) t += b.length();
    return t;
  }
  bool operator==(const AllocationInterval&) const = default;
};

struct UnitInfo {
  std::string unit_id;
  std::string job_id;
  SimTime submit_time{0};
  bool operator==(const UnitInfo&) const = default;
};

struct ScheduleTrace {
  std::vector<TraceEvent> events;
  std::vector<AllocationInterval> allocations;
  std::vector<UnitInfo> units;

  bool operator==(const ScheduleTrace&) const = default;
};

enum class QueuePolicy {
  FcfsAggressiveBackfill,  // any ready unit whose resources are free may start
  StrictFcfs,              // the queue head blocks everything behind it
};

struct PolicyConfig {
  QueuePolicy queue{QueuePolicy::FcfsAggressiveBackfill};
};

// ---------------------------------------------------------------------------
// Unit construction

inline std::vector<SchedulableUnit> units_from_monolithic(const WorkloadSpec& w) {
  std::vector<SchedulableUnit> units;
  for (const auto& job : w.jobs) {
    SchedulableUnit u;
    u.unit_id = job.job_id;
    u.job_id = job.job_id;
    u.classical_nodes = job.classical_nodes;
    u.total_duration = job_total_duration(job);
    u.needs_quantum = quantum_block_count(job.phases) > 0;
    u.quantum_hold = FullDuration{};
    u.submit_time = job.submit_time;
    u.phases = job.phases;
    units.push_back(std::move(u));
  }
  return units;
}

/// One unit per sub-job, gated on its predecessor. A plan that was not
/// actually split (a single sub-job) is submitted like the original het-job
/// and keeps the device for its full duration.
inline std::vector<SchedulableUnit> units_from_split(const std::vector<SplitPlan>& plans) {
  std::vector<SchedulableUnit> units;
  for (const auto& plan : plans) {
    const bool chained = plan.subjobs.size() > 1;
    for (const auto& sj : plan.subjobs) {
      SchedulableUnit u;
      u.unit_id = sj.subjob_id;
      u.job_id = sj.parent_job_id;
      u.classical_nodes = sj.classical_nodes;
      u.total_duration = total_duration(sj.phases);
      u.needs_quantum = sj.needs_quantum;
      if (chained && sj.needs_quantum)
        u.quantum_hold = UntilRelease{sj.quantum_release_offset};
      else
        u.quantum_hold = FullDuration{};
      u.submit_time = sj.submit_time;
      u.depends_on = sj.depends_on;
      u.phases = sj.phases;
      units.push_back(std::move(u));
    }
  }
  return units;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void check_units(const ResourcePool& pool, const std::vector<SchedulableUnit>& units,
                        std::map<std::string, std::size_t>& index) {
  validate_pool(pool);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    if (!index.emplace(u.unit_id, i).second)
      throw SchedulingError("duplicate unit id '" + u.unit_id + "'");
    if (u.classical_nodes < 1 || u.classical_nodes > pool.classical_nodes)
      throw SchedulingError("unit '" + u.unit_id + "' is unsatisfiable: requests " +
                            std::to_string(u.classical_nodes) + " classical nodes, pool has " +
                            std::to_string(pool.classical_nodes));
    if (u.total_duration < 1) throw SchedulingError("unit '" + u.unit_id + "': duration < 1");
    if (u.submit_time < 0) throw SchedulingError("unit '" + u.unit_id + "': negative submit");
    if (total_duration(u.phases) != u.total_duration)
      throw SchedulingError("unit '" + u.unit_id + "': phases do not sum to total_duration");
    if (auto* r = std::get_if<UntilRelease>(&u.quantum_hold)) {
      if (r->offset < 0 || r->offset > u.total_duration)
        throw SchedulingError("unit '" + u.unit_id + "': release offset outside [0, duration]");
    }
  }
  for (const auto& u : units) {
    if (u.depends_on && !index.count(*u.depends_on))
      throw SchedulingError("unit '" + u.unit_id + "' depends on unknown unit '" +
                            *u.depends_on + "'");
  }
  // Each unit has at most one predecessor, so a cycle is a walk that returns.
  for (const auto& u : units) {
    std::size_t steps = 0;
    for (const SchedulableUnit* cur = &u; cur->depends_on; cur = &units[index.at(*cur->depends_on)]) {
      if (++steps > units.size())
        throw SchedulingError("dependency cycle through unit '" + u.unit_id + "'");
    }
  }
}

inline std::vector<Interval> phase_intervals(const SchedulableUnit& u, SimTime start,
                                             PhaseKind kind, SimTime limit) {
  std::vector<Interval> out;
  SimTime t = start;
  for (const auto& p : u.phases) {
    const SimTime s = t, e = std::min(t + p.duration, limit);
    t += p.duration;
    if (p.kind != kind || s >= e) continue;
    if (!out.empty() && out.back().end == s)
      out.back().end = e;
    else
      out.push_back({s, e});
  }
  return out;
}

}  // namespace detail

/// Event-driven simulation of units on the pool. Units start when their
/// classical nodes and (if needed) the quantum device are free at the same
/// time; ties are broken by (ready_time, submit_time, unit_id).
inline ScheduleTrace simulate(const ResourcePool& pool, const std::vector<SchedulableUnit>& units,
                              const PolicyConfig& policy = {}) {
  std::map<std::string, std::size_t> index;
  detail::check_units(pool, units, index);

  const std::size_t n = units.size();
  std::vector<std::optional<SimTime>> start(n), complete(n);
  std::vector<bool> submitted(n, false);

  // (time, kind, unit_id) keeps same-time events in a fixed order:
  // releases before completions, both before any new starts.
  std::set<std::tuple<SimTime, EventKind, std::string>> pending;

  ScheduleTrace trace;
  for (const auto& u : units) trace.units.push_back({u.unit_id, u.job_id, u.submit_time});
  std::sort(trace.units.begin(), trace.units.end(),
            [](const UnitInfo& a, const UnitInfo& b) { return a.unit_id < b.unit_id; });

  std::vector<std::size_t> by_submit(n);
  for (std::size_t i = 0; i < n; ++i) by_submit[i] = i;
  std::sort(by_submit.begin(), by_submit.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(units[a].submit_time, units[a].unit_id) <
           std::tie(units[b].submit_time, units[b].unit_id);
  });
  std::size_t next_submit = 0;

  int free_nodes = pool.classical_nodes;
  bool quantum_free = true;
  std::size_t done = 0;
  SimTime now = n ? units[by_submit[0]].submit_time : 0;

  auto ready_time = [&](std::size_t i) -> std::optional<SimTime> {
    const auto& u = units[i];
    if (!submitted[i]) return std::nullopt;
    SimTime r = u.submit_time;
    if (u.depends_on) {
      const auto& pred = complete[index.at(*u.depends_on)];
      if (!pred) return std::nullopt;
      r = std::max(r, *pred);
    }
    return r;
  };

  while (done < n) {
    // Timed events due now.
    while (!pending.empty() && std::get<0>(*pending.begin()) == now) {
      auto [t, kind, id] = *pending.begin();
      pending.erase(pending.begin());
      const std::size_t i = index.at(id);
      if (kind == EventKind::QuantumRelease) {
        quantum_free = true;
      } else {
        free_nodes += units[i].classical_nodes;
        complete[i] = t;
        ++done;
      }
      trace.events.push_back({t, kind, id});
    }
    while (next_submit < n && units[by_submit[next_submit]].submit_time == now) {
      const std::size_t i = by_submit[next_submit++];
      submitted[i] = true;
      trace.events.push_back({now, EventKind::Submit, units[i].unit_id});
    }

    // Scheduling pass over the ready queue.
    std::vector<std::tuple<SimTime, SimTime, std::string, std::size_t>> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (start[i]) continue;
      if (auto r = ready_time(i)) queue.emplace_back(*r, units[i].submit_time, units[i].unit_id, i);
    }
    std::sort(queue.begin(), queue.end());
    for (const auto& [r, s, id, i] : queue) {
      const auto& u = units[i];
      const bool fits = u.classical_nodes <= free_nodes && (!u.needs_quantum || quantum_free);
      if (!fits) {
        if (policy.queue == QueuePolicy::StrictFcfs) break;
        continue;
      }
      start[i] = now;
      free_nodes -= u.classical_nodes;
      trace.events.push_back({now, EventKind::Start, id});
      const SimTime end = now + u.total_duration;
      trace.allocations.push_back({id, ResourceKind::ClassicalNodes, u.classical_nodes, now, end,
                                   detail::phase_intervals(u, now, PhaseKind::Classical, end)});
      if (u.needs_quantum) {
        quantum_free = false;
        trace.events.push_back({now, EventKind::QuantumAcquire, id});
        const SimTime release = now + u.quantum_hold_length();
        trace.allocations.push_back({id, ResourceKind::QuantumDevice, 0, now, release,
                                     detail::phase_intervals(u, now, PhaseKind::Quantum, release)});
        pending.emplace(release, EventKind::QuantumRelease, id);
      }
      pending.emplace(end, EventKind::Complete, id);
    }

    if (done == n) break;
    std::optional<SimTime> next;
    if (!pending.empty()) next = std::get<0>(*pending.begin());
    if (next_submit < n) {
      const SimTime s = units[by_submit[next_submit]].submit_time;
      next = next ? std::min(*next, s) : s;
    }
    if (!next) throw SchedulingError("simulation stalled with unfinished units");
    now = *next;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// JSON Lines trace

inline std::string_view to_string(ResourceKind r) {
  return r == ResourceKind::ClassicalNodes ? "classical" : "quantum";
}

/// One event per line, then one allocation record per line.
inline std::string trace_to_jsonl(const ScheduleTrace& trace) {
  std::ostringstream out;
  for (const auto& e : trace.events) {
    nlohmann::ordered_json j;
    j["t"] = e.time;
    j["kind"] = to_string(e.kind);
    j["unit"] = e.unit_id;
    out << j.dump() << '\n';
  }
  for (const auto& a : trace.allocations) {
    nlohmann::ordered_json j;
    j["unit"] = a.unit_id;
    j["resource"] = to_string(a.resource);
    j["start"] = a.start;
    j["end"] = a.end;
    j["busy"] = nlohmann::ordered_json::array();
    for (const auto& b : a.busy) j["busy"].push_back({b.start, b.end});
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace hqsim

#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "hqsim/scheduler.hpp"

namespace hqsim {

class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kOracleMaxUnits = 6;
inline constexpr SimTime kOracleMaxDuration = 16;

namespace detail {

// Exhaustive search over integer start ticks. Shares no code with simulate():
// resource usage is kept as explicit per-tick occupancy arrays.
class MakespanSearch {
 public:
  MakespanSearch(const ResourcePool& pool, const std::vector<SchedulableUnit>& units)
      : pool_(pool), units_(units) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < units.size(); ++i) idx[units[i].unit_id] = i;
    pred_.assign(units.size(), -1);
    for (std::size_t i = 0; i < units.size(); ++i)
      if (units[i].depends_on) pred_[i] = static_cast<int>(idx.at(*units[i].depends_on));

    // Kahn order so predecessors are placed first.
    std::vector<bool> placed(units.size(), false);
    while (order_.size() < units.size()) {
      bool progressed = false;
      for (std::size_t i = 0; i < units.size(); ++i) {
        if (placed[i] || (pred_[i] >= 0 && !placed[pred_[i]])) continue;
        placed[i] = true;
        order_.push_back(i);
        progressed = true;
      }
      if (!progressed) throw SchedulingError("dependency cycle");
    }
  }

  SimTime lower_bound() const {
    SimTime lb = 0, quantum_load = 0, min_submit_q = -1;
    std::vector<SimTime> chain(units_.size(), 0);
    for (std::size_t i : order_) {
      const auto& u = units_[i];
      SimTime ready = u.submit_time;
      if (pred_[i] >= 0) ready = std::max(ready, chain[pred_[i]]);
      chain[i] = ready + u.total_duration;
      lb = std::max(lb, chain[i]);
      if (u.needs_quantum) {
        quantum_load += hold(u);
        min_submit_q = min_submit_q < 0 ? u.submit_time : std::min(min_submit_q, u.submit_time);
      }
    }
    if (min_submit_q >= 0) lb = std::max(lb, min_submit_q + quantum_load);
    return lb;
  }

  SimTime upper_bound() const {
    SimTime t = 0;
    for (const auto& u : units_) t = std::max(t, u.submit_time);
    for (const auto& u : units_) t += u.total_duration;
    return t;
  }

  bool feasible(SimTime makespan) {
    classical_.assign(static_cast<std::size_t>(makespan), 0);
    quantum_.assign(static_cast<std::size_t>(makespan), 0);
    finish_.assign(units_.size(), 0);
    return place(0, makespan);
  }

 private:
  static SimTime hold(const SchedulableUnit& u) {
    if (!u.needs_quantum) return 0;
    if (auto* r = std::get_if<UntilRelease>(&u.quantum_hold)) return r->offset;
    return u.total_duration;
  }

  bool place(std::size_t k, SimTime makespan) {
    if (k == order_.size()) return true;
    const std::size_t i = order_[k];
    const auto& u = units_[i];
    SimTime earliest = u.submit_time;
    if (pred_[i] >= 0) earliest = std::max(earliest, finish_[pred_[i]]);
    const SimTime q = hold(u);
    for (SimTime s = earliest; s + u.total_duration <= makespan; ++s) {
      bool ok = true;
      for (SimTime t = s; ok && t < s + u.total_duration; ++t)
        ok = classical_[t] + u.classical_nodes <= pool_.classical_nodes;
      for (SimTime t = s; ok && t < s + q; ++t) ok = quantum_[t] == 0;
      if (!ok) continue;
      for (SimTime t = s; t < s + u.total_duration; ++t) classical_[t] += u.classical_nodes;
      for (SimTime t = s; t < s + q; ++t) quantum_[t] = 1;
      finish_[i] = s + u.total_duration;
      if (place(k + 1, makespan)) return true;
      for (SimTime t = s; t < s + u.total_duration; ++t) classical_[t] -= u.classical_nodes;
      for (SimTime t = s; t < s + q; ++t) quantum_[t] = 0;
    }
    return false;
  }

  const ResourcePool& pool_;
  const std::vector<SchedulableUnit>& units_;
  std::vector<int> pred_;
  std::vector<std::size_t> order_;
  std::vector<int> classical_;
  std::vector<int> quantum_;
  std::vector<SimTime> finish_;
};

}  // namespace detail

/// Minimal makespan over all feasible integer start-time assignments that
/// respect submit times, dependencies, node capacity and device exclusivity.
/// Bounded: at most 6 units, each at most 16 ticks long.
inline SimTime oracle_best_makespan(const ResourcePool& pool,
                                    const std::vector<SchedulableUnit>& units) {
  if (units.size() > kOracleMaxUnits)
    throw OracleLimitError("oracle: more than " + std::to_string(kOracleMaxUnits) + " units");
  for (const auto& u : units) {
    if (u.total_duration > kOracleMaxDuration)
      throw OracleLimitError("oracle: unit '" + u.unit_id + "' longer than " +
                             std::to_string(kOracleMaxDuration) + " ticks");
    if (u.classical_nodes > pool.classical_nodes)
      throw SchedulingError("unit '" + u.unit_id + "' is unsatisfiable");
  }
  if (units.empty()) return 0;
  detail::MakespanSearch search(pool, units);
  const SimTime hi = search.upper_bound();
  for (SimTime m = search.lower_bound(); m <= hi; ++m)
    if (search.feasible(m)) return m;
  throw SchedulingError("oracle: no feasible schedule within serial bound");
}

}  // namespace hqsim

#pragma once

#include <random>
#include <string>
#include <vector>

#include "hqsim/model.hpp"

namespace hqsim::gen {

using Rng = std::mt19937_64;

inline std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

struct JobShape {
  std::size_t max_phases{8};
  SimTime max_duration{10};
  int max_nodes{1};
  SimTime max_submit{0};
};

/// Random valid phase list: no two adjacent quantum phases, at least one
/// classical phase, unique labels.
inline std::vector<Phase> random_phases(Rng& rng, std::size_t max_phases, SimTime max_duration) {
  const auto n = static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(max_phases)));
  std::vector<Phase> phases;
  for (std::size_t i = 0; i < n; ++i) {
    const bool prev_quantum = !phases.empty() && phases.back().kind == PhaseKind::Quantum;
    const bool q = !prev_quantum && uniform(rng, 0, 1) == 1;
    const SimTime d = uniform(rng, 1, max_duration);
    phases.push_back(q ? quantum(d, "q" + std::to_string(i)) : classical(d, "c" + std::to_string(i)));
  }
  if (quantum_block_count(phases) == phases.size()) phases.front() = classical(phases.front().duration, "c0");
  return phases;
}

inline JobSpec random_job(Rng& rng, const std::string& id, const JobShape& shape) {
  JobSpec j;
  j.job_id = id;
  j.phases = random_phases(rng, shape.max_phases, shape.max_duration);
  j.classical_nodes = static_cast<int>(uniform(rng, 1, shape.max_nodes));
  j.submit_time = uniform(rng, 0, shape.max_submit);
  return j;
}

/// Alternating C,Q,C,...,Q,C job with exactly `blocks` quantum phases.
inline JobSpec random_alternating_job(Rng& rng, const std::string& id, std::size_t blocks,
                                      SimTime max_duration) {
  JobSpec j;
  j.job_id = id;
  for (std::size_t b = 0; b < blocks; ++b) {
    j.phases.push_back(classical(uniform(rng, 1, max_duration), "c" + std::to_string(b)));
    j.phases.push_back(quantum(uniform(rng, 1, max_duration), "q" + std::to_string(b)));
  }
  j.phases.push_back(classical(uniform(rng, 1, max_duration), "c" + std::to_string(blocks)));
  return j;
}

struct WorkloadShape {
  std::size_t max_jobs{5};
  std::size_t max_phases{6};
  SimTime max_duration{10};
  int max_pool_nodes{4};
  SimTime max_submit{10};
  SimTime max_overhead{2};
};

inline WorkloadSpec random_workload(Rng& rng, const WorkloadShape& shape) {
  WorkloadSpec w;
  w.pool.classical_nodes = static_cast<int>(uniform(rng, 1, shape.max_pool_nodes));
  w.checkpoint_overhead = uniform(rng, 0, shape.max_overhead);
  const auto n = static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(shape.max_jobs)));
  const JobShape js{shape.max_phases, shape.max_duration, w.pool.classical_nodes, shape.max_submit};
  for (std::size_t i = 0; i < n; ++i) w.jobs.push_back(random_job(rng, "j" + std::to_string(i), js));
  return w;
}

}  // namespace hqsim::gen

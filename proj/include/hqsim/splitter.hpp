#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hqsim/model.hpp"

namespace hqsim {

inline constexpr std::string_view kCheckpointLabel = "ckpt:write";
inline constexpr std::string_view kRestartLabel = "ckpt:read";

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One dependency-chained piece of a split job. Holds at most one quantum block.
struct SubJob {
  std::string subjob_id;
  std::string parent_job_id;
  std::vector<Phase> phases;
  int classical_nodes{1};
  SimTime submit_time{0};
  std::optional<std::string> depends_on;
  // Offset from sub-job start at which the quantum device is released.
  SimTime quantum_release_offset{0};
  bool needs_quantum{false};

  bool operator==(const SubJob&) const = default;
};

struct SplitPlan {
  std::string parent_job_id;
  std::vector<SubJob> subjobs;
  SimTime checkpoint_overhead{0};

  bool operator==(const SplitPlan&) const = default;
};

inline std::string subjob_id(const std::string& parent, std::size_t index_1based) {
  return "J_" + parent + "_" + std::to_string(index_1based);
}

inline SimTime total_duration(const std::vector<Phase>& phases) {
  SimTime t = 0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

namespace detail {

inline void finish_subjob(SubJob& sj) {
  sj.needs_quantum = false;
  sj.quantum_release_offset = 0;
  SimTime acc = 0;
  for (const auto& p : sj.phases) {
    acc += p.duration;
    if (p.kind == PhaseKind::Quantum) {
      sj.needs_quantum = true;
      sj.quantum_release_offset = acc;
    }
  }
}

}  // namespace detail

/// Splits a job into sub-jobs with exactly one quantum block each. Cuts go
/// immediately before every quantum phase except the first; with
/// checkpoint_overhead > 0 each boundary gets a Classical(eps) checkpoint on
/// the writer's tail and a Classical(eps) restart on the reader's head.
inline SplitPlan split_job(const JobSpec& job, SimTime checkpoint_overhead) {
  validate_job(job);
  if (checkpoint_overhead < 0) throw ValidationError("checkpoint_overhead must be >= 0");

  std::vector<std::vector<Phase>> pieces(1);
  bool seen_quantum = false;
  for (const auto& p : job.phases) {
    if (p.kind == PhaseKind::Quantum) {
      if (seen_quantum) pieces.emplace_back();
      seen_quantum = true;
    }
    pieces.back().push_back(p);
  }

  SplitPlan plan{job.job_id, {}, checkpoint_overhead};
  const std::size_t n = pieces.size();
  for (std::size_t k = 0; k < n; ++k) {
    SubJob sj;
    sj.subjob_id = subjob_id(job.job_id, k + 1);
    sj.parent_job_id = job.job_id;
    sj.classical_nodes = job.classical_nodes;
    sj.submit_time = job.submit_time;
    if (k > 0) sj.depends_on = plan.subjobs.back().subjob_id;
    if (checkpoint_overhead > 0 && k > 0)
      sj.phases.push_back(classical(checkpoint_overhead, std::string(kRestartLabel)));
    sj.phases.insert(sj.phases.end(), pieces[k].begin(), pieces[k].end());
    if (checkpoint_overhead > 0 && k + 1 < n)
      sj.phases.push_back(classical(checkpoint_overhead, std::string(kCheckpointLabel)));
    detail::finish_subjob(sj);
    plan.subjobs.push_back(std::move(sj));
  }
  return plan;
}

/// Inverse of split_job: concatenates sub-job phases with the injected
/// checkpoint/restart phases stripped.
inline std::vector<Phase> reassemble(const SplitPlan& plan) {
  std::vector<Phase> out;
  const std::size_t n = plan.subjobs.size();
  const SimTime eps = plan.checkpoint_overhead;
  auto is_marker = [&](const Phase& p, std::string_view label) {
    return p.kind == PhaseKind::Classical && p.label == label && p.duration == eps;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const auto& phases = plan.subjobs[k].phases;
    std::size_t first = 0, last = phases.size();
    if (eps > 0 && k > 0) {
      if (phases.empty() || !is_marker(phases.front(), kRestartLabel))
        throw StructuralError("sub-job '" + plan.subjobs[k].subjob_id + "': missing restart phase");
      ++first;
    }
    if (eps > 0 && k + 1 < n) {
      if (last <= first || !is_marker(phases[last - 1], kCheckpointLabel))
        throw StructuralError("sub-job '" + plan.subjobs[k].subjob_id +
                              "': missing checkpoint phase");
      --last;
    }
    for (std::size_t i = first; i < last; ++i) {
      if (std::string_view(phases[i].label).starts_with(kReservedLabelPrefix))
        throw StructuralError("sub-job '" + plan.subjobs[k].subjob_id +
                              "': unexpected checkpoint phase at position " + std::to_string(i));
      out.push_back(phases[i]);
    }
  }
  return out;
}

inline std::vector<SplitPlan> split_workload(const WorkloadSpec& w) {
  std::vector<SplitPlan> plans;
  plans.reserve(w.jobs.size());
  for (const auto& job : w.jobs) plans.push_back(split_job(job, w.checkpoint_overhead));
  return plans;
}

// ---------------------------------------------------------------------------
// Plan document: the workload schema with sub-jobs in place of jobs, plus
// "parent", "depends_on", "needs_quantum" and "quantum_release_offset".

struct PlanDocument {
  ResourcePool pool;
  SimTime checkpoint_overhead{0};
  std::vector<SplitPlan> plans;
};

inline std::string serialize_plans(const ResourcePool& pool, SimTime eps,
                                   const std::vector<SplitPlan>& plans) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["pool"] = {{"classical_nodes", pool.classical_nodes},
                 {"quantum_devices", pool.quantum_devices}};
  doc["checkpoint_overhead"] = eps;
  doc["jobs"] = ojson::array();
  for (const auto& plan : plans) {
    for (const auto& sj : plan.subjobs) {
      ojson j;
      j["id"] = sj.subjob_id;
      j["parent"] = sj.parent_job_id;
      j["classical_nodes"] = sj.classical_nodes;
      j["submit_time"] = sj.submit_time;
      j["depends_on"] = sj.depends_on ? ojson(*sj.depends_on) : ojson(nullptr);
      j["needs_quantum"] = sj.needs_quantum;
      j["quantum_release_offset"] = sj.quantum_release_offset;
      j["phases"] = ojson::array();
      for (const auto& p : sj.phases)
        j["phases"].push_back(
            {{"kind", to_string(p.kind)}, {"duration", p.duration}, {"label", p.label}});
      doc["jobs"].push_back(std::move(j));
    }
  }
  return doc.dump(2) + "\n";
}

/// Reads a plan document back. Sub-jobs are regrouped by parent in order of
/// first appearance; each group is checked with reassemble().
inline PlanDocument load_plans(std::string_view document) {
  using detail::json;
  const json doc = detail::parse_document(document);
  detail::reject_unknown_keys(doc, {"pool", "checkpoint_overhead", "jobs"}, "plan");
  PlanDocument out;
  out.pool = detail::parse_pool(detail::require(doc, "pool", "plan"));
  validate_pool(out.pool);
  if (auto it = doc.find("checkpoint_overhead"); it != doc.end())
    out.checkpoint_overhead = detail::as_int(*it, "checkpoint_overhead");
  if (out.checkpoint_overhead < 0) throw ValidationError("checkpoint_overhead must be >= 0");

  const json& jobs = detail::require(doc, "jobs", "plan");
  if (!jobs.is_array()) throw ParseError("jobs: expected array");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string ctx = "jobs[" + std::to_string(i) + "]";
    const json& j = jobs[i];
    detail::reject_unknown_keys(j,
                                {"id", "parent", "classical_nodes", "submit_time", "depends_on",
                                 "needs_quantum", "quantum_release_offset", "phases"},
                                ctx);
    SubJob sj;
    sj.subjob_id = detail::as_string(detail::require(j, "id", ctx), ctx + ".id");
    sj.parent_job_id = detail::as_string(detail::require(j, "parent", ctx), ctx + ".parent");
    sj.classical_nodes =
        detail::as_count(detail::require(j, "classical_nodes", ctx), ctx + ".classical_nodes");
    sj.submit_time = detail::as_int(detail::require(j, "submit_time", ctx), ctx + ".submit_time");
    const json& dep = detail::require(j, "depends_on", ctx);
    if (!dep.is_null()) sj.depends_on = detail::as_string(dep, ctx + ".depends_on");
    sj.phases = detail::parse_phases(detail::require(j, "phases", ctx), i, ctx);
    detail::finish_subjob(sj);
    const json& nq = detail::require(j, "needs_quantum", ctx);
    if (!nq.is_boolean() || nq.get<bool>() != sj.needs_quantum)
      throw ValidationError(ctx + ": needs_quantum inconsistent with phases");
    if (detail::as_int(detail::require(j, "quantum_release_offset", ctx),
                       ctx + ".quantum_release_offset") != sj.quantum_release_offset)
      throw ValidationError(ctx + ": quantum_release_offset inconsistent with phases");
    if (sj.classical_nodes < 1 || sj.classical_nodes > out.pool.classical_nodes)
      throw ValidationError(ctx + ": classical_nodes must be in [1, pool]");

    auto it = std::find_if(out.plans.begin(), out.plans.end(),
                           [&](const SplitPlan& p) { return p.parent_job_id == sj.parent_job_id; });
    if (it == out.plans.end()) {
      out.plans.push_back({sj.parent_job_id, {}, out.checkpoint_overhead});
      it = std::prev(out.plans.end());
    }
    const std::optional<std::string> expected_dep =
        it->subjobs.empty() ? std::nullopt : std::optional(it->subjobs.back().subjob_id);
    if (sj.depends_on != expected_dep)
      throw ValidationError(ctx + ": depends_on must name the previous sub-job of the same parent");
    it->subjobs.push_back(std::move(sj));
  }

  for (const auto& plan : out.plans) {
    JobSpec parent{plan.parent_job_id, reassemble(plan), plan.subjobs.front().classical_nodes,
                   plan.subjobs.front().submit_time};
    validate_job(parent);
    if (split_job(parent, plan.checkpoint_overhead) != plan)
      throw ValidationError("plan for '" + plan.parent_job_id +
                            "': sub-jobs do not match the split of their reassembled parent");
  }
  return out;
}

}  // namespace hqsim

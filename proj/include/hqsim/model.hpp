#pragma once

#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hqsim {

/// Abstract simulation time in integer ticks.
using SimTime = std::int64_t;

// Validation bounds. Keep every sum over a workload far below INT64_MAX.
inline constexpr SimTime kMaxPhaseDuration = 1'000'000'000;
inline constexpr SimTime kMaxSubmitTime = 1'000'000'000'000;
inline constexpr std::size_t kMaxPhasesPerJob = 100'000;
inline constexpr std::size_t kMaxJobs = 100'000;
inline constexpr int kMaxClassicalNodes = 1'000'000;

/// Labels with this prefix are reserved for injected checkpoint/restart phases.
inline constexpr std::string_view kReservedLabelPrefix = "ckpt:";

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PhaseKind { Classical, Quantum };

inline std::string_view to_string(PhaseKind k) {
  return k == PhaseKind::Classical ? "classical" : "quantum";
}

struct Phase {
  PhaseKind kind{PhaseKind::Classical};
  SimTime duration{1};
  std::string label;

  bool operator==(const Phase&) const = default;
};

inline Phase classical(SimTime d, std::string label = {}) {
  return {PhaseKind::Classical, d, std::move(label)};
}
inline Phase quantum(SimTime d, std::string label = {}) {
  return {PhaseKind::Quantum, d, std::move(label)};
}

struct JobSpec {
  std::string job_id;
  std::vector<Phase> phases;
  int classical_nodes{1};
  SimTime submit_time{0};

  bool operator==(const JobSpec&) const = default;
};

struct ResourcePool {
  int classical_nodes{1};
  int quantum_devices{1};

  bool operator==(const ResourcePool&) const = default;
};

struct WorkloadSpec {
  ResourcePool pool;
  std::vector<JobSpec> jobs;
  SimTime checkpoint_overhead{0};

  bool operator==(const WorkloadSpec&) const = default;
};

inline SimTime job_total_duration(const JobSpec& job) {
  return std::accumulate(job.phases.begin(), job.phases.end(), SimTime{0},
                         [](SimTime acc, const Phase& p) { return acc + p.duration; });
}

inline std::size_t quantum_block_count(const std::vector<Phase>& phases) {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.kind == PhaseKind::Quantum;
  return n;
}

inline void validate_pool(const ResourcePool& pool) {
  if (pool.classical_nodes < 1 || pool.classical_nodes > kMaxClassicalNodes)
    throw ValidationError("pool: classical_nodes must be in [1, " +
                          std::to_string(kMaxClassicalNodes) + "]");
  if (pool.quantum_devices != 1)
    throw ValidationError("pool: quantum_devices must be 1");
}

/// Checks every JobSpec invariant. Error text names the job, the phase
/// where relevant, and the violated rule.
inline void validate_job(const JobSpec& job) {
  const std::string where = "job '" + job.job_id + "': ";
  if (job.job_id.empty()) throw ValidationError("job: empty id");
  if (job.phases.empty()) throw ValidationError(where + "no phases");
  if (job.phases.size() > kMaxPhasesPerJob) throw ValidationError(where + "too many phases");
  if (job.classical_nodes < 1 || job.classical_nodes > kMaxClassicalNodes)
    throw ValidationError(where + "classical_nodes must be >= 1");
  if (job.submit_time < 0 || job.submit_time > kMaxSubmitTime)
    throw ValidationError(where + "submit_time out of range");

  bool has_classical = false;
  std::set<std::string_view> labels;
  for (std::size_t i = 0; i < job.phases.size(); ++i) {
    const Phase& p = job.phases[i];
    const std::string at = where + "phase " + std::to_string(i) + " ('" + p.label + "'): ";
    if (p.duration < 1) throw ValidationError(at + "duration must be >= 1");
    if (p.duration > kMaxPhaseDuration) throw ValidationError(at + "duration too large");
    if (p.label.empty()) throw ValidationError(at + "empty label");
    if (std::string_view(p.label).starts_with(kReservedLabelPrefix))
      throw ValidationError(at + "label uses reserved prefix 'ckpt:'");
    if (!labels.insert(p.label).second) throw ValidationError(at + "duplicate label");
    has_classical |= p.kind == PhaseKind::Classical;
    if (i > 0 && p.kind == PhaseKind::Quantum && job.phases[i - 1].kind == PhaseKind::Quantum)
      throw ValidationError(at + "adjacent quantum phases");
  }
  if (!has_classical) throw ValidationError(where + "no classical phase");
}

inline void validate_workload(const WorkloadSpec& w) {
  validate_pool(w.pool);
  if (w.checkpoint_overhead < 0 || w.checkpoint_overhead > kMaxPhaseDuration)
    throw ValidationError("checkpoint_overhead out of range");
  if (w.jobs.size() > kMaxJobs) throw ValidationError("too many jobs");
  std::set<std::string_view> ids;
  for (const auto& job : w.jobs) {
    validate_job(job);
    if (!ids.insert(job.job_id).second)
      throw ValidationError("job '" + job.job_id + "': duplicate job id");
    if (job.classical_nodes > w.pool.classical_nodes)
      throw ValidationError("job '" + job.job_id + "': classical_nodes exceeds pool");
  }
}

// ---------------------------------------------------------------------------
// JSON document format

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& ctx) {
  if (!obj.is_object()) throw ParseError(ctx + ": expected object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok |= key == a;
    if (!ok) throw ParseError(ctx + ": unknown key '" + key + "'");
  }
}

inline const json& require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(ctx + ": missing key '" + key + "'");
  return *it;
}

inline std::int64_t as_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) throw ParseError(ctx + ": expected integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    throw ParseError(ctx + ": integer out of range");
  return v.get<std::int64_t>();
}

inline int as_count(const json& v, const std::string& ctx) {
  auto x = as_int(v, ctx);
  if (x < INT32_MIN || x > INT32_MAX) throw ValidationError(ctx + ": value out of range");
  return static_cast<int>(x);
}

inline std::string as_string(const json& v, const std::string& ctx) {
  if (!v.is_string()) throw ParseError(ctx + ": expected string");
  return v.get<std::string>();
}

inline PhaseKind parse_kind(const json& v, const std::string& ctx) {
  auto s = as_string(v, ctx);
  if (s == "classical") return PhaseKind::Classical;
  if (s == "quantum") return PhaseKind::Quantum;
  throw ParseError(ctx + ": kind must be \"classical\" or \"quantum\"");
}

inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline ResourcePool parse_pool(const json& p) {
  reject_unknown_keys(p, {"classical_nodes", "quantum_devices"}, "pool");
  ResourcePool pool;
  pool.classical_nodes = as_count(require(p, "classical_nodes", "pool"), "pool.classical_nodes");
  pool.quantum_devices = as_count(require(p, "quantum_devices", "pool"), "pool.quantum_devices");
  return pool;
}

/// Parses the phase list; missing labels become C_<i>_<k> / Q_<i>_<k>.
inline std::vector<Phase> parse_phases(const json& arr, std::size_t job_index,
                                       const std::string& ctx) {
  if (!arr.is_array()) throw ParseError(ctx + ".phases: expected array");
  std::vector<Phase> phases;
  int nc = 0, nq = 0;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string pctx = ctx + ".phases[" + std::to_string(k) + "]";
    const json& p = arr[k];
    reject_unknown_keys(p, {"kind", "duration", "label"}, pctx);
    Phase ph;
    ph.kind = parse_kind(require(p, "kind", pctx), pctx + ".kind");
    ph.duration = as_int(require(p, "duration", pctx), pctx + ".duration");
    const int n = ph.kind == PhaseKind::Classical ? ++nc : ++nq;
    if (auto it = p.find("label"); it != p.end()) {
      ph.label = as_string(*it, pctx + ".label");
    } else {
      ph.label = std::string(ph.kind == PhaseKind::Classical ? "C_" : "Q_") +
                 std::to_string(job_index + 1) + "_" + std::to_string(n);
    }
    phases.push_back(std::move(ph));
  }
  return phases;
}

}  // namespace detail

/// Parses and validates a workload document. Throws ParseError for malformed
/// or schema-violating input, ValidationError for invariant violations.
inline WorkloadSpec load_workload(std::string_view document) {
  using detail::json;
  const json doc = detail::parse_document(document);
  detail::reject_unknown_keys(doc, {"pool", "checkpoint_overhead", "jobs"}, "workload");

  WorkloadSpec w;
  w.pool = detail::parse_pool(detail::require(doc, "pool", "workload"));
  if (auto it = doc.find("checkpoint_overhead"); it != doc.end())
    w.checkpoint_overhead = detail::as_int(*it, "checkpoint_overhead");

  const json& jobs = detail::require(doc, "jobs", "workload");
  if (!jobs.is_array()) throw ParseError("jobs: expected array");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string ctx = "jobs[" + std::to_string(i) + "]";
    const json& j = jobs[i];
    detail::reject_unknown_keys(j, {"id", "classical_nodes", "submit_time", "phases"}, ctx);
    JobSpec job;
    job.job_id = detail::as_string(detail::require(j, "id", ctx), ctx + ".id");
    job.classical_nodes =
        detail::as_count(detail::require(j, "classical_nodes", ctx), ctx + ".classical_nodes");
    job.submit_time = detail::as_int(detail::require(j, "submit_time", ctx), ctx + ".submit_time");
    job.phases = detail::parse_phases(detail::require(j, "phases", ctx), i, ctx);
    w.jobs.push_back(std::move(job));
  }
  validate_workload(w);
  return w;
}

/// Serializes a workload; load_workload(serialize_workload(w)) == w.
inline std::string serialize_workload(const WorkloadSpec& w) {
  nlohmann::ordered_json doc;
  doc["pool"] = {{"classical_nodes", w.pool.classical_nodes},
                 {"quantum_devices", w.pool.quantum_devices}};
  doc["checkpoint_overhead"] = w.checkpoint_overhead;
  doc["jobs"] = nlohmann::ordered_json::array();
  for (const auto& job : w.jobs) {
    nlohmann::ordered_json j;
    j["id"] = job.job_id;
    j["classical_nodes"] = job.classical_nodes;
    j["submit_time"] = job.submit_time;
    j["phases"] = nlohmann::ordered_json::array();
    for (const auto& p : job.phases)
      j["phases"].push_back({{"kind", to_string(p.kind)}, {"duration", p.duration}, {"label", p.label}});
    doc["jobs"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace hqsim

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "hqsim/hqsim.hpp"
#include "support/brute_force.hpp"
#include "support/generators.hpp"
#include "support/session_model.hpp"
#include "support/trace_checks.hpp"

using namespace hqsim;
using Clock = std::chrono::steady_clock;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass{true};
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

Outcome canonical_scenario() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto w = load_workload(slurp(std::string(HQSIM_WORKLOAD_DIR) + "/canonical.json"));
  const auto mono_units = units_from_monolithic(w);
  const auto split_units = units_from_split(split_workload(w));
  const auto mono = compute_metrics(simulate(w.pool, mono_units));
  const auto spl = compute_metrics(simulate(w.pool, split_units));
  const SimTime best_split = oracle_best_makespan(w.pool, split_units);
  const SimTime best_mono = oracle_best_makespan(w.pool, mono_units);
  const SimTime brute_split = gen::brute_force_makespan(w.pool, split_units);
  const double secs = seconds_since(t0);

  std::ostringstream d;
  d << "monolithic makespan " << mono.makespan << " idle " << mono.quantum_allocated_idle << "; split makespan "
    << spl.makespan << " idle " << spl.quantum_allocated_idle << "; oracle " << best_split << "; " << secs << " s";
  o.detail = d.str();
  o.require(mono.makespan == 18 && mono.quantum_allocated_idle == 14, "monolithic: " + d.str());
  o.require(spl.makespan == 12 && spl.quantum_allocated_idle == 4, "split: " + d.str());
  o.require(best_split == 12 && brute_split == 12 && best_mono == 18, "oracle: " + d.str());
  o.require(secs < 1.0, "runtime: " + d.str());
  return o;
}

Outcome splitter_round_trip() {
  Outcome o;
  gen::Rng rng(0xacc002);
  int checked = 0;
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const auto job = gen::random_job(rng, "j" + std::to_string(i), {8, 10, 1, 0});
    const SimTime eps = gen::uniform(rng, 0, 2);
    const auto plan = split_job(job, eps);
    SimTime sum = 0;
    for (const auto& sj : plan.subjobs) sum += total_duration(sj.phases);
    const auto n = static_cast<SimTime>(plan.subjobs.size());
    o.require(reassemble(plan) == job.phases, "reassemble mismatch on job " + job.job_id);
    o.require(sum == job_total_duration(job) + 2 * eps * (n - 1), "duration identity fails on job " + job.job_id);
    ++checked;
  }
  if (o.pass) o.detail = std::to_string(checked) + " jobs";
  return o;
}

Outcome trace_invariants() {
  Outcome o;
  gen::Rng rng(0xacc003);
  int traces = 0;
  for (int i = 0; i < 500 && o.pass; ++i) {
    const auto w = gen::random_workload(rng, {5, 6, 10, 4, 10, 2});
    for (const bool split : {false, true}) {
      const auto units = split ? units_from_split(split_workload(w)) : units_from_monolithic(w);
      const auto t = simulate(w.pool, units);
      const auto bad = gen::check_trace(w.pool, units, t);
      o.require(bad.empty(), "workload " + std::to_string(i) + ": " + (bad.empty() ? "" : bad.front()));
      const auto m = compute_metrics(t);
      const auto ref = gen::independent_metrics(units, t);
      o.require(m.quantum_busy + m.quantum_allocated_idle + m.quantum_unallocated_idle == m.makespan,
                "partition identity fails on workload " + std::to_string(i));
      o.require(m.makespan == ref.makespan && m.quantum_busy == ref.busy &&
                    m.quantum_allocated_idle == ref.allocated_idle() &&
                    m.quantum_unallocated_idle == ref.unallocated_idle(),
                "metrics disagree with the event stream on workload " + std::to_string(i));
      ++traces;
    }
  }
  if (o.pass) o.detail = std::to_string(traces) + " traces from 500 workloads";
  return o;
}

Outcome idle_dominance() {
  Outcome o;
  gen::Rng rng(0xacc004);
  int multi = 0, single = 0;
  for (int i = 0; i < 2000 && o.pass; ++i) {
    const auto job = gen::random_job(rng, "j", {8, 10, 1, 0});
    const std::size_t blocks = quantum_block_count(job.phases);
    if (blocks == 0) continue;
    const WorkloadSpec w{{1, 1}, {job}, 0};
    const auto mono = compute_metrics(simulate(w.pool, units_from_monolithic(w)));
    const auto spl = compute_metrics(simulate(w.pool, units_from_split(split_workload(w))));
    if (blocks >= 2) {
      ++multi;
      o.require(spl.quantum_allocated_idle < mono.quantum_allocated_idle,
                "split not strictly better for a " + std::to_string(blocks) + "-block job");
    } else {
      ++single;
      o.require(spl.quantum_allocated_idle == mono.quantum_allocated_idle, "1-block job differs between modes");
    }
  }
  o.require(multi > 100 && single > 100, "generator covered too few jobs of one kind");
  if (o.pass) o.detail = std::to_string(multi) + " multi-block and " + std::to_string(single) + " single-block jobs";
  return o;
}

Outcome dpm_state_machine() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t transitions = 0;
  for (auto role : {dpm::Role::Server, dpm::Role::Client}) {
    gen::Explorer ex;
    ex.run(dpm::SessionMachine(role), gen::Model(role), 6);
    transitions += ex.transitions;
    o.require(ex.violations.empty(), ex.violations.empty() ? "" : ex.violations.front());
    o.require(ex.reached.count(dpm::SessionState::Disconnected) == 1, "Disconnected never reached");
    for (const auto& m : ex.frontier_states)
      if (!gen::can_finish(m, ex.sigma, 8)) {
        o.require(false, "a reachable session cannot reach Disconnected");
        break;
      }
  }
  for (auto t : dpm::kAllFrameTypes)
    for (std::size_t n : {std::size_t{0}, std::size_t{1}}) {
      const dpm::Frame f{t, dpm::Bytes(n, 0xa5)};
      o.require(dpm::decode(dpm::encode(f)) == f, "frame round-trip failed");
    }
  dpm::Bytes big(dpm::kMaxPayload);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i * 131u);
  const dpm::Frame f{dpm::FrameType::WorkItem, std::move(big)};
  o.require(dpm::decode(dpm::encode(f)) == f, "maximum-size frame round-trip failed");
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(transitions) + " transitions checked; " + std::to_string(secs) + " s";
  return o;
}

Outcome demo_end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::string cmd = std::string(HQSIM_EXE) + " demo-dpm --rounds 10 --payload-bytes 1024 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    o.require(false, "cannot start " + cmd);
    return o;
  }
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = ::pclose(pipe);
  const double secs = seconds_since(t0);

  int rounds = 0;
  long long terminated = -1, final_done = -1;
  std::istringstream lines(out);
  static const std::regex event_re(R"(^event (\w+) t_us (\d+)$)");
  for (std::string line; std::getline(lines, line);) {
    std::smatch m;
    if (line.rfind("round ", 0) == 0) ++rounds;
    if (std::regex_match(line, m, event_re)) {
      if (m[1] == "client_terminated") terminated = std::stoll(m[2]);
      if (m[1] == "final_work_done") final_done = std::stoll(m[2]);
    }
  }
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.require(code == 0, "exit code " + std::to_string(code) + "; output:\n" + out);
  o.require(rounds == 10, "completed " + std::to_string(rounds) + " rounds");
  o.require(terminated >= 0 && final_done >= 0 && terminated < final_done,
            "termination " + std::to_string(terminated) + " us vs final work " + std::to_string(final_done) + " us");
  o.require(secs < 10.0, "runtime " + std::to_string(secs) + " s");
  if (o.pass)
    o.detail = "10 rounds; client terminated at " + std::to_string(terminated) + " us, final work done at " +
               std::to_string(final_done) + " us; " + std::to_string(secs) + " s";
  return o;
}

Outcome script_goldens() {
  Outcome o;
  const std::string dir = HQSIM_GOLDEN_DIR;
  o.require(emit_monolithic_script({1, 2, 5, "cpu", "qpu", "python single.py"}) == slurp(dir + "/listing_monolithic.sh"),
            "monolithic script differs from golden");
  DpmScriptParams p;
  p.classical_nodes = 1;
  p.minutes = 5;
  p.server_exe = "python server.py";
  p.client_exe = "python client.py";
  o.require(emit_dpm_script(p) == slurp(dir + "/listing_dpm.sh"), "dpm script differs from golden");

  auto job = [](const std::string& id) {
    return JobSpec{id, {classical(2, "a"), quantum(1, "b"), classical(3, "c"), quantum(1, "d"), classical(2, "e")}};
  };
  const std::vector<SplitPlan> plans = {split_job(job("1"), 0), split_job(job("2"), 0)};
  const std::string chain = emit_chain_submitter(plans);
  std::size_t afterok = 0;
  for (auto pos = chain.find("-d afterok"); pos != std::string::npos; pos = chain.find("-d afterok", pos + 1))
    ++afterok;
  o.require(plans[0].subjobs.size() == 2 && plans[1].subjobs.size() == 2, "plans are not 2-sub-job plans");
  o.require(afterok == 2, std::to_string(afterok) + " '-d afterok' occurrences");
  if (o.pass) o.detail = "both goldens byte-equal; 2 '-d afterok' in chain submitter";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"canonical two-job scenario", canonical_scenario},
      {"splitter round-trip", splitter_round_trip},
      {"trace invariants", trace_invariants},
      {"single-job idle dominance", idle_dominance},
      {"dpm state machine and framing", dpm_state_machine},
      {"demo-dpm end-to-end", demo_end_to_end},
      {"script goldens", script_goldens},
  };
  int failed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? "FAIL" : "PASS") << ": " << (n - failed) << "/" << n << " criteria met" << std::endl;
  return failed ? 1 : 0;
}

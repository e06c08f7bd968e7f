#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hqsim/demo.hpp"
#include "hqsim/metrics.hpp"
#include "hqsim/model.hpp"
#include "hqsim/scheduler.hpp"
#include "hqsim/scriptgen.hpp"
#include "hqsim/splitter.hpp"

namespace hqsim::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kRuntime = 2 };

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Writes to `path`, or to `out` when path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file(path, text);
}

inline ScheduleTrace run_mode(const WorkloadSpec& w, const std::string& mode, const PolicyConfig& policy) {
  if (mode == "monolithic") return simulate(w.pool, units_from_monolithic(w), policy);
  return simulate(w.pool, units_from_split(split_workload(w)), policy);
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Co-scheduling simulator for hybrid classical-quantum jobs", "hqsim"};
  app.require_subcommand(1);

  std::string workload_path, out_path, trace_path, gantt_path, plan_path, out_dir;
  std::string mode = "split", policy_name = "backfill", gantt_mode = "split", tmpl = "dpm";

  auto* validate = app.add_subcommand("validate", "Check a workload document");
  validate->add_option("workload", workload_path, "Workload JSON")->required();

  auto* split = app.add_subcommand("split", "Split every job into dependency-chained sub-jobs");
  split->add_option("--workload", workload_path, "Workload JSON")->required();
  split->add_option("--out", out_path, "Plan JSON (default: stdout)");

  auto add_policy = [&](CLI::App* sub) {
    sub->add_option("--policy", policy_name, "Queue policy")
        ->check(CLI::IsMember({"backfill", "fcfs"}))
        ->capture_default_str();
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a workload and write its trace");
  simulate_cmd->add_option("--workload", workload_path, "Workload JSON")->required();
  simulate_cmd->add_option("--mode", mode, "Scheduling mode")
      ->check(CLI::IsMember({"monolithic", "split"}))
      ->capture_default_str();
  simulate_cmd->add_option("--trace", trace_path, "Trace JSONL (default: stdout)");
  add_policy(simulate_cmd);

  auto* compare_cmd = app.add_subcommand("compare", "Compare monolithic and split scheduling");
  compare_cmd->add_option("--workload", workload_path, "Workload JSON")->required();
  compare_cmd->add_option("--out", out_path, "Report JSON (default: stdout)");
  compare_cmd->add_option("--gantt", gantt_path, "Gantt CSV of one run");
  compare_cmd->add_option("--gantt-mode", gantt_mode, "Run written to --gantt")
      ->check(CLI::IsMember({"monolithic", "split"}))
      ->capture_default_str();
  add_policy(compare_cmd);

  MonolithicScriptParams mono_params;
  DpmScriptParams dpm_params;
  int minutes_per_tick = 1;
  auto* emit_cmd = app.add_subcommand("emit-scripts", "Write batch scripts and a chain submitter");
  emit_cmd->add_option("--plan", plan_path, "Plan JSON from `split`")->required();
  emit_cmd->add_option("--template", tmpl, "Script template")
      ->check(CLI::IsMember({"monolithic", "dpm"}))
      ->capture_default_str();
  emit_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  emit_cmd->add_option("--minutes-per-tick", minutes_per_tick, "Time limit per tick")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  emit_cmd->add_option("--exe", mono_params.exe, "Program (monolithic template)")->capture_default_str();
  emit_cmd->add_option("--tasks", mono_params.classical_tasks, "Classical tasks (monolithic template)")
      ->capture_default_str();
  emit_cmd->add_option("--server-exe", dpm_params.server_exe, "Server program (dpm template)")
      ->capture_default_str();
  emit_cmd->add_option("--client-exe", dpm_params.client_exe, "Client program (dpm template)")
      ->capture_default_str();
  emit_cmd->add_option("--dpm-dir", dpm_params.dpm_dir, "MPICH_DPM_DIR value")->capture_default_str();
  emit_cmd->add_option("--cpu-partition", mono_params.cpu_partition, "Classical partition")
      ->capture_default_str();
  emit_cmd->add_option("--qpu-partition", mono_params.qpu_partition, "Quantum partition")
      ->capture_default_str();

  DemoOptions demo;
  auto* demo_cmd = app.add_subcommand("demo-dpm", "Run the client/server early-release protocol");
  demo_cmd->add_option("--rounds", demo.rounds, "Work rounds")->check(CLI::PositiveNumber)->capture_default_str();
  demo_cmd->add_option("--payload-bytes", demo.payload_bytes, "Work item size")->capture_default_str();
  demo_cmd->add_option("--service-ms", demo.service_ms, "Device service time")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  demo_cmd->add_option("--classical-ms", demo.classical_ms, "Classical work after release")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo_cmd->add_option("--backend", demo.backend, "Device backend")
      ->check(CLI::IsMember({"echo"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalid;
  }

  const PolicyConfig policy{policy_name == "fcfs" ? QueuePolicy::StrictFcfs
                                                  : QueuePolicy::FcfsAggressiveBackfill};
  try {
    if (*validate) {
      const auto w = load_workload(read_file(workload_path));
      std::size_t phases = 0;
      for (const auto& j : w.jobs) phases += j.phases.size();
      out << "ok: " << w.jobs.size() << " jobs, " << phases << " phases\n";
    } else if (*split) {
      const auto w = load_workload(read_file(workload_path));
      emit(out_path, serialize_plans(w.pool, w.checkpoint_overhead, split_workload(w)), out);
    } else if (*simulate_cmd) {
      const auto w = load_workload(read_file(workload_path));
      emit(trace_path, trace_to_jsonl(run_mode(w, mode, policy)), out);
    } else if (*compare_cmd) {
      const auto w = load_workload(read_file(workload_path));
      const auto mono = run_mode(w, "monolithic", policy);
      const auto spl = run_mode(w, "split", policy);
      const auto report = compare(compute_metrics(mono), compute_metrics(spl));
      emit(out_path, comparison_to_json(report), out);
      if (!out_path.empty() && out_path != "-") out << comparison_summary(report);
      if (!gantt_path.empty()) write_file(gantt_path, gantt_csv(gantt_mode == "split" ? spl : mono));
    } else if (*emit_cmd) {
      const auto doc = load_plans(read_file(plan_path));
      std::filesystem::create_directories(out_dir);
      for (const auto& plan : doc.plans) {
        for (const auto& sj : plan.subjobs) {
          const int minutes = static_cast<int>(std::max<SimTime>(
              1, std::min<SimTime>(total_duration(sj.phases) * minutes_per_tick, 1'000'000)));
          std::string text;
          MonolithicScriptParams mp = mono_params;
          mp.classical_nodes = sj.classical_nodes;
          mp.minutes = minutes;
          if (!sj.needs_quantum) {
            text = emit_classical_script(mp);
          } else if (tmpl == "monolithic") {
            text = emit_monolithic_script(mp);
          } else {
            DpmScriptParams dp = dpm_params;
            dp.classical_nodes = sj.classical_nodes;
            dp.minutes = minutes;
            dp.cpu_partition = mono_params.cpu_partition;
            dp.qpu_partition = mono_params.qpu_partition;
            text = emit_dpm_script(dp);
          }
          write_file(std::filesystem::path(out_dir) / subjob_script_name(sj), text);
        }
      }
      write_file(std::filesystem::path(out_dir) / "submit_chain.sh", emit_chain_submitter(doc.plans));
      out << "wrote scripts for " << doc.plans.size() << " job(s) to " << out_dir << "\n";
    } else if (*demo_cmd) {
      out.flush();
      return run_demo_dpm(demo, err);
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace hqsim::cli

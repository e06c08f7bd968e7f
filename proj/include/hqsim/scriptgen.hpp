#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hqsim/splitter.hpp"

namespace hqsim {

// Batch scripts for SLURM heterogeneous jobs. Text only; nothing is submitted.

struct MonolithicScriptParams {
  int classical_nodes{1};
  int classical_tasks{2};
  int minutes{5};
  std::string cpu_partition{"cpu"};
  std::string qpu_partition{"qpu"};
  std::string exe{"python single.py"};
};

struct DpmScriptParams {
  int classical_nodes{1};
  int minutes{5};
  std::string cpu_partition{"cpu"};
  std::string qpu_partition{"qpu"};
  std::string network{"single_node_vni,job_vni,def_tles=0"};
  std::string server_exe{"python server.py"};
  std::string client_exe{"python client.py"};
  int server_tasks{2};
  int client_tasks{1};
  std::string dpm_dir{"${PWD}/dpm_dir"};
};

namespace detail {

inline void require_positive(int v, const char* name) {
  if (v < 1) throw ValidationError(std::string(name) + " must be >= 1");
}

// Values land inside single quotes or on #SBATCH lines.
inline void require_text(const std::string& v, const char* name) {
  if (v.empty()) throw ValidationError(std::string(name) + " must not be empty");
  if (v.find_first_of("'\n\r") != std::string::npos)
    throw ValidationError(std::string(name) + " must not contain quotes or newlines");
}

inline void require_token(const std::string& v, const char* name) {
  require_text(v, name);
  if (v.find_first_of(" \t") != std::string::npos)
    throw ValidationError(std::string(name) + " must not contain whitespace");
}

}  // namespace detail

/// Single-communicator het-job: both components launched by one colon-form srun.
inline std::string emit_monolithic_script(const MonolithicScriptParams& p) {
  detail::require_positive(p.classical_nodes, "classical_nodes");
  detail::require_positive(p.classical_tasks, "classical_tasks");
  detail::require_positive(p.minutes, "minutes");
  detail::require_token(p.cpu_partition, "cpu_partition");
  detail::require_token(p.qpu_partition, "qpu_partition");
  detail::require_text(p.exe, "exe");

  std::ostringstream s;
  s << "#!/bin/bash\n"
    << "\n"
    << "#SBATCH -N" << p.classical_nodes << "\n"
    << "#SBATCH -n " << p.classical_tasks << "\n"
    << "#SBATCH -t " << p.minutes << "\n"
    << "#SBATCH -p " << p.cpu_partition << "\n"
    << "#SBATCH --exclusive\n"
    << "#SBATCH hetjob\n"
    << "#SBATCH -N1\n"
    << "#SBATCH -n 1\n"
    << "#SBATCH -p " << p.qpu_partition << "\n"
    << "#SBATCH --exclusive\n"
    << "\n"
    << "EXE='" << p.exe << "'\n"
    << "\n"
    << "srun  -u -l  $EXE : $EXE > out.$SLURM_JOBID.txt 2>&1 \n";
  return s.str();
}

/// Client/server het-job: each component gets its own communicator, so the
/// quantum group can be cancelled on its own.
inline std::string emit_dpm_script(const DpmScriptParams& p) {
  detail::require_positive(p.classical_nodes, "classical_nodes");
  detail::require_positive(p.minutes, "minutes");
  detail::require_positive(p.server_tasks, "server_tasks");
  detail::require_positive(p.client_tasks, "client_tasks");
  detail::require_token(p.cpu_partition, "cpu_partition");
  detail::require_token(p.qpu_partition, "qpu_partition");
  detail::require_token(p.network, "network");
  detail::require_text(p.server_exe, "server_exe");
  detail::require_text(p.client_exe, "client_exe");
  detail::require_token(p.dpm_dir, "dpm_dir");

  std::ostringstream s;
  s << "#!/bin/bash\n"
    << "\n"
    << "#SBATCH -N" << p.classical_nodes << "\n"
    << "#SBATCH -t " << p.minutes << "\n"
    << "#SBATCH -p " << p.cpu_partition << "\n"
    << "#SBATCH --network=" << p.network << "\n"
    << "#SBATCH --exclusive\n"
    << "#SBATCH hetjob\n"
    << "#SBATCH -N1\n"
    << "#SBATCH -p " << p.qpu_partition << "\n"
    << "#SBATCH --network=" << p.network << "\n"
    << "#SBATCH --exclusive\n"
    << "\n"
    << "EXE1='" << p.server_exe << "'\n"
    << "EXE2='" << p.client_exe << "'\n"
    << "\n"
    << "export MPICH_SINGLE_HOST_ENABLED=0\n"
    << "export MPICH_DPM_DIR=" << p.dpm_dir << "\n"
    << "\n"
    << "srun  --het-group=0 -u -l -n " << p.server_tasks
    << " $EXE1 > server.$SLURM_JOBID.txt 2>&1 &\n"
    << "sleep 2\n"
    << "srun  --het-group=1 -u -l -n " << p.client_tasks
    << " $EXE2 > client.$SLURM_JOBID.txt 2>&1 \n"
    << "wait\n";
  return s.str();
}

/// Plain job for sub-jobs without a quantum block.
inline std::string emit_classical_script(const MonolithicScriptParams& p) {
  detail::require_positive(p.classical_nodes, "classical_nodes");
  detail::require_positive(p.classical_tasks, "classical_tasks");
  detail::require_positive(p.minutes, "minutes");
  detail::require_token(p.cpu_partition, "cpu_partition");
  detail::require_text(p.exe, "exe");

  std::ostringstream s;
  s << "#!/bin/bash\n"
    << "\n"
    << "#SBATCH -N" << p.classical_nodes << "\n"
    << "#SBATCH -n " << p.classical_tasks << "\n"
    << "#SBATCH -t " << p.minutes << "\n"
    << "#SBATCH -p " << p.cpu_partition << "\n"
    << "#SBATCH --exclusive\n"
    << "\n"
    << "EXE='" << p.exe << "'\n"
    << "\n"
    << "srun  -u -l  $EXE > out.$SLURM_JOBID.txt 2>&1\n";
  return s.str();
}

inline std::string subjob_script_name(const SubJob& sj) { return sj.subjob_id + ".sh"; }

/// Shell variable holding the job id of a submitted sub-job.
inline std::string job_id_variable(const std::string& subjob_id) {
  std::string v = "JID_";
  for (char c : subjob_id) v += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return v;
}

/// sbatch-submits every sub-job, chaining each to its predecessor with
/// `-d afterok:<id>`. Chains are interleaved (all first sub-jobs, then all
/// second sub-jobs, ...) so independent jobs can be co-scheduled.
inline std::string emit_chain_submitter(const std::vector<SplitPlan>& plans) {
  std::ostringstream s;
  s << "#!/bin/bash\n";
  std::size_t depth = 0;
  for (const auto& p : plans) depth = std::max(depth, p.subjobs.size());
  if (depth == 0) return s.str();

  std::map<std::string, std::string> vars;
  std::set<std::string> taken;
  for (const auto& p : plans)
    for (const auto& sj : p.subjobs) {
      std::string v = job_id_variable(sj.subjob_id);
      for (int k = 2; !taken.insert(v).second; ++k) v = job_id_variable(sj.subjob_id) + "_" + std::to_string(k);
      vars[sj.subjob_id] = v;
    }

  s << "\nset -e\n\n";
  for (std::size_t k = 0; k < depth; ++k) {
    for (const auto& p : plans) {
      if (k >= p.subjobs.size()) continue;
      const SubJob& sj = p.subjobs[k];
      s << vars.at(sj.subjob_id) << "=$(sbatch --parsable ";
      if (sj.depends_on) s << "-d afterok:${" << vars.at(*sj.depends_on) << "} ";
      s << subjob_script_name(sj) << ")\n";
    }
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// Structural lint

/// Problems found in a het-job script; empty when well formed.
inline std::vector<std::string> lint_hetjob_script(const std::string& text) {
  std::vector<std::string> problems;
  if (!text.starts_with("#!")) problems.push_back("first line is not a shebang");
  if (text.empty() || text.back() != '\n') problems.push_back("missing trailing newline");
  std::istringstream in(text);
  std::string line;
  int hetjobs = 0;
  int exclusive[2] = {0, 0};
  while (std::getline(in, line)) {
    if (line == "#SBATCH hetjob") {
      ++hetjobs;
    } else if (line == "#SBATCH --exclusive") {
      ++exclusive[hetjobs > 0 ? 1 : 0];
    }
  }
  if (hetjobs != 1)
    problems.push_back("expected exactly one hetjob separator, found " + std::to_string(hetjobs));
  if (exclusive[0] != 1) problems.push_back("first component is not --exclusive");
  if (exclusive[1] != 1) problems.push_back("second component is not --exclusive");
  return problems;
}

/// Checks that a chain submitter submits every sub-job once, and that the
/// dependency flags follow each plan's chain.
inline std::vector<std::string> lint_chain_submitter(const std::string& text,
                                                     const std::vector<SplitPlan>& plans) {
  static const std::regex line_re(
      R"(^(\w+)=\$\(sbatch --parsable (?:-d afterok:\$\{(\w+)\} )?(\S+)\)$)");
  std::map<std::string, std::optional<std::string>> dep_of_file;  // file -> dep variable
  std::map<std::string, std::string> var_of_file;
  std::set<std::string> defined;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    if (m[2].matched && !defined.count(m[2].str()))
      problems.push_back("dependency on undefined variable " + m[2].str());
    defined.insert(m[1].str());
    var_of_file[m[3].str()] = m[1].str();
    dep_of_file[m[3].str()] = m[2].matched ? std::optional(m[2].str()) : std::nullopt;
  }
  for (const auto& p : plans) {
    for (const auto& sj : p.subjobs) {
      const std::string file = subjob_script_name(sj);
      if (!var_of_file.count(file)) {
        problems.push_back("sub-job " + sj.subjob_id + " is never submitted");
        continue;
      }
      std::optional<std::string> want;
      if (sj.depends_on) {
        for (const auto& q : p.subjobs)
          if (q.subjob_id == *sj.depends_on) want = var_of_file[subjob_script_name(q)];
      }
      if (dep_of_file[file] != want)
        problems.push_back("sub-job " + sj.subjob_id + " has the wrong dependency");
    }
  }
  return problems;
}

}  // namespace hqsim

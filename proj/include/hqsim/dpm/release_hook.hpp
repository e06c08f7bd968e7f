#pragma once

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>

#include <cerrno>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hqsim/dpm/session.hpp"
#include "hqsim/qdevice.hpp"
#include "hqsim/scheduler.hpp"

namespace hqsim::dpm {

class UnknownUnit : public DpmError {
 public:
  using DpmError::DpmError;
};

enum class CancelOutcome { Released, AlreadyReleased };

/// Where the server's "scancel the client" lands.
class ReleaseHook {
 public:
  virtual ~ReleaseHook() = default;
  virtual CancelOutcome cancel(const std::string& unit_id) = 0;
};

inline CancelOutcome cancel_client(ReleaseHook& hook, const std::string& client_unit_id) {
  return hook.cancel(client_unit_id);
}

/// Simulator side: records a QuantumRelease event at the logical clock's time.
class SimulatedReleaseHook final : public ReleaseHook {
 public:
  explicit SimulatedReleaseHook(const qdevice::LogicalClock& clock, std::ostream& warn = std::cerr)
      : clock_(clock), warn_(warn) {}

  void register_unit(const std::string& unit_id) { released_.emplace(unit_id, false); }

  CancelOutcome cancel(const std::string& unit_id) override {
    auto it = released_.find(unit_id);
    if (it == released_.end()) throw UnknownUnit("cancel: unknown unit '" + unit_id + "'");
    if (it->second) {
      warn_ << "warning: unit '" << unit_id << "' already released\n";
      return CancelOutcome::AlreadyReleased;
    }
    it->second = true;
    events_.push_back({clock_.now(), EventKind::QuantumRelease, unit_id});
    return CancelOutcome::Released;
  }

  const std::vector<TraceEvent>& events() const { return events_; }

 private:
  const qdevice::LogicalClock& clock_;
  std::ostream& warn_;
  std::map<std::string, bool> released_;
  std::vector<TraceEvent> events_;
};

/// Process side: SIGTERM to the client process, then reap it. Only works for
/// child processes of the caller.
class ProcessReleaseHook final : public ReleaseHook {
 public:
  struct Termination {
    std::int64_t time{0};  // clock units, when waitpid returned
    int status{0};
  };

  explicit ProcessReleaseHook(const qdevice::WallClock& clock, std::ostream& warn = std::cerr)
      : clock_(clock), warn_(warn) {}

  void register_unit(const std::string& unit_id, pid_t pid) { pids_[unit_id] = pid; }

  CancelOutcome cancel(const std::string& unit_id) override {
    auto it = pids_.find(unit_id);
    if (it == pids_.end()) throw UnknownUnit("cancel: unknown unit '" + unit_id + "'");
    if (done_.count(unit_id)) {
      warn_ << "warning: unit '" << unit_id << "' already cancelled\n";
      return CancelOutcome::AlreadyReleased;
    }
    ::kill(it->second, SIGTERM);
    int status = 0;
    while (::waitpid(it->second, &status, 0) < 0 && errno == EINTR) {
    }
    done_[unit_id] = {clock_.now(), status};
    return CancelOutcome::Released;
  }

  std::optional<Termination> termination(const std::string& unit_id) const {
    auto it = done_.find(unit_id);
    if (it == done_.end()) return std::nullopt;
    return it->second;
  }

 private:
  const qdevice::WallClock& clock_;
  std::ostream& warn_;
  std::map<std::string, pid_t> pids_;
  std::map<std::string, Termination> done_;
};

}  // namespace hqsim::dpm

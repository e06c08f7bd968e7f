#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "hqsim/dpm/frame.hpp"

namespace hqsim::qdevice {

using dpm::Bytes;
using dpm::ByteView;

class DeviceBusy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuantumProgram {
  std::string program_id;
  Bytes payload;
  std::int64_t service_time{0};  // in the device clock's units
};

struct QuantumResult {
  std::string program_id;
  Bytes result_payload;
  std::int64_t started{0};
  std::int64_t finished{0};
};

/// Discrete clock for deterministic runs; sleeping advances time.
class LogicalClock {
 public:
  explicit LogicalClock(std::int64_t start = 0) : now_(start) {}
  std::int64_t now() const { return now_.load(); }
  void sleep_for(std::int64_t ticks) { now_ += ticks; }
  void set(std::int64_t t) { now_ = t; }

 private:
  std::atomic<std::int64_t> now_;
};

/// Monotonic wall clock in microseconds since a fixed epoch.
class WallClock {
 public:
  using Epoch = std::chrono::steady_clock::time_point;
  explicit WallClock(Epoch epoch = std::chrono::steady_clock::now()) : epoch_(epoch) {}
  std::int64_t now() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() -
                                                                  epoch_)
        .count();
  }
  void sleep_for(std::int64_t micros) {
    std::this_thread::sleep_for(std::chrono::microseconds(micros));
  }

 private:
  Epoch epoch_;
};

/// Backend boundary. A device that dispatches over http would implement this.
class QuantumBackend {
 public:
  virtual ~QuantumBackend() = default;
  virtual QuantumResult execute(const QuantumProgram& program) = 0;
};

/// Result payload of the echo device: the input followed by its CRC32 (BE).
inline Bytes echo_payload(ByteView input) {
  Bytes out(input.begin(), input.end());
  dpm::put_be32(out, dpm::crc32_of(input));
  return out;
}

/// Echo-with-checksum device. Executes one program at a time; a concurrent
/// call fails with DeviceBusy instead of queueing.
template <class ClockT>
class EchoDevice final : public QuantumBackend {
 public:
  explicit EchoDevice(ClockT& clock) : clock_(clock) {}

  QuantumResult execute(const QuantumProgram& program) override {
    if (program.service_time < 0) throw std::invalid_argument("negative service time");
    bool expected = false;
    if (!busy_.compare_exchange_strong(expected, true))
      throw DeviceBusy("device busy, rejected program '" + program.program_id + "'");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag = false; }
    } release{busy_};

    QuantumResult r;
    r.program_id = program.program_id;
    r.started = clock_.now();
    if (program.service_time > 0) clock_.sleep_for(program.service_time);
    r.result_payload = echo_payload(program.payload);
    r.finished = clock_.now();
    return r;
  }

 private:
  ClockT& clock_;
  std::atomic<bool> busy_{false};
};

template <class ClockT>
std::unique_ptr<QuantumBackend> make_backend(const std::string& name, ClockT& clock) {
  if (name == "echo") return std::make_unique<EchoDevice<ClockT>>(clock);
  throw std::invalid_argument("unknown backend '" + name + "'");
}

}  // namespace hqsim::qdevice

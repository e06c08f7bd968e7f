#pragma once

#include <exception>
#include <memory>
#include <optional>
#include <thread>

#include "hqsim/dpm/endpoint.hpp"
#include "hqsim/dpm/release_hook.hpp"
#include "hqsim/qdevice.hpp"
#include "hqsim/splitter.hpp"

namespace hqsim::dpm {

struct SubJobRun {
  SimTime start{0};
  std::optional<SimTime> quantum_release;
  SimTime complete{0};
  std::size_t work_items{0};
  std::vector<qdevice::QuantumResult> executions;
};

// Work item layout used by the driver: 8-byte BE service time, then the program.
inline Bytes encode_work_item(std::int64_t service_time, ByteView program) {
  Bytes out;
  put_be32(out, static_cast<std::uint32_t>(static_cast<std::uint64_t>(service_time) >> 32));
  put_be32(out, static_cast<std::uint32_t>(service_time));
  out.insert(out.end(), program.begin(), program.end());
  return out;
}

inline std::pair<std::int64_t, ByteView> decode_work_item(ByteView item) {
  if (item.size() < 8) throw ProtocolError("work item shorter than its header");
  const auto hi = std::uint64_t{get_be32(item)}, lo = std::uint64_t{get_be32(item.subspan(4))};
  return {static_cast<std::int64_t>((hi << 32) | lo), item.subspan(8)};
}

/// Plays one sub-job on a logical clock starting at `start`: classical phases
/// advance the clock, each quantum phase is a WorkItem round-trip to an
/// in-process client backed by the echo device. After the last quantum block
/// the server shuts the client down, disconnects and cancels it, which
/// records the QuantumRelease; the remaining classical phases follow.
inline SubJobRun run_subjob_protocol(const SubJob& sj, SimTime start) {
  qdevice::LogicalClock clock(start);
  SubJobRun run;
  run.start = start;

  std::size_t last_quantum = sj.phases.size();
  for (std::size_t i = 0; i < sj.phases.size(); ++i)
    if (sj.phases[i].kind == PhaseKind::Quantum) last_quantum = i;

  if (last_quantum == sj.phases.size()) {
    for (const auto& p : sj.phases) clock.sleep_for(p.duration);
    run.complete = clock.now();
    return run;
  }

  InProcTransport transport;
  InMemoryRegistry registry;
  qdevice::EchoDevice<qdevice::LogicalClock> device(clock);
  SimulatedReleaseHook hook(clock);
  hook.register_unit(sj.subjob_id);
  const std::string service = "qpu-" + sj.subjob_id;

  auto server = std::make_unique<DpmServer>(transport, registry, service);
  server->open_and_publish();

  std::exception_ptr client_error;
  std::vector<qdevice::QuantumResult> executions;
  std::thread client_thread([&] {
    try {
      DpmClient client(transport, registry, service);
      client.lookup();
      client.connect();
      client.serve([&](ByteView item) {
        auto [ticks, program] = decode_work_item(item);
        auto r = device.execute({sj.subjob_id, Bytes(program.begin(), program.end()), ticks});
        executions.push_back(r);
        return r.result_payload;
      });
    } catch (...) {
      client_error = std::current_exception();
    }
  });

  try {
    server->accept(deadline_in(std::chrono::seconds(5)));
    for (std::size_t i = 0; i < sj.phases.size(); ++i) {
      const Phase& p = sj.phases[i];
      if (p.kind == PhaseKind::Classical) {
        clock.sleep_for(p.duration);
      } else {
        const Bytes program = to_bytes(p.label);
        const auto h = server->send_work(encode_work_item(p.duration, program));
        const Bytes result = server->wait(h);
        if (result != qdevice::echo_payload(program)) throw ProtocolError("unexpected result payload");
        ++run.work_items;
      }
      if (i == last_quantum) {
        server->shutdown_and_disconnect();
        cancel_client(hook, sj.subjob_id);
        run.quantum_release = hook.events().back().time;
      }
    }
  } catch (...) {
    server.reset();  // closes the connection so the client loop ends
    client_thread.join();
    throw;
  }
  client_thread.join();
  if (client_error) std::rethrow_exception(client_error);
  run.complete = clock.now();
  run.executions = std::move(executions);
  return run;
}

}  // namespace hqsim::dpm

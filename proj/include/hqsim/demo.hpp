#pragma once

#include <signal.h>
#include <stdlib.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hqsim/dpm/endpoint.hpp"
#include "hqsim/dpm/release_hook.hpp"
#include "hqsim/qdevice.hpp"

namespace hqsim {

struct DemoOptions {
  int rounds{10};
  std::size_t payload_bytes{1024};
  int service_ms{5};
  int classical_ms{20};  // overlapping work per round, and the final classical work
  std::string backend{"echo"};
  std::string service_name{"qpu-svc"};
};

namespace detail {

// One write(2) per line so lines from both processes never interleave.
inline void emit_line(const std::string& line) {
  const std::string s = line + "\n";
  std::size_t off = 0;
  while (off < s.size()) {
    const ssize_t n = ::write(STDOUT_FILENO, s.data() + off, s.size() - off);
    if (n <= 0) {
      if (errno == EINTR) continue;
      return;
    }
    off += static_cast<std::size_t>(n);
  }
}

inline dpm::Bytes demo_payload(int round, std::size_t size) {
  dpm::Bytes b(size);
  for (std::size_t i = 0; i < size; ++i) b[i] = static_cast<std::uint8_t>((i * 31 + round * 7) & 0xff);
  return b;
}

// Quantum component: resolve, connect, serve until shut down, then linger
// like an allocated het-group until the scheduler cancels it.
[[noreturn]] inline void demo_client_main(const DemoOptions& opt, const std::filesystem::path& dir,
                                          qdevice::WallClock::Epoch epoch) {
  int code = 0;
  try {
    qdevice::WallClock clock(epoch);
    auto device = qdevice::make_backend(opt.backend, clock);
    dpm::TcpTransport transport;
    dpm::DirectoryRegistry registry(dir);
    dpm::DpmClient client(transport, registry, opt.service_name);
    client.lookup();
    client.connect(dpm::deadline_in(std::chrono::seconds(5)));
    emit_line("event client_connected t_us " + std::to_string(clock.now()));
    int seq = 0;
    client.serve([&](dpm::ByteView item) {
      auto r = device->execute({"round-" + std::to_string(++seq), dpm::Bytes(item.begin(), item.end()),
                                std::int64_t{opt.service_ms} * 1000});
      emit_line("exec " + std::to_string(seq) + " started_us " + std::to_string(r.started) +
                " finished_us " + std::to_string(r.finished));
      return r.result_payload;
    });
    emit_line("event client_disconnected t_us " + std::to_string(clock.now()));
    for (;;) ::pause();
  } catch (const std::exception& e) {
    emit_line(std::string("client error: ") + e.what());
    code = 2;
  }
  ::_exit(code);
}

}  // namespace detail

/// Runs the early-release lifecycle between this process (server, classical
/// side) and a forked client process (quantum side) over TCP loopback. Lines
/// on stdout:
///   round <i> latency_us <n>
///   event <name> t_us <n>
///   exec <i> started_us <n> finished_us <n>     (from the client)
///   lifecycle complete
/// Returns 0 iff the whole lifecycle completed and the client was gone before
/// the server finished its remaining classical work.
inline int run_demo_dpm(const DemoOptions& opt, std::ostream& err = std::cerr) {
  using namespace std::chrono;
  if (opt.rounds < 1 || opt.service_ms < 0 || opt.classical_ms < 1 ||
      opt.payload_bytes > dpm::kMaxPayload - 4) {
    err << "demo-dpm: invalid options\n";
    return 1;
  }
  const auto epoch = steady_clock::now();
  qdevice::WallClock clock(epoch);
  {
    qdevice::WallClock probe;
    (void)qdevice::make_backend(opt.backend, probe);  // rejects unknown names up front
  }

  std::string tmpl = (std::filesystem::temp_directory_path() / "hqsim-dpm-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) {
    err << "demo-dpm: cannot create dpm dir\n";
    return 2;
  }
  const std::filesystem::path dir = tmpl;

  std::cout.flush();
  std::cerr.flush();
  std::fflush(nullptr);
  // The client starts first and retries its lookup until the server publishes.
  const pid_t child = ::fork();
  if (child < 0) {
    err << "demo-dpm: fork failed\n";
    return 2;
  }
  if (child == 0) detail::demo_client_main(opt, dir, epoch);

  int rc = 0;
  dpm::ProcessReleaseHook hook(clock, err);
  hook.register_unit("client", child);
  try {
    dpm::TcpTransport transport;
    dpm::DirectoryRegistry registry(dir);
    dpm::DpmServer server(transport, registry, opt.service_name);
    server.open_and_publish();
    detail::emit_line("event published t_us " + std::to_string(clock.now()));
    server.accept(dpm::deadline_in(seconds(5)));
    detail::emit_line("event connected t_us " + std::to_string(clock.now()));

    for (int round = 1; round <= opt.rounds; ++round) {
      const dpm::Bytes payload = detail::demo_payload(round, opt.payload_bytes);
      const std::int64_t t0 = clock.now();
      const auto h = server.send_work(payload);
      clock.sleep_for(std::int64_t{opt.classical_ms} * 1000 / 4);  // overlapping classical work
      const dpm::Bytes result = server.wait(h, dpm::deadline_in(seconds(5)));
      const std::int64_t latency = clock.now() - t0;
      if (result != qdevice::echo_payload(payload))
        throw dpm::ProtocolError("round " + std::to_string(round) + ": wrong result payload");
      detail::emit_line("round " + std::to_string(round) + " latency_us " + std::to_string(latency));
    }

    server.shutdown_and_disconnect(dpm::deadline_in(seconds(5)));
    detail::emit_line("event disconnected t_us " + std::to_string(clock.now()));
    detail::emit_line("event quantum_release t_us " + std::to_string(clock.now()));
    dpm::cancel_client(hook, "client");
    const auto term = *hook.termination("client");
    detail::emit_line("event client_terminated t_us " + std::to_string(term.time));
    const bool clean = (WIFSIGNALED(term.status) && WTERMSIG(term.status) == SIGTERM) ||
                       (WIFEXITED(term.status) && WEXITSTATUS(term.status) == 0);
    if (!clean) throw dpm::DpmError("client exited abnormally");

    clock.sleep_for(std::int64_t{opt.classical_ms} * 1000);  // remaining classical work
    const std::int64_t done = clock.now();
    detail::emit_line("event final_work_done t_us " + std::to_string(done));
    if (!(term.time < done)) throw dpm::DpmError("client outlived the classical work");
    detail::emit_line("lifecycle complete");
  } catch (const std::exception& e) {
    err << "demo-dpm: " << e.what() << '\n';
    if (!hook.termination("client")) {
      ::kill(child, SIGKILL);
      ::waitpid(child, nullptr, 0);
    }
    rc = 2;
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return rc;
}

}  // namespace hqsim

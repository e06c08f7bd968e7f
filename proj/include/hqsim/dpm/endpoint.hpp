#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>

#include "hqsim/dpm/registry.hpp"
#include "hqsim/dpm/session.hpp"
#include "hqsim/dpm/transport.hpp"

namespace hqsim::dpm {

/// API misuse: waiting twice, disconnecting with pending receives, ...
class UsageError : public DpmError {
 public:
  using DpmError::DpmError;
};
class NotConnected : public DpmError {
 public:
  using DpmError::DpmError;
};

/// Non-blocking receive posted for the Result of one WorkItem.
struct ReceiveHandle {
  std::uint32_t seq{0};
  auto operator<=>(const ReceiveHandle&) const = default;
};

/// Classical side. Owns the port, sends work items and collects results.
class DpmServer {
 public:
  DpmServer(Transport& transport, NameRegistry& registry, std::string service_name)
      : transport_(transport), registry_(registry), name_(std::move(service_name)) {}

  DpmServer(const DpmServer&) = delete;
  DpmServer& operator=(const DpmServer&) = delete;

  ~DpmServer() {
    if (published_) {
      try {
        registry_.unpublish(name_);
      } catch (...) {
      }
    }
  }

  SessionState state() const { return machine_.state(); }
  const std::string& port() const { return port_; }
  std::size_t pending_receives() const { return outstanding_.size(); }

  /// Open a port and publish it under the service name.
  void open_and_publish() {
    if (machine_.state() != SessionState::Init) throw UsageError("server already published");
    acceptor_ = transport_.listen();
    port_ = acceptor_->endpoint();
    registry_.publish(name_, port_);
    published_ = true;
    machine_.apply(Frame{FrameType::Publish, to_bytes(name_ + "\n" + port_)});
  }

  /// Waits for a client Connect and answers with Accept. On timeout the
  /// server stays Published and may accept again.
  void accept(Deadline deadline = std::nullopt) {
    if (machine_.state() != SessionState::Published) throw UsageError("server is not published");
    auto stream = acceptor_->accept(deadline);
    auto framed = std::make_unique<FramedStream>(std::move(stream));
    const Frame hello = framed->receive(deadline);
    if (hello.type != FrameType::Connect)
      throw ProtocolError("expected Connect, got " + std::string(to_string(hello.type)));
    machine_.apply(hello);
    const Frame reply{FrameType::Accept, {}};
    machine_.apply(reply);
    framed->send(reply);
    conn_ = std::move(framed);
  }

  /// Sends one work item and returns the receive handle for its result. The
  /// caller may do unrelated work before wait().
  ReceiveHandle send_work(ByteView item) {
    require_connected();
    const Frame f{FrameType::WorkItem, with_seq(machine_.next_seq(), item)};
    machine_.apply(f);
    const ReceiveHandle h{*seq_of(f)};
    outstanding_.insert(h);
    send(f);
    return h;
  }

  /// Blocks until the Result for `h` arrives. Results that arrive for other
  /// handles are buffered, so waiting on an already delivered handle returns
  /// immediately.
  Bytes wait(ReceiveHandle h, Deadline deadline = std::nullopt) {
    if (!outstanding_.count(h))
      throw UsageError("handle " + std::to_string(h.seq) + " is not outstanding");
    while (!arrived_.count(h)) {
      require_connected();
      Frame f = receive(deadline);
      if (f.type != FrameType::Result)
        throw ProtocolError("expected Result, got " + std::string(to_string(f.type)));
      machine_.apply(f);
      arrived_[ReceiveHandle{*seq_of(f)}] = Bytes(body_of(f).begin(), body_of(f).end());
    }
    Bytes out = std::move(arrived_.at(h));
    arrived_.erase(h);
    outstanding_.erase(h);
    return out;
  }

  /// Stops the client's listener loop, waits for its Disconnect, then
  /// unpublishes the name and closes the port. A second call is a no-op.
  void shutdown_and_disconnect(Deadline deadline = std::nullopt) {
    if (machine_.state() == SessionState::Disconnected && !broken_) return;
    require_connected();
    if (!outstanding_.empty())
      throw UsageError(std::to_string(outstanding_.size()) + " receive(s) still pending");
    const Frame shutdown{FrameType::Shutdown, {}};
    machine_.apply(shutdown);
    send(shutdown);
    for (;;) {
      Frame f = receive(deadline);
      machine_.apply(f);
      if (f.type == FrameType::Disconnect) break;
    }
    conn_->close();
    conn_.reset();
    registry_.unpublish(name_);
    published_ = false;
    acceptor_.reset();
  }

 private:
  void require_connected() const {
    if (broken_) throw BrokenSession("session was torn down");
    if (machine_.state() != SessionState::Connected)
      throw NotConnected("server is " + std::string(to_string(machine_.state())));
  }

  void send(const Frame& f) {
    try {
      conn_->send(f);
    } catch (const BrokenSession&) {
      broken_ = true;
      throw;
    }
  }

  Frame receive(Deadline deadline) {
    try {
      return conn_->receive(deadline);
    } catch (const BrokenSession&) {
      broken_ = true;
      throw;
    }
  }

  Transport& transport_;
  NameRegistry& registry_;
  std::string name_;
  std::string port_;
  std::unique_ptr<Acceptor> acceptor_;
  std::unique_ptr<FramedStream> conn_;
  SessionMachine machine_{Role::Server};
  std::set<ReceiveHandle> outstanding_;
  std::map<ReceiveHandle, Bytes> arrived_;
  bool published_{false};
  bool broken_{false};
};

struct LookupPolicy {
  int retries{50};
  std::chrono::milliseconds interval{100};
};

/// Quantum side. Resolves the service name, connects, and runs the listener
/// loop until the server shuts it down.
class DpmClient {
 public:
  using WorkHandler = std::function<Bytes(ByteView)>;

  DpmClient(Transport& transport, NameRegistry& registry, std::string service_name)
      : transport_(transport), registry_(registry), name_(std::move(service_name)) {}

  SessionState state() const { return machine_.state(); }

  /// Resolves the name, retrying while it is not yet published.
  std::string lookup(const LookupPolicy& policy = {}) {
    for (int attempt = 0;; ++attempt) {
      machine_.apply(Frame{FrameType::Lookup, to_bytes(name_)});
      const auto port = registry_.try_lookup(name_);
      machine_.apply(Frame{FrameType::LookupReply, port ? to_bytes(*port) : Bytes{}});
      if (port) return port_ = *port;
      if (attempt >= policy.retries)
        throw NameNotFound("name '" + name_ + "' not published after " +
                           std::to_string(policy.retries) + " retries");
      std::this_thread::sleep_for(policy.interval);
    }
  }

  void connect(Deadline deadline = std::nullopt) {
    if (machine_.state() != SessionState::LookedUp) throw UsageError("client has not looked up a port");
    auto framed = std::make_unique<FramedStream>(transport_.connect(port_, deadline));
    const Frame hello{FrameType::Connect, {}};
    machine_.apply(hello);
    framed->send(hello);
    const Frame reply = framed->receive(deadline);
    if (reply.type != FrameType::Accept)
      throw ProtocolError("expected Accept, got " + std::string(to_string(reply.type)));
    machine_.apply(reply);
    conn_ = std::move(framed);
  }

  /// Listener loop: executes each WorkItem with `handler` and sends back the
  /// Result. Returns the number of items served once the server sends
  /// Shutdown; the client then answers Disconnect.
  std::size_t serve(const WorkHandler& handler) {
    if (machine_.state() != SessionState::Connected) throw NotConnected("client is not connected");
    std::size_t served = 0;
    for (;;) {
      const Frame f = conn_->receive();
      machine_.apply(f);
      if (f.type == FrameType::Shutdown) break;
      if (f.type != FrameType::WorkItem)
        throw ProtocolError("unexpected " + std::string(to_string(f.type)) + " in listener loop");
      const Frame result{FrameType::Result, with_seq(*seq_of(f), handler(body_of(f)))};
      machine_.apply(result);
      conn_->send(result);
      ++served;
    }
    const Frame bye{FrameType::Disconnect, {}};
    machine_.apply(bye);
    conn_->send(bye);
    conn_->close();
    conn_.reset();
    return served;
  }

  /// Drops the connection without any protocol exchange (process killed).
  void abort() {
    if (conn_) conn_->close();
  }

 private:
  Transport& transport_;
  NameRegistry& registry_;
  std::string name_;
  std::string port_;
  std::unique_ptr<FramedStream> conn_;
  SessionMachine machine_{Role::Client};
};

}  // namespace hqsim::dpm

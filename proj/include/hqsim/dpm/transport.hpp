#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "hqsim/dpm/frame.hpp"
#include "hqsim/dpm/session.hpp"

namespace hqsim::dpm {

using Clock = std::chrono::steady_clock;
using Deadline = std::optional<Clock::time_point>;

inline Deadline deadline_in(std::chrono::milliseconds d) { return Clock::now() + d; }

class TimeoutError : public DpmError {
 public:
  using DpmError::DpmError;
};
/// Peer went away (closed, killed) while the session was live.
class BrokenSession : public DpmError {
 public:
  using DpmError::DpmError;
};
/// Nothing listening at the endpoint; the caller may retry.
class ConnectionRefused : public DpmError {
 public:
  using DpmError::DpmError;
};

/// Bidirectional byte stream. read_some returns 0 at end of stream and throws
/// TimeoutError when the deadline passes first.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write(ByteView data) = 0;
  virtual std::size_t read_some(std::span<std::uint8_t> out, Deadline deadline) = 0;
  virtual void close() = 0;
};

class Acceptor {
 public:
  virtual ~Acceptor() = default;
  virtual std::string endpoint() const = 0;
  virtual std::unique_ptr<ByteStream> accept(Deadline deadline) = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::unique_ptr<Acceptor> listen() = 0;
  virtual std::unique_ptr<ByteStream> connect(const std::string& endpoint, Deadline deadline) = 0;
};

// ---------------------------------------------------------------------------
// In-process transport

namespace detail {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed{false};
};

class InProcStream final : public ByteStream {
 public:
  InProcStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~InProcStream() override { close(); }

  void write(ByteView data) override {
    std::lock_guard lk(out_->mu);
    if (out_->closed) throw BrokenSession("in-process peer closed");
    out_->data.insert(out_->data.end(), data.begin(), data.end());
    out_->cv.notify_all();
  }

  std::size_t read_some(std::span<std::uint8_t> buf, Deadline deadline) override {
    std::unique_lock lk(in_->mu);
    auto ready = [&] { return !in_->data.empty() || in_->closed; };
    if (deadline) {
      if (!in_->cv.wait_until(lk, *deadline, ready)) throw TimeoutError("read timed out");
    } else {
      in_->cv.wait(lk, ready);
    }
    const std::size_t n = std::min(buf.size(), in_->data.size());
    std::copy_n(in_->data.begin(), n, buf.begin());
    in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() override {
    for (auto* p : {in_.get(), out_.get()}) {
      std::lock_guard lk(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

struct ListenQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<ByteStream>> pending;
  bool closed{false};
};

}  // namespace detail

/// Endpoints "inproc://<n>" valid within one process; shared by the server
/// and client threads of a test.
class InProcTransport final : public Transport {
 public:
  std::unique_ptr<Acceptor> listen() override {
    auto q = std::make_shared<detail::ListenQueue>();
    std::lock_guard lk(mu_);
    std::string ep = "inproc://" + std::to_string(++counter_);
    listeners_[ep] = q;
    return std::make_unique<InProcAcceptor>(this, ep, std::move(q));
  }

  std::unique_ptr<ByteStream> connect(const std::string& endpoint, Deadline) override {
    std::shared_ptr<detail::ListenQueue> q;
    {
      std::lock_guard lk(mu_);
      auto it = listeners_.find(endpoint);
      if (it == listeners_.end()) throw ConnectionRefused("no listener at " + endpoint);
      q = it->second;
    }
    auto a = std::make_shared<detail::Pipe>(), b = std::make_shared<detail::Pipe>();
    std::lock_guard lk(q->mu);
    if (q->closed) throw ConnectionRefused("listener at " + endpoint + " closed");
    q->pending.push_back(std::make_unique<detail::InProcStream>(a, b));
    q->cv.notify_all();
    return std::make_unique<detail::InProcStream>(b, a);
  }

 private:
  class InProcAcceptor final : public Acceptor {
   public:
    InProcAcceptor(InProcTransport* owner, std::string ep, std::shared_ptr<detail::ListenQueue> q)
        : owner_(owner), ep_(std::move(ep)), q_(std::move(q)) {}
    ~InProcAcceptor() override {
      {
        std::lock_guard lk(owner_->mu_);
        owner_->listeners_.erase(ep_);
      }
      std::lock_guard lk(q_->mu);
      q_->closed = true;
    }
    std::string endpoint() const override { return ep_; }
    std::unique_ptr<ByteStream> accept(Deadline deadline) override {
      std::unique_lock lk(q_->mu);
      auto ready = [&] { return !q_->pending.empty(); };
      if (deadline) {
        if (!q_->cv.wait_until(lk, *deadline, ready)) throw TimeoutError("accept timed out");
      } else {
        q_->cv.wait(lk, ready);
      }
      auto s = std::move(q_->pending.front());
      q_->pending.pop_front();
      return s;
    }

   private:
    InProcTransport* owner_;
    std::string ep_;
    std::shared_ptr<detail::ListenQueue> q_;
  };

  std::mutex mu_;
  int counter_{0};
  std::map<std::string, std::shared_ptr<detail::ListenQueue>> listeners_;
};

// ---------------------------------------------------------------------------
// TCP loopback transport

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_{-1};
};

inline std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

/// Waits for `events` on fd until the deadline. False on timeout.
inline bool wait_fd(int fd, short events, Deadline deadline) {
  for (;;) {
    int timeout_ms = -1;
    if (deadline) {
      auto left = std::chrono::ceil<std::chrono::milliseconds>(*deadline - Clock::now());
      timeout_ms = static_cast<int>(std::max<std::int64_t>(0, left.count()));
    }
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, timeout_ms);
    if (rc > 0) return true;
    if (rc == 0) {
      if (deadline && Clock::now() < *deadline) continue;
      return false;
    }
    if (errno != EINTR) throw DpmError(errno_text("poll"));
  }
}

class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {
    int one = 1;
    ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  void write(ByteView data) override {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_.get(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EPIPE || errno == ECONNRESET) throw BrokenSession("peer closed the socket");
        throw DpmError(errno_text("send"));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::size_t read_some(std::span<std::uint8_t> buf, Deadline deadline) override {
    if (fd_.get() < 0) return 0;
    if (!wait_fd(fd_.get(), POLLIN, deadline)) throw TimeoutError("read timed out");
    for (;;) {
      const ssize_t n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) return 0;
      throw DpmError(errno_text("recv"));
    }
  }

  void close() override { fd_.reset(); }

 private:
  Fd fd_;
};

}  // namespace detail

/// Endpoints "tcp://127.0.0.1:<port>" on the loopback interface.
class TcpTransport final : public Transport {
 public:
  std::unique_ptr<Acceptor> listen() override {
    detail::Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (fd.get() < 0) throw DpmError(detail::errno_text("socket"));
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
      throw DpmError(detail::errno_text("bind"));
    if (::listen(fd.get(), 4) < 0) throw DpmError(detail::errno_text("listen"));
    socklen_t len = sizeof addr;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    return std::make_unique<TcpAcceptor>(std::move(fd), ntohs(addr.sin_port));
  }

  std::unique_ptr<ByteStream> connect(const std::string& endpoint, Deadline) override {
    const std::string prefix = "tcp://127.0.0.1:";
    if (!endpoint.starts_with(prefix)) throw DpmError("unsupported endpoint " + endpoint);
    const int port = std::stoi(endpoint.substr(prefix.size()));
    detail::Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (fd.get() < 0) throw DpmError(detail::errno_text("socket"));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      if (errno == ECONNREFUSED) throw ConnectionRefused("nothing listening at " + endpoint);
      throw DpmError(detail::errno_text("connect"));
    }
    return std::make_unique<detail::TcpStream>(std::move(fd));
  }

 private:
  class TcpAcceptor final : public Acceptor {
   public:
    TcpAcceptor(detail::Fd fd, int port) : fd_(std::move(fd)), port_(port) {}
    std::string endpoint() const override { return "tcp://127.0.0.1:" + std::to_string(port_); }
    std::unique_ptr<ByteStream> accept(Deadline deadline) override {
      if (!detail::wait_fd(fd_.get(), POLLIN, deadline)) throw TimeoutError("accept timed out");
      detail::Fd c(::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC));
      if (c.get() < 0) throw DpmError(detail::errno_text("accept"));
      return std::make_unique<detail::TcpStream>(std::move(c));
    }

   private:
    detail::Fd fd_;
    int port_;
  };
};

// ---------------------------------------------------------------------------

/// Frame-level view of a byte stream.
class FramedStream {
 public:
  explicit FramedStream(std::unique_ptr<ByteStream> s) : stream_(std::move(s)) {}

  void send(const Frame& f) { stream_->write(encode(f)); }

  /// Next frame; throws BrokenSession at end of stream.
  Frame receive(Deadline deadline = std::nullopt) {
    std::uint8_t buf[64 * 1024];
    for (;;) {
      if (auto f = decoder_.next()) return *std::move(f);
      const std::size_t n = stream_->read_some(buf, deadline);
      if (n == 0) throw BrokenSession("peer closed the connection");
      decoder_.feed(ByteView(buf, n));
    }
  }

  void close() { stream_->close(); }

 private:
  std::unique_ptr<ByteStream> stream_;
  FrameDecoder decoder_;
};

}  // namespace hqsim::dpm

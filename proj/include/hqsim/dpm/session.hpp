#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>

#include "hqsim/dpm/frame.hpp"

namespace hqsim::dpm {

class DpmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Frame not allowed in the current session state.
class ProtocolError : public DpmError {
 public:
  using DpmError::DpmError;
};

enum class Role { Server, Client };

enum class SessionState { Init, Published, LookedUp, Connected, Draining, Disconnected };

inline std::string_view to_string(Role r) { return r == Role::Server ? "server" : "client"; }

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Init: return "Init";
    case SessionState::Published: return "Published";
    case SessionState::LookedUp: return "LookedUp";
    case SessionState::Connected: return "Connected";
    case SessionState::Draining: return "Draining";
    case SessionState::Disconnected: return "Disconnected";
  }
  return "?";
}

/// Connection lifecycle of one endpoint, driven by the frames it sends or
/// receives. The direction of every frame type is fixed by the role:
///
///   server: Init -Publish-> Published -Connect,Accept-> Connected
///           -WorkItem/Result...-> Connected -Shutdown-> Draining
///           -Disconnect-> Disconnected
///   client: Init -Lookup,LookupReply-> LookedUp -Connect,Accept-> Connected
///           -WorkItem/Result...,Shutdown-> Connected -Disconnect-> Disconnected
///
/// WorkItems are numbered 1, 2, ... and Results must answer the oldest
/// outstanding WorkItem. A rejected frame leaves the machine untouched.
class SessionMachine {
 public:
  explicit SessionMachine(Role role) : role_(role) {}

  Role role() const { return role_; }
  SessionState state() const { return state_; }
  std::size_t in_flight() const { return in_flight_.size(); }
  std::uint32_t next_seq() const { return next_seq_; }
  bool shutdown_seen() const { return shutdown_seen_; }

  void apply(const Frame& f) {
    SessionMachine next = *this;
    if (auto why = next.step(f); !why.empty())
      throw ProtocolError(std::string(to_string(role_)) + " in " +
                          std::string(to_string(state_)) + ": " + std::string(to_string(f.type)) +
                          " rejected (" + why + ")");
    *this = std::move(next);
  }

  bool accepts(const Frame& f) const {
    SessionMachine copy = *this;
    return copy.step(f).empty();
  }

 private:
  // Returns an empty string on success, otherwise the reason for rejection.
  std::string step(const Frame& f) {
    using S = SessionState;
    using T = FrameType;
    const T t = f.type;
    if (state_ == S::Disconnected) return "session is disconnected";

    if (t == T::WorkItem || t == T::Result) {
      if (state_ != S::Connected) return "work frames need a connected session";
      auto seq = seq_of(f);
      if (!seq) return "missing sequence number";
      if (t == T::WorkItem) {
        if (shutdown_seen_) return "listener already shut down";
        if (*seq != next_seq_) return "unexpected sequence number";
        in_flight_.push_back(*seq);
        ++next_seq_;
      } else {
        if (in_flight_.empty()) return "no outstanding work item";
        if (*seq != in_flight_.front()) return "result does not match oldest work item";
        in_flight_.pop_front();
      }
      return {};
    }

    if (role_ == Role::Server) {
      switch (t) {
        case T::Publish:
          if (state_ != S::Init) return "already published";
          state_ = S::Published;
          return {};
        case T::Connect:
          if (state_ != S::Published) return "not accepting";
          return {};
        case T::Accept:
          if (state_ != S::Published) return "not accepting";
          state_ = S::Connected;
          return {};
        case T::Shutdown:
          if (state_ != S::Connected) return "not connected";
          if (!in_flight_.empty()) return "receives still pending";
          state_ = S::Draining;
          return {};
        case T::Disconnect:
          if (state_ != S::Draining) return "client listener not shut down";
          state_ = S::Disconnected;
          return {};
        default:
          return "frame type not used by the server";
      }
    }

    switch (t) {
      case T::Lookup:
        if (state_ != S::Init) return "lookup after resolution";
        lookup_sent_ = true;
        return {};
      case T::LookupReply:
        if (state_ != S::Init || !lookup_sent_) return "no lookup outstanding";
        lookup_sent_ = false;
        if (!f.payload.empty()) state_ = S::LookedUp;  // empty reply: name not found
        return {};
      case T::Connect:
        if (state_ != S::LookedUp) return "port not resolved";
        return {};
      case T::Accept:
        if (state_ != S::LookedUp) return "not connecting";
        state_ = S::Connected;
        return {};
      case T::Shutdown:
        if (state_ != S::Connected) return "not connected";
        shutdown_seen_ = true;
        return {};
      case T::Disconnect:
        if (state_ != S::Connected) return "not connected";
        if (!in_flight_.empty()) return "results still pending";
        if (!shutdown_seen_) return "listener not shut down by server";
        state_ = S::Disconnected;
        return {};
      default:
        return "frame type not used by the client";
    }
  }

  Role role_;
  SessionState state_{SessionState::Init};
  std::deque<std::uint32_t> in_flight_;
  std::uint32_t next_seq_{1};
  bool lookup_sent_{false};
  bool shutdown_seen_{false};
};

}  // namespace hqsim::dpm

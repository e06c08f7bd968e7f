#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hqsim/dpm/session.hpp"

namespace hqsim::gen {

using namespace hqsim::dpm;

using S = SessionState;
using T = FrameType;

// Reference protocol model: an edge table plus the sequence-number rules.
struct Model {
  explicit Model(Role r) : role(r) {}
  Role role;
  S state{S::Init};
  std::uint32_t next{1};
  std::deque<std::uint32_t> in_flight;
  bool lookup_pending{false};
  bool shutdown{false};

  bool step(const Frame& f) {
    static const std::map<std::tuple<Role, S, T>, S> edges = {
        {{Role::Server, S::Init, T::Publish}, S::Published},
        {{Role::Server, S::Published, T::Connect}, S::Published},
        {{Role::Server, S::Published, T::Accept}, S::Connected},
        {{Role::Server, S::Connected, T::WorkItem}, S::Connected},
        {{Role::Server, S::Connected, T::Result}, S::Connected},
        {{Role::Server, S::Connected, T::Shutdown}, S::Draining},
        {{Role::Server, S::Draining, T::Disconnect}, S::Disconnected},
        {{Role::Client, S::Init, T::Lookup}, S::Init},
        {{Role::Client, S::Init, T::LookupReply}, S::LookedUp},
        {{Role::Client, S::LookedUp, T::Connect}, S::LookedUp},
        {{Role::Client, S::LookedUp, T::Accept}, S::Connected},
        {{Role::Client, S::Connected, T::WorkItem}, S::Connected},
        {{Role::Client, S::Connected, T::Result}, S::Connected},
        {{Role::Client, S::Connected, T::Shutdown}, S::Connected},
        {{Role::Client, S::Connected, T::Disconnect}, S::Disconnected},
    };
    auto it = edges.find({role, state, f.type});
    if (it == edges.end()) return false;
    S to = it->second;
    const std::optional<std::uint32_t> seq =
        f.payload.size() >= 4 ? std::optional<std::uint32_t>(get_be32(f.payload)) : std::nullopt;
    switch (f.type) {
      case T::WorkItem:
        if (!seq || *seq != next || shutdown) return false;
        ++next;
        in_flight.push_back(*seq);
        break;
      case T::Result:
        if (!seq || in_flight.empty() || in_flight.front() != *seq) return false;
        in_flight.pop_front();
        break;
      case T::Lookup:
        lookup_pending = true;
        break;
      case T::LookupReply:
        if (!lookup_pending) return false;
        lookup_pending = false;
        if (f.payload.empty()) to = S::Init;
        break;
      case T::Shutdown:
        if (role == Role::Server && !in_flight.empty()) return false;
        if (role == Role::Client) shutdown = true;
        break;
      case T::Disconnect:
        if (role == Role::Client && (!in_flight.empty() || !shutdown)) return false;
        break;
      default:
        break;
    }
    state = to;
    return true;
  }
};

inline std::vector<Frame> alphabet() {
  return {
      {T::Publish, to_bytes("svc\ninproc://1")},
      {T::Lookup, to_bytes("svc")},
      {T::LookupReply, to_bytes("inproc://1")},
      {T::LookupReply, {}},
      {T::Connect, {}},
      {T::Accept, {}},
      {T::WorkItem, with_seq(1, to_bytes("a"))},
      {T::WorkItem, with_seq(2, to_bytes("b"))},
      {T::WorkItem, {0, 1}},
      {T::Result, with_seq(1, to_bytes("a"))},
      {T::Result, with_seq(2, to_bytes("b"))},
      {T::Shutdown, {}},
      {T::Disconnect, {}},
  };
}

/// Walks every frame sequence up to `depth`, checking the machine against
/// the reference model at each step. Disagreements land in `violations`.
struct Explorer {
  std::vector<Frame> sigma = alphabet();
  std::size_t transitions{0};
  std::set<S> reached;
  std::vector<SessionMachine> frontier_states;
  std::vector<std::string> violations;

  void run(const SessionMachine& m, const Model& ref, int depth) {
    reached.insert(m.state());
    frontier_states.push_back(m);
    if (depth == 0) return;
    for (const Frame& f : sigma) {
      SessionMachine next = m;
      Model ref_next = ref;
      const bool legal = ref_next.step(f);
      ++transitions;
      const std::string where = std::string(to_string(m.role())) + " in " + std::string(to_string(m.state())) +
                                " on " + std::string(to_string(f.type)) + ": ";
      if (next.accepts(f) != legal) {
        violations.push_back(where + (legal ? "legal frame rejected" : "illegal frame accepted"));
        continue;
      }
      if (legal) {
        next.apply(f);
        if (next.state() != ref_next.state || next.in_flight() != ref_next.in_flight.size()) {
          violations.push_back(where + "state differs from the reference");
          continue;
        }
        run(next, ref_next, depth - 1);
      } else {
        bool threw = false;
        try {
          next.apply(f);
        } catch (const ProtocolError&) {
          threw = true;
        }
        if (!threw || next.state() != m.state() || next.in_flight() != m.in_flight() ||
            next.next_seq() != m.next_seq())
          violations.push_back(where + "rejection did not leave the session unchanged");
      }
    }
  }
};

// True if some continuation of at most `depth` legal frames reaches Disconnected.
inline bool can_finish(const SessionMachine& m, const std::vector<Frame>& sigma, int depth) {
  if (m.state() == S::Disconnected) return true;
  if (depth == 0) return false;
  for (const Frame& f : sigma) {
    if (!m.accepts(f)) continue;
    SessionMachine next = m;
    next.apply(f);
    if (can_finish(next, sigma, depth - 1)) return true;
  }
  return false;
}

}  // namespace hqsim::gen

// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "collsim/simtime.hpp"

namespace collsim {

enum class GoalOpKind : std::uint8_t { Send = 0, Recv, Calc };

struct GoalOp {
  std::int64_t label = 0;
  GoalOpKind kind = GoalOpKind::Calc;
  Bytes bytes = 0;          // send/recv payload on the wire
  std::int64_t durationNs = 0;  // calc only, integer nanoseconds
  Rank peer = -1;
  std::int64_t tag = 0;

  bool operator==(const GoalOp&) const = default;
};

struct GoalRankBlock {
  Rank rank = 0;
  std::vector<GoalOp> ops;
  std::vector<std::pair<std::int64_t, std::int64_t>> deps;  // a requires b

  bool operator==(const GoalRankBlock&) const = default;
};

/// Dependency-graph schedule of send/recv/calc operations, one block per
/// rank. Sends and recvs match one-to-one on (src, dst, tag).
struct GoalProgram {
  Rank nRanks = 0;
  std::vector<GoalRankBlock> ranks;

  bool operator==(const GoalProgram&) const = default;
};

/// Serializes a planned run. With a timeline the emitted arcs reproduce the
/// engine's realized gates exactly; without one the run is simulated first.
GoalProgram emit_goal(const Schedule& schedule, const ClusterSpec& cluster,
                      const SimConfig& cfg, const Timeline* timeline = nullptr);

std::string serialize_goal(const GoalProgram& p);
GoalProgram parse_goal(const std::string& text);

std::string goal_to_json(const GoalProgram& p);
GoalProgram goal_from_json(const std::string& json);

/// Topological executor over the program alone: calc entries take their
/// duration, a recv completes when its matching send has completed. Returns
/// the replayed makespan in seconds. Throws on cycles or unmatched traffic.
Seconds replay_goal(const GoalProgram& p);

/// Structural checks: unique labels, resolvable deps, perfect send/recv
/// matching, acyclic graph. Throws std::invalid_argument on violations.
void validate_goal(const GoalProgram& p);

}  // namespace collsim

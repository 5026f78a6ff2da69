// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "collsim/schedule.hpp"
#include "collsim/topology.hpp"

namespace collsim {

/// Knobs of one simulation run. Latency overrides are per (protocol, link
/// class); negative entries fall back to the protocol's default.
struct SimConfig {
  int nChannels = 2;
  int nSlots = 8;
  Thresholds thresholds;
  bool overlapPhases = true;
  bool ll128Supported = true;
  std::array<std::array<Seconds, 2>, 3> hopLatencyOverride = {
      std::array<Seconds, 2>{-1.0, -1.0}, std::array<Seconds, 2>{-1.0, -1.0},
      std::array<Seconds, 2>{-1.0, -1.0}};

  Seconds hopLatency(const ProtocolParams& proto, LinkClass c) const {
    const Seconds o = hopLatencyOverride[static_cast<std::size_t>(proto.kind)]
                                        [static_cast<std::size_t>(c)];
    return o >= 0.0 ? o : proto.hopLatency;
  }

  void validate() const;
};

enum class EventKind : std::uint8_t { SendPost = 0, RecvComplete, ReduceDone, CopyDone };

struct Event {
  Rank rank = 0;
  std::int32_t channelId = 0;
  std::int32_t loopIndex = 0;
  std::int32_t stepIndex = 0;
  EventKind kind = EventKind::SendPost;
  Seconds start = 0.0;
  Seconds end = 0.0;
  Bytes bytesOnWire = 0;
  Rank peer = -1;
};

enum class GateKind : std::uint8_t { None = 0, Stream, Dep, Slot, LoopBarrier };

/// Engine-internal times of one chunk step. The step acquires its inputs at
/// `acquire` (freeing the upstream FIFO slots), may then stall for a free
/// slot of its own until `start`, holds its stream busy until `release`, and
/// its output is visible to consumers at `completion` (hop latency and the
/// rendezvous control term ride on top of the wire occupancy).
struct StepTiming {
  Seconds acquire = 0.0;
  Seconds start = 0.0;
  Seconds release = 0.0;
  Seconds completion = 0.0;
  std::int32_t acquirePred = -1;  // argmax gate of `acquire`
  GateKind acquireGate = GateKind::None;
  std::int32_t slotPred = -1;  // consumer whose acquire freed this step's slot
};

struct Timeline {
  std::vector<Event> events;
  std::vector<Seconds> perRankFinish;
  Seconds makespan = 0.0;

  // Engine internals kept for critical-path queries and GOAL emission.
  std::vector<StepTiming> stepTimings;
  std::vector<std::int32_t> loopBarrierArgmax;  // per step, resolved barrier source
  std::int32_t finishStep = -1;
};

Seconds step_duration(const ProtocolParams& proto, Bytes payloadBytes,
                      const LinkParams& link);

Timeline simulate(const Schedule& schedule, const ClusterSpec& cluster,
                  const SimConfig& cfg);

/// A dependency chain of events whose segment durations tile [0, makespan].
std::vector<Event> critical_path(const Timeline& t);
std::vector<Event> critical_path(const Timeline& t, const Schedule& schedule);

/// Wire bytes crossing node boundaries, summed from the event log.
Bytes internode_bytes(const Timeline& t, const ClusterSpec& cluster);

}  // namespace collsim

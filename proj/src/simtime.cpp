// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/simtime.hpp"

#include <algorithm>
#include <map>
#include <queue>

namespace collsim {

void SimConfig::validate() const {
  if (nChannels < 1) throw std::invalid_argument("config: nChannels must be >= 1");
  if (nSlots < 1) throw std::invalid_argument("config: nSlots must be >= 1");
  if (thresholds.protoSmall <= 0 || thresholds.protoLarge <= 0 ||
      thresholds.treeThreshold <= 0)
    throw std::invalid_argument("config: thresholds must be positive");
  if (thresholds.protoSmall > thresholds.protoLarge)
    throw std::invalid_argument("config: protocol thresholds must be ordered small <= large");
}

Seconds step_duration(const ProtocolParams& proto, Bytes payloadBytes,
                      const LinkParams& link) {
  if (payloadBytes < 0) throw std::invalid_argument("step_duration: negative payload");
  return proto.hopLatency + link.alphaControl +
         static_cast<double>(wire_bytes(proto, payloadBytes)) / link.bandwidth;
}

namespace {

struct Gate {
  Seconds value = 0.0;
  std::int32_t pred = -1;
  GateKind kind = GateKind::None;

  void raise(Seconds v, std::int32_t p, GateKind k) {
    if (v > value) {
      value = v;
      pred = p;
      kind = k;
    }
  }
};

}  // namespace

Timeline simulate(const Schedule& schedule, const ClusterSpec& cluster,
                  const SimConfig& cfg) {
  cluster.validate();
  cfg.validate();
  const auto n = schedule.steps.size();

  Timeline t;
  t.perRankFinish.assign(static_cast<std::size_t>(schedule.nRanks), 0.0);
  t.stepTimings.resize(n);
  t.loopBarrierArgmax.assign(n, -1);
  if (n == 0) return t;

  // Two evaluation phases per step: node i is the acquire phase (inputs
  // consumed, upstream slots freed), node i+n the post phase (own slot
  // secured, wire occupied). Splitting them keeps full ring pipelines
  // acyclic: a receiver frees the upstream slot even while it still waits
  // for downstream space.
  std::vector<std::vector<std::int32_t>> dependents(2 * n);
  std::vector<int> inDeg(2 * n, 0);
  auto add_edge = [&](std::int32_t from, std::int32_t to) {
    dependents[static_cast<std::size_t>(from)].push_back(to);
    ++inDeg[static_cast<std::size_t>(to)];
  };
  const auto nn = static_cast<std::int32_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ChunkStep& s = schedule.steps[i];
    const auto id = static_cast<std::int32_t>(i);
    if (s.streamPred >= 0) add_edge(s.streamPred + nn, id);  // release gates acquire
    for (std::size_t j = 0; j < s.recvDeps.size(); ++j) add_edge(s.recvDeps[j] + nn, id);
    add_edge(id, id + nn);
    for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
      const FifoRef& f = s.sendFifo[j];
      if (f.pos >= schedule.proto.nSlots) {
        const FifoEntry& freed = schedule.fifos[static_cast<std::size_t>(f.fifoId)]
            [static_cast<std::size_t>(f.pos - schedule.proto.nSlots)];
        if (freed.consumerId < 0)
          throw std::logic_error("simulate: FIFO entry without consumer");
        add_edge(freed.consumerId, id + nn);  // consumer acquire frees the slot
      }
    }
  }

  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < 2 * n; ++i)
    if (inDeg[i] == 0) ready.push(static_cast<std::int32_t>(i));

  // Max completion per (rank, channel, loop), feeding the non-pipelined
  // barrier: loop l+1's step 0 may not start before loop l fully ends.
  std::map<std::tuple<Rank, std::int32_t, std::int32_t>, std::pair<Seconds, std::int32_t>>
      loopEnd;

  std::size_t processed = 0;
  while (!ready.empty()) {
    const std::int32_t node = ready.top();
    ready.pop();
    ++processed;
    const bool postPhase = node >= nn;
    const std::int32_t id = postPhase ? node - nn : node;
    const ChunkStep& s = schedule.steps[static_cast<std::size_t>(id)];
    StepTiming& timing = t.stepTimings[static_cast<std::size_t>(id)];

    if (!postPhase) {
      Gate gate;
      if (s.streamPred >= 0)
        gate.raise(t.stepTimings[static_cast<std::size_t>(s.streamPred)].release,
                   s.streamPred, GateKind::Stream);
      for (std::size_t j = 0; j < s.recvDeps.size(); ++j)
        gate.raise(t.stepTimings[static_cast<std::size_t>(s.recvDeps[j])].completion,
                   s.recvDeps[j], GateKind::Dep);
      if (schedule.mode == PipelineMode::NonPipelined && s.loop > 0 && s.step == 0) {
        const auto it = loopEnd.find({s.rank, s.channel, s.loop - 1});
        if (it != loopEnd.end()) {
          gate.raise(it->second.first, it->second.second, GateKind::LoopBarrier);
          t.loopBarrierArgmax[static_cast<std::size_t>(id)] = it->second.second;
        }
      }
      timing.acquire = gate.value;
      timing.acquirePred = gate.pred;
      timing.acquireGate = gate.kind;
    } else {
      Seconds start = timing.acquire;
      std::int32_t slotPred = -1;
      for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
        const FifoRef& f = s.sendFifo[j];
        if (f.pos >= schedule.proto.nSlots) {
          const FifoEntry& freed = schedule.fifos[static_cast<std::size_t>(f.fifoId)]
              [static_cast<std::size_t>(f.pos - schedule.proto.nSlots)];
          const Seconds freeAt =
              t.stepTimings[static_cast<std::size_t>(freed.consumerId)].acquire;
          if (freeAt > start) {
            start = freeAt;
            slotPred = freed.consumerId;
          }
        }
      }

      // Wire occupancy: incoming and outgoing transfers stream in opposite
      // directions concurrently, each direction serialized on its own engine.
      Seconds tIn = 0.0;
      Seconds tOut = 0.0;
      Seconds hop = 0.0;
      Seconds alpha = 0.0;
      for (std::size_t j = 0; j < s.recvFrom.size(); ++j) {
        const LinkClass c = classify_link(s.recvFrom[j], s.rank, cluster);
        const ChunkStep& sender = schedule.steps[static_cast<std::size_t>(s.recvDeps[j])];
        tIn += static_cast<double>(
                   wire_bytes(schedule.proto, schedule.payloadBytes(sender))) /
               cluster.link(c).bandwidth;
        hop = std::max(hop, cfg.hopLatency(schedule.proto, c));
        alpha = std::max(alpha, cluster.link(c).alphaControl);
      }
      for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
        const LinkClass c = classify_link(s.rank, s.sendTo[j], cluster);
        tOut += static_cast<double>(wire_bytes(schedule.proto, schedule.payloadBytes(s))) /
                cluster.link(c).bandwidth;
        hop = std::max(hop, cfg.hopLatency(schedule.proto, c));
        alpha = std::max(alpha, cluster.link(c).alphaControl);
      }

      timing.start = start;
      timing.slotPred = slotPred;
      timing.release = timing.start + std::max(tIn, tOut);
      timing.completion = timing.release + hop + alpha;

      auto [leIt, leFresh] =
          loopEnd.try_emplace({s.rank, s.channel, s.loop}, std::pair{-1.0, -1});
      if (timing.completion > leIt->second.first) leIt->second = {timing.completion, id};

      Seconds& finish = t.perRankFinish[static_cast<std::size_t>(s.rank)];
      finish = std::max(finish, timing.completion);
      if (timing.completion > t.makespan) {
        t.makespan = timing.completion;
        t.finishStep = id;
      }
    }

    for (std::int32_t d : dependents[static_cast<std::size_t>(node)])
      if (--inDeg[static_cast<std::size_t>(d)] == 0) ready.push(d);
  }
  if (processed != 2 * n)
    throw std::runtime_error("simulate: cyclic dependency in schedule");

  // Event log, ordered by (rank, channel, loop, step, chunk) emission order
  // of the schedule, with per-step events in recv -> calc -> send order.
  t.events.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const ChunkStep& s = schedule.steps[i];
    const StepTiming& timing = t.stepTimings[i];
    for (std::size_t j = 0; j < s.recvDeps.size(); ++j) {
      Event e;
      e.rank = s.rank;
      e.channelId = s.channel;
      e.loopIndex = s.loop;
      e.stepIndex = s.step;
      e.kind = EventKind::RecvComplete;
      e.start = t.stepTimings[static_cast<std::size_t>(s.recvDeps[j])].completion;
      e.end = timing.start;
      e.peer = s.recvFrom[j];
      t.events.push_back(e);
    }
    if (primitive_reduces(s.kind) || primitive_copies(s.kind)) {
      Event e;
      e.rank = s.rank;
      e.channelId = s.channel;
      e.loopIndex = s.loop;
      e.stepIndex = s.step;
      e.kind = primitive_reduces(s.kind) ? EventKind::ReduceDone : EventKind::CopyDone;
      e.start = timing.completion;
      e.end = timing.completion;
      t.events.push_back(e);
    }
    Seconds wireAt = timing.start;
    for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
      const LinkClass c = classify_link(s.rank, s.sendTo[j], cluster);
      const Bytes wire = wire_bytes(schedule.proto, schedule.payloadBytes(s));
      Event e;
      e.rank = s.rank;
      e.channelId = s.channel;
      e.loopIndex = s.loop;
      e.stepIndex = s.step;
      e.kind = EventKind::SendPost;
      e.start = wireAt;
      wireAt += static_cast<double>(wire) / cluster.link(c).bandwidth;
      e.end = wireAt;
      e.bytesOnWire = wire;
      e.peer = s.sendTo[j];
      t.events.push_back(e);
    }
  }
  return t;
}

namespace {

struct PathSegment {
  std::int32_t stepId;
  Seconds start;
  Seconds end;
};

// Walks critical-gate pointers backwards from the makespan step. Every gate
// value equals the constrained step's start, so consecutive segments share
// their boundary and the whole list tiles [0, makespan].
std::vector<PathSegment> critical_segments(const Timeline& t) {
  std::vector<PathSegment> rev;
  std::int32_t cur = t.finishStep;
  Seconds upTo = t.stepTimings[static_cast<std::size_t>(cur)].completion;
  while (cur >= 0) {
    const StepTiming& timing = t.stepTimings[static_cast<std::size_t>(cur)];
    rev.push_back(PathSegment{cur, timing.start, upTo});
    // A slot stall hands over to the consumer whose acquire freed the slot;
    // otherwise the step's own acquire gate decides.
    const std::int32_t via =
        timing.slotPred >= 0 && timing.start > timing.acquire ? timing.slotPred : cur;
    const StepTiming& viaTiming = t.stepTimings[static_cast<std::size_t>(via)];
    if (viaTiming.acquirePred < 0) break;  // the chain bottoms out at time 0
    const std::int32_t predId = viaTiming.acquirePred;
    const StepTiming& pred = t.stepTimings[static_cast<std::size_t>(predId)];
    // Stream gates release at the predecessor's wire release, dependency and
    // barrier gates at its completion.
    upTo = viaTiming.acquireGate == GateKind::Stream ? pred.release : pred.completion;
    cur = predId;
  }
  std::reverse(rev.begin(), rev.end());
  return rev;
}

}  // namespace

std::vector<Event> critical_path(const Timeline& t) {
  if (t.stepTimings.empty() || t.finishStep < 0) {
    // Hand-built timelines carry no engine state; the longest event is the
    // whole chain.
    std::vector<Event> path;
    const Event* best = nullptr;
    for (const Event& e : t.events)
      if (best == nullptr || e.end > best->end) best = &e;
    if (best != nullptr) path.push_back(*best);
    return path;
  }
  std::vector<Event> path;
  for (const PathSegment& seg : critical_segments(t)) {
    Event e;
    e.kind = EventKind::RecvComplete;
    e.start = seg.start;
    e.end = seg.end;
    path.push_back(e);
  }
  return path;
}

std::vector<Event> critical_path(const Timeline& t, const Schedule& schedule) {
  if (t.stepTimings.empty() || t.finishStep < 0) return critical_path(t);
  std::vector<Event> path;
  for (const PathSegment& seg : critical_segments(t)) {
    const ChunkStep& s = schedule.steps[static_cast<std::size_t>(seg.stepId)];
    Event e;
    e.rank = s.rank;
    e.channelId = s.channel;
    e.loopIndex = s.loop;
    e.stepIndex = s.step;
    e.kind = s.sendTo.empty() ? EventKind::RecvComplete : EventKind::SendPost;
    e.start = seg.start;
    e.end = seg.end;
    path.push_back(e);
  }
  return path;
}

Bytes internode_bytes(const Timeline& t, const ClusterSpec& cluster) {
  Bytes total = 0;
  for (const Event& e : t.events)
    if (e.kind == EventKind::SendPost && e.peer >= 0 &&
        classify_link(e.rank, e.peer, cluster) == LinkClass::InterNode)
      total += e.bytesOnWire;
  return total;
}

}  // namespace collsim

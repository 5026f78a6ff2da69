// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "collsim/collectives.hpp"
#include "collsim/partition.hpp"
#include "collsim/protocol.hpp"
#include "collsim/topology.hpp"

namespace collsim {

enum class BufferKind : std::uint8_t { None = 0, SendBuf, RecvBuf };

struct BufferRef {
  BufferKind buf = BufferKind::None;
  Elements offset = 0;
};

/// Step ids of the sends feeding one step, parallel to its recvFrom list.
class DepList {
 public:
  void push_back(std::int32_t id) {
    if (count_ >= ids_.size()) throw std::logic_error("DepList overflow");
    ids_[count_++] = id;
  }
  std::size_t size() const { return count_; }
  std::int32_t operator[](std::size_t i) const { return ids_[i]; }

 private:
  std::array<std::int32_t, 3> ids_{};
  std::uint8_t count_ = 0;
};

struct FifoRef {
  std::int32_t fifoId = -1;
  std::int32_t pos = -1;
};

/// One primitive applied to one chunk of one loop on one channel. recvDeps
/// name the producing send steps; sendFifo names this step's slot in each
/// outgoing (channel, peer) FIFO.
struct ChunkStep {
  Rank rank = 0;
  std::int32_t channel = 0;
  std::int32_t loop = 0;
  std::int32_t step = 0;
  std::int32_t chunk = 0;
  PrimitiveKind kind = PrimitiveKind::Send;
  std::uint8_t streamId = 0;
  PeerList recvFrom;
  PeerList sendTo;
  DepList recvDeps;
  Elements payloadElems = 0;
  BufferRef src;
  BufferRef dst;
  std::int32_t streamPred = -1;  // previous step on this (rank, channel, stream)
  std::array<FifoRef, 3> sendFifo{};
};

struct FifoEntry {
  std::int32_t sendId = -1;
  std::int32_t consumerId = -1;
};

/// Fully expanded collective: every chunk-level primitive of every rank with
/// explicit dependencies, ready for functional emulation, timing, or GOAL
/// serialization.
struct Schedule {
  CollectiveKind coll = CollectiveKind::AllReduce;
  Algorithm algo = Algorithm::Ring;
  PipelineMode mode = PipelineMode::NonPipelined;
  Rank nRanks = 0;
  int nChannels = 1;
  Elements count = 0;  // partition-domain elements (per peer block for AG/RS)
  ElementModel elem;
  ProtocolParams proto;
  Rank root = 0;
  bool inPlace = false;
  bool overlapPhases = true;

  std::vector<ChunkStep> steps;
  std::vector<std::vector<FifoEntry>> fifos;  // per (channel, src, dst) in post order

  Bytes payloadBytes(const ChunkStep& s) const {
    return s.payloadElems * elem.elementBytes;
  }
};

/// Element count in the partition domain for a collective of msgBytes: bytes
/// for the byte-granular collectives, dtype elements otherwise. For AllGather
/// and ReduceScatter this is the per-rank block, not the aggregate buffer.
Elements partition_count(CollectiveKind coll, Bytes msgBytes, Bytes dtypeBytes);

Elements segments_per_loop(CollectiveKind coll, Algorithm algo, Rank k);
SegmentLayout segment_layout(CollectiveKind coll, Algorithm algo);

Schedule expand_schedule(const ClusterSpec& cluster, CollectiveKind coll, Algorithm algo,
                         Elements count, const ElementModel& elem,
                         const ProtocolParams& proto, int nChannels, Rank root = 0,
                         bool inPlace = false, bool overlapPhases = true);

}  // namespace collsim

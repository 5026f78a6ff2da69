// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "collsim/protocol.hpp"
#include "collsim/types.hpp"

namespace collsim {

/// Size of one element as moved by the collective: a byte for AllGather and
/// Broadcast, the dtype width for the reducing collectives.
struct ElementModel {
  Bytes elementBytes = 1;
};

struct ChannelRange {
  int channelId = 0;
  Elements workOffset = 0;
  Elements channelCount = 0;
};

struct Loop {
  int loopIndex = 0;
  Elements loopCount = 0;       // elements covered by this outer iteration
  Elements chunkCount = 0;      // full-chunk size in elements
  Elements lastChunkCount = 0;  // final chunk of the largest segment
  Elements nChunks = 0;         // chunks per segment (largest segment)
};

struct LoopPlan {
  Elements segmentsPerLoop = 1;
  std::vector<Loop> loops;
};

/// How the segments of one loop relate to the loop's element range. Ring
/// AllReduce splits the range into one slice per ring position; AllGather and
/// ReduceScatter circulate the whole range once per peer block.
enum class SegmentLayout : std::uint8_t { Split = 0, PerBlock };

ElementModel element_model(CollectiveKind coll, Bytes dtypeBytes);

/// Floor/ceil split of [0, count) over nChannels: the first count%nChannels
/// channels take one extra element. Empty ranges are fine.
std::vector<ChannelRange> plan_channels(Elements count, int nChannels);

/// Break one channel range into buffer-sized outer loops. A full loop spans
/// chunkCount * nSlots * segmentsPerLoop elements; the tail loop is shorter
/// and its remainder lands in lastChunkCount, never in an extra mini-loop.
LoopPlan plan_loops(const ChannelRange& range, const ProtocolParams& proto,
                    Rank nRanks, Elements segmentsPerLoop, const ElementModel& elem,
                    SegmentLayout layout = SegmentLayout::Split);

/// Chunked split of `total` elements: sizes of chunk `i` in [0, nChunks).
Elements chunk_length(Elements total, Elements chunkCount, Elements chunkIndex);
Elements chunk_count_of(Elements total, Elements chunkCount);

/// Ceil/floor split used for ring segments inside one loop: segment i of
/// nSegments over `total` elements.
Elements segment_offset(Elements total, Elements nSegments, Elements i);
Elements segment_length(Elements total, Elements nSegments, Elements i);

}  // namespace collsim

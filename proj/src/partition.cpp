// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/partition.hpp"

#include <algorithm>

namespace collsim {

ElementModel element_model(CollectiveKind coll, Bytes dtypeBytes) {
  if (dtypeBytes != 1 && dtypeBytes != 2 && dtypeBytes != 4 && dtypeBytes != 8)
    throw std::invalid_argument("element_model: dtype width must be 1, 2, 4, or 8 bytes");
  switch (coll) {
    case CollectiveKind::AllGather:
    case CollectiveKind::Broadcast:
      return ElementModel{1};
    case CollectiveKind::AllReduce:
    case CollectiveKind::Reduce:
    case CollectiveKind::ReduceScatter:
      return ElementModel{dtypeBytes};
  }
  throw std::invalid_argument("element_model: unknown collective");
}

std::vector<ChannelRange> plan_channels(Elements count, int nChannels) {
  if (count < 0) throw std::invalid_argument("plan_channels: count must be >= 0");
  if (nChannels < 1) throw std::invalid_argument("plan_channels: nChannels must be >= 1");
  std::vector<ChannelRange> ranges;
  ranges.reserve(static_cast<std::size_t>(nChannels));
  const Elements base = count / nChannels;
  const Elements extra = count % nChannels;
  Elements offset = 0;
  for (int c = 0; c < nChannels; ++c) {
    const Elements here = base + (c < extra ? 1 : 0);
    ranges.push_back(ChannelRange{c, offset, here});
    offset += here;
  }
  return ranges;
}

LoopPlan plan_loops(const ChannelRange& range, const ProtocolParams& proto,
                    Rank nRanks, Elements segmentsPerLoop, const ElementModel& elem,
                    SegmentLayout layout) {
  if (range.channelCount < 0) throw std::invalid_argument("plan_loops: negative range");
  if (segmentsPerLoop != 1 && segmentsPerLoop != nRanks)
    throw std::invalid_argument("plan_loops: segmentsPerLoop must be 1 or nRanks");
  if (elem.elementBytes < 1) throw std::invalid_argument("plan_loops: bad element size");

  LoopPlan plan;
  plan.segmentsPerLoop = segmentsPerLoop;
  const Elements chunkCount = std::max<Elements>(1, proto.effectiveSlotBytes / elem.elementBytes);
  // A full loop conveys chunkCount * nSlots * segmentsPerLoop elements. With
  // the Split layout those are the loop's own range; with the PerBlock layout
  // the loop's range is one segment and the other replicas ride along, so the
  // range advances by one segment's worth per loop. Either way a single step
  // keeps at most nSlots chunks in flight, which is what lets the slot FIFO
  // pipeline without wrapping onto itself.
  const Elements grain = layout == SegmentLayout::Split
                             ? chunkCount * proto.nSlots * segmentsPerLoop
                             : chunkCount * proto.nSlots;

  Elements remaining = range.channelCount;
  int index = 0;
  while (remaining > 0) {
    Loop loop;
    loop.loopIndex = index++;
    loop.loopCount = std::min(grain, remaining);
    loop.chunkCount = chunkCount;
    // Chunk geometry is reported for the largest segment of the loop; the
    // trailing remainder shrinks only the final chunk.
    const Elements perSegment =
        layout == SegmentLayout::Split
            ? (loop.loopCount + segmentsPerLoop - 1) / segmentsPerLoop
            : loop.loopCount;
    loop.nChunks = chunk_count_of(perSegment, chunkCount);
    loop.lastChunkCount = perSegment - (loop.nChunks - 1) * chunkCount;
    plan.loops.push_back(loop);
    remaining -= loop.loopCount;
  }
  return plan;
}

Elements chunk_count_of(Elements total, Elements chunkCount) {
  if (total <= 0) return 0;
  return (total + chunkCount - 1) / chunkCount;
}

Elements chunk_length(Elements total, Elements chunkCount, Elements chunkIndex) {
  const Elements start = chunkIndex * chunkCount;
  return std::clamp<Elements>(total - start, 0, chunkCount);
}

Elements segment_offset(Elements total, Elements nSegments, Elements i) {
  const Elements base = total / nSegments;
  const Elements extra = total % nSegments;
  return base * i + std::min(i, extra);
}

Elements segment_length(Elements total, Elements nSegments, Elements i) {
  const Elements base = total / nSegments;
  const Elements extra = total % nSegments;
  return base + (i < extra ? 1 : 0);
}

}  // namespace collsim

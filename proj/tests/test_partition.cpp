// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "collsim/partition.hpp"

using namespace collsim;

namespace {

ProtocolParams tiny_proto(Bytes slotBytes, int nSlots, Bytes payloadPerGranule = 1,
                          Bytes flagGranule = 1) {
  ProtocolParams p;
  p.kind = Protocol::Simple;
  p.nSlots = nSlots;
  p.slotBytes = slotBytes;
  p.flagGranuleBytes = flagGranule;
  p.payloadPerGranuleBytes = payloadPerGranule;
  p.effectiveSlotBytes = slotBytes * payloadPerGranule / flagGranule;
  p.totalChannelBufferBytes = slotBytes * nSlots;
  return p;
}

Elements sum_loop_counts(const LoopPlan& plan) {
  Elements total = 0;
  for (const Loop& l : plan.loops) total += l.loopCount;
  return total;
}

}  // namespace

TEST_CASE("element model per collective") {
  CHECK(element_model(CollectiveKind::AllGather, 4).elementBytes == 1);
  CHECK(element_model(CollectiveKind::Broadcast, 8).elementBytes == 1);
  CHECK(element_model(CollectiveKind::AllReduce, 4).elementBytes == 4);
  CHECK(element_model(CollectiveKind::Reduce, 8).elementBytes == 8);
  CHECK(element_model(CollectiveKind::ReduceScatter, 2).elementBytes == 2);
  CHECK_THROWS_AS(element_model(CollectiveKind::AllReduce, 3), std::invalid_argument);
}

TEST_CASE("channel split examples") {
  const auto even = plan_channels(10, 2);
  REQUIRE(even.size() == 2);
  CHECK(even[0].workOffset == 0);
  CHECK(even[0].channelCount == 5);
  CHECK(even[1].workOffset == 5);
  CHECK(even[1].channelCount == 5);

  // Derived: disjoint cover by enumeration.
  const auto uneven = plan_channels(10, 4);
  const Elements wantCounts[] = {3, 3, 2, 2};
  const Elements wantOffsets[] = {0, 3, 6, 8};
  for (int c = 0; c < 4; ++c) {
    CHECK(uneven[static_cast<std::size_t>(c)].channelCount == wantCounts[c]);
    CHECK(uneven[static_cast<std::size_t>(c)].workOffset == wantOffsets[c]);
  }

  const auto empty = plan_channels(0, 4);
  for (const auto& r : empty) CHECK(r.channelCount == 0);
}

TEST_CASE("channel split disjoint cover property") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const Elements count = static_cast<Elements>(rng() % 100000);
    const int nChannels = 1 + static_cast<int>(rng() % 12);
    const auto ranges = plan_channels(count, nChannels);
    Elements expect = 0;
    for (const auto& r : ranges) {
      CHECK(r.workOffset == expect);
      expect += r.channelCount;
    }
    CHECK(expect == count);
  }
}

TEST_CASE("loop plan reproduces the illustrated split") {
  // 16 elements, chunkCount 2 (slot of 2 one-byte elements), two segments per
  // loop, one slot: loops of loopCount 4.
  const ChannelRange range{0, 0, 16};
  const LoopPlan plan = plan_loops(range, tiny_proto(2, 1), 2, 2, ElementModel{1});
  REQUIRE(plan.loops.size() == 4);
  for (const Loop& l : plan.loops) {
    CHECK(l.loopCount == 4);
    CHECK(l.chunkCount == 2);
    CHECK(l.nChunks == 1);
    CHECK(l.lastChunkCount == 2);
  }
}

TEST_CASE("loop plan degenerate small range") {
  const ChannelRange range{0, 100, 3};
  const LoopPlan plan = plan_loops(range, tiny_proto(64, 8), 4, 1, ElementModel{1});
  REQUIRE(plan.loops.size() == 1);
  CHECK(plan.loops[0].loopCount == 3);
  CHECK(plan.loops[0].nChunks == 1);
  CHECK(plan.loops[0].lastChunkCount == 3);
}

TEST_CASE("loop plan conserves a large range under LL defaults") {
  const ChannelRange range{0, 0, 1000000};
  const ProtocolParams ll = protocol_params(Protocol::LL, 8);
  const LoopPlan plan = plan_loops(range, ll, 4, 4, ElementModel{4});
  CHECK(sum_loop_counts(plan) == 1000000);
  // chunkCount = effective slot / element size.
  CHECK(plan.loops[0].chunkCount == 16384 / 4);
}

TEST_CASE("loop plan randomized conservation and chunk bounds") {
  std::mt19937_64 rng(11);
  const Protocol protos[] = {Protocol::Simple, Protocol::LL, Protocol::LL128};
  const Bytes widths[] = {1, 2, 4, 8};
  for (int iter = 0; iter < 1000; ++iter) {
    const Elements count = static_cast<Elements>(rng() % 3000000);
    const int nChannels = 1 + static_cast<int>(rng() % 8);
    const ProtocolParams proto = protocol_params(protos[rng() % 3], 1 + static_cast<int>(rng() % 8));
    const ElementModel elem{widths[rng() % 4]};
    const Rank k = 1 + static_cast<Rank>(rng() % 8);
    const Elements segs = (rng() % 2 == 0) ? 1 : k;
    const SegmentLayout layout =
        (rng() % 2 == 0) ? SegmentLayout::Split : SegmentLayout::PerBlock;

    Elements covered = 0;
    for (const ChannelRange& range : plan_channels(count, nChannels)) {
      const LoopPlan plan = plan_loops(range, proto, k, segs, elem, layout);
      CHECK(sum_loop_counts(plan) == range.channelCount);
      for (const Loop& l : plan.loops) {
        CHECK(l.chunkCount * elem.elementBytes <= proto.effectiveSlotBytes);
        CHECK(l.lastChunkCount >= 1);
        CHECK(l.lastChunkCount <= l.chunkCount);
        const Elements perSegment = layout == SegmentLayout::Split
                                        ? (l.loopCount + segs - 1) / segs
                                        : l.loopCount;
        CHECK((l.nChunks - 1) * l.chunkCount + l.lastChunkCount == perSegment);
      }
      covered += range.channelCount;
    }
    CHECK(covered == count);
  }
}

TEST_CASE("byte collectives plan independently of dtype") {
  const ProtocolParams proto = protocol_params(Protocol::Simple, 8);
  for (CollectiveKind coll : {CollectiveKind::AllGather, CollectiveKind::Broadcast}) {
    const ElementModel e4 = element_model(coll, 4);
    const ElementModel e8 = element_model(coll, 8);
    CHECK(e4.elementBytes == e8.elementBytes);
    const ChannelRange range{0, 0, 12345};
    const LoopPlan p4 = plan_loops(range, proto, 4, 1, e4);
    const LoopPlan p8 = plan_loops(range, proto, 4, 1, e8);
    REQUIRE(p4.loops.size() == p8.loops.size());
    for (std::size_t i = 0; i < p4.loops.size(); ++i) {
      CHECK(p4.loops[i].loopCount == p8.loops[i].loopCount);
      CHECK(p4.loops[i].chunkCount == p8.loops[i].chunkCount);
    }
  }
}

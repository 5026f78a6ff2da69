// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "collsim/topology.hpp"
#include "collsim/types.hpp"

namespace collsim {

/// One elementary action of one rank within a loop iteration. In the step
/// tables produced here, `segment` is expressed in whole-segment units:
/// offset identifies which segment (ring slice, peer block, or chain range)
/// the step touches and length is 1. The schedule expansion resolves these
/// into element ranges sized at most one chunk.
struct PrimitiveStep {
  Rank rank = 0;
  int loopIndex = 0;
  int stepIndex = 0;
  PrimitiveKind kind = PrimitiveKind::Send;
  PeerList recvFrom;
  PeerList sendTo;
  Elements segmentOffset = 0;
  Elements segmentLength = 1;
};

/// Ring AllReduce, one loop: 2k-1 steps. Rank at ring position p touches
/// segment (p - s) mod k at step s; the segment it receives at step s is the
/// one its predecessor pushed at step s-1.
std::vector<PrimitiveStep> ring_allreduce_steps(Rank k, Rank rank, const RingTopology& ring);

/// Ring AllGather, one loop: k steps moving whole peer blocks. Segment
/// offsets name the block's owner rank.
std::vector<PrimitiveStep> ring_allgather_steps(Rank k, Rank rank, const RingTopology& ring,
                                                bool inPlace);

/// Ring ReduceScatter, one loop: k steps; the final recvReduceCopy lands on
/// the rank's own block.
std::vector<PrimitiveStep> ring_reducescatter_steps(Rank k, Rank rank,
                                                    const RingTopology& ring);

/// Ring Broadcast: the ring degenerates to a chain rooted at `root`; each
/// rank contributes a single step per loop.
std::vector<PrimitiveStep> ring_broadcast_steps(Rank k, Rank rank, const RingTopology& ring,
                                                Rank root, bool inPlace);

/// Ring Reduce: chain from next(root) around to root.
std::vector<PrimitiveStep> ring_reduce_steps(Rank k, Rank rank, const RingTopology& ring,
                                             Rank root);

enum class TreeRole : std::uint8_t { Root = 0, Middle, Leaf };

TreeRole tree_role(const RankTreeLinks& links);

/// Tree AllReduce over the rank-level tree: a reduce-phase step followed by a
/// broadcast-phase step (roles Root / Middle / Leaf). A middle with several
/// children carries all of them as ordered recv dependencies of one step.
std::vector<PrimitiveStep> tree_allreduce_steps(Rank rank, const RankTreeLinks& links);

PipelineMode pipeline_mode(CollectiveKind coll, Algorithm algo);

/// Chain order used by ring Broadcast/Reduce: ring walk starting after the
/// root for Reduce, at the root for Broadcast.
std::vector<Rank> ring_chain(const RingTopology& ring, Rank root, CollectiveKind coll);

}  // namespace collsim

// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "collsim/collectives.hpp"

using namespace collsim;

namespace {

std::vector<PrimitiveKind> kinds_of(const std::vector<PrimitiveStep>& steps) {
  std::vector<PrimitiveKind> out;
  for (const auto& s : steps) out.push_back(s.kind);
  return out;
}

RingTopology identity_ring(Rank k) {
  return build_ring(ClusterSpec::uniform(k, 1), 0);
}

}  // namespace

TEST_CASE("ring allreduce step table") {
  const RingTopology ring = identity_ring(4);
  const auto steps = ring_allreduce_steps(4, 0, ring);
  CHECK(kinds_of(steps) ==
        std::vector<PrimitiveKind>{PrimitiveKind::Send, PrimitiveKind::RecvReduceSend,
                                   PrimitiveKind::RecvReduceSend,
                                   PrimitiveKind::RecvReduceCopySend,
                                   PrimitiveKind::RecvCopySend, PrimitiveKind::RecvCopySend,
                                   PrimitiveKind::Recv});

  // Rank 0 pushes its own segment first and receives segment 3 next.
  CHECK(steps[0].segmentOffset == 0);
  CHECK(steps[1].segmentOffset == 3);

  const auto two = ring_allreduce_steps(2, 0, identity_ring(2));
  CHECK(kinds_of(two) == std::vector<PrimitiveKind>{PrimitiveKind::Send,
                                                    PrimitiveKind::RecvReduceCopySend,
                                                    PrimitiveKind::Recv});

  CHECK_THROWS_AS(ring_allreduce_steps(1, 0, identity_ring(1)), std::invalid_argument);
}

TEST_CASE("ring allreduce step-count formula and segment rotation") {
  for (Rank k = 2; k <= 16; ++k) {
    const RingTopology ring = identity_ring(k);
    for (Rank r = 0; r < k; ++r) {
      const auto steps = ring_allreduce_steps(k, r, ring);
      CHECK(steps.size() == static_cast<std::size_t>(2 * k - 1));
      CHECK(steps.front().kind == PrimitiveKind::Send);
      CHECK(steps.back().kind == PrimitiveKind::Recv);
      // Reduce phase: rank r sends segment (r - s) mod k at step s; after
      // steps 0..k-1 every segment visited every rank exactly once.
      for (int s = 0; s < k; ++s)
        CHECK(steps[static_cast<std::size_t>(s)].segmentOffset == ((r - s) % k + k) % k);
    }
    // Brute-force: at each reduce step the k in-flight segments are distinct.
    for (int s = 0; s < k - 1; ++s) {
      std::set<Elements> segs;
      for (Rank r = 0; r < k; ++r)
        segs.insert(ring_allreduce_steps(k, r, ring)[static_cast<std::size_t>(s)].segmentOffset);
      CHECK(segs.size() == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("ring allgather step table") {
  const auto inPlace = ring_allgather_steps(4, 1, identity_ring(4), true);
  CHECK(kinds_of(inPlace) ==
        std::vector<PrimitiveKind>{PrimitiveKind::Send, PrimitiveKind::RecvCopySend,
                                   PrimitiveKind::RecvCopySend, PrimitiveKind::Recv});
  CHECK(inPlace[0].segmentOffset == 1);  // own block first

  const auto outOfPlace = ring_allgather_steps(2, 0, identity_ring(2), false);
  CHECK(kinds_of(outOfPlace) ==
        std::vector<PrimitiveKind>{PrimitiveKind::CopySend, PrimitiveKind::Recv});

  for (Rank k = 2; k <= 16; ++k)
    for (Rank r = 0; r < k; ++r)
      CHECK(ring_allgather_steps(k, r, identity_ring(k), true).size() ==
            static_cast<std::size_t>(k));
}

TEST_CASE("ring reducescatter step table") {
  const auto steps = ring_reducescatter_steps(4, 2, identity_ring(4));
  CHECK(kinds_of(steps) ==
        std::vector<PrimitiveKind>{PrimitiveKind::Send, PrimitiveKind::RecvReduceSend,
                                   PrimitiveKind::RecvReduceSend,
                                   PrimitiveKind::RecvReduceCopy});
  CHECK(steps.back().segmentOffset == 2);  // final reduce lands on the own block

  const auto two = ring_reducescatter_steps(2, 0, identity_ring(2));
  CHECK(kinds_of(two) ==
        std::vector<PrimitiveKind>{PrimitiveKind::Send, PrimitiveKind::RecvReduceCopy});

  for (Rank k = 2; k <= 16; ++k)
    for (Rank r = 0; r < k; ++r)
      CHECK(ring_reducescatter_steps(k, r, identity_ring(k)).size() ==
            static_cast<std::size_t>(k));
}

TEST_CASE("ring broadcast roles along the chain") {
  const RingTopology ring = identity_ring(4);
  CHECK(ring_broadcast_steps(4, 0, ring, 0, true)[0].kind == PrimitiveKind::Send);
  CHECK(ring_broadcast_steps(4, 0, ring, 0, false)[0].kind == PrimitiveKind::CopySend);
  CHECK(ring_broadcast_steps(4, 1, ring, 0, true)[0].kind == PrimitiveKind::RecvCopySend);
  CHECK(ring_broadcast_steps(4, 2, ring, 0, true)[0].kind == PrimitiveKind::RecvCopySend);
  CHECK(ring_broadcast_steps(4, 3, ring, 0, true)[0].kind == PrimitiveKind::Recv);

  // k=3 root 1: chain 1 -> 2 -> 0, so rank 0 is last.
  const RingTopology r3 = identity_ring(3);
  CHECK(ring_chain(r3, 1, CollectiveKind::Broadcast) == std::vector<Rank>{1, 2, 0});
  CHECK(ring_broadcast_steps(3, 0, r3, 1, true)[0].kind == PrimitiveKind::Recv);

  CHECK(ring_broadcast_steps(1, 0, identity_ring(1), 0, true).empty());
  CHECK_THROWS_AS(ring_broadcast_steps(4, 0, ring, 9, true), std::invalid_argument);
}

TEST_CASE("ring reduce roles along the chain") {
  const RingTopology ring = identity_ring(4);
  // Root 3: the chain starts right after the root.
  CHECK(ring_chain(ring, 3, CollectiveKind::Reduce) == std::vector<Rank>{0, 1, 2, 3});
  CHECK(ring_reduce_steps(4, 0, ring, 3)[0].kind == PrimitiveKind::Send);
  CHECK(ring_reduce_steps(4, 1, ring, 3)[0].kind == PrimitiveKind::RecvReduceSend);
  CHECK(ring_reduce_steps(4, 2, ring, 3)[0].kind == PrimitiveKind::RecvReduceSend);
  CHECK(ring_reduce_steps(4, 3, ring, 3)[0].kind == PrimitiveKind::RecvReduceCopy);

  const auto two = ring_reduce_steps(2, 0, identity_ring(2), 1);
  CHECK(two[0].kind == PrimitiveKind::Send);
  CHECK(ring_reduce_steps(2, 1, identity_ring(2), 1)[0].kind ==
        PrimitiveKind::RecvReduceCopy);
}

TEST_CASE("tree allreduce role tables") {
  // Four ranks on one node form a chain-shaped tree.
  const ClusterSpec c = ClusterSpec::uniform(4, 1);
  const DoubleBinaryTree dbt = build_double_binary_trees(c);
  const auto links = rank_tree_links(c, dbt, 0);

  CHECK(tree_role(links[0]) == TreeRole::Root);
  CHECK(tree_role(links[1]) == TreeRole::Middle);
  CHECK(tree_role(links[3]) == TreeRole::Leaf);

  const auto root = tree_allreduce_steps(0, links[0]);
  REQUIRE(root.size() == 1);
  CHECK(root[0].kind == PrimitiveKind::RecvReduceCopySend);

  const auto middle = tree_allreduce_steps(1, links[1]);
  REQUIRE(middle.size() == 2);
  CHECK(middle[0].kind == PrimitiveKind::RecvReduceSend);
  CHECK(middle[1].kind == PrimitiveKind::RecvCopySend);

  const auto leaf = tree_allreduce_steps(3, links[3]);
  REQUIRE(leaf.size() == 2);
  CHECK(leaf[0].kind == PrimitiveKind::Send);
  CHECK(leaf[1].kind == PrimitiveKind::Recv);

  // Single rank: no steps.
  const ClusterSpec solo = ClusterSpec::uniform(1, 1);
  const auto soloLinks = rank_tree_links(solo, build_double_binary_trees(solo), 0);
  CHECK(tree_allreduce_steps(0, soloLinks[0]).empty());
}

TEST_CASE("tree middles with two children list both recv dependencies") {
  const ClusterSpec c = ClusterSpec::uniform(4, 4);
  const DoubleBinaryTree dbt = build_double_binary_trees(c);
  const auto links = rank_tree_links(c, dbt, 0);
  // btree over 4 nodes: 0 -> 2 -> {1, 3}.
  const auto steps = tree_allreduce_steps(2, links[2]);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].recvFrom.size() == 2);
  CHECK(steps[0].recvFrom[0] == 1);
  CHECK(steps[0].recvFrom[1] == 3);
  CHECK(steps[1].sendTo.size() == 2);
}

TEST_CASE("pipeline mode classification") {
  CHECK(pipeline_mode(CollectiveKind::AllReduce, Algorithm::Ring) ==
        PipelineMode::NonPipelined);
  CHECK(pipeline_mode(CollectiveKind::AllGather, Algorithm::Ring) ==
        PipelineMode::NonPipelined);
  CHECK(pipeline_mode(CollectiveKind::ReduceScatter, Algorithm::Ring) ==
        PipelineMode::NonPipelined);
  CHECK(pipeline_mode(CollectiveKind::AllReduce, Algorithm::Tree) ==
        PipelineMode::Pipelined);
  CHECK(pipeline_mode(CollectiveKind::Broadcast, Algorithm::Ring) ==
        PipelineMode::Pipelined);
  CHECK(pipeline_mode(CollectiveKind::Reduce, Algorithm::Ring) == PipelineMode::Pipelined);
  CHECK_THROWS_AS(pipeline_mode(CollectiveKind::AllGather, Algorithm::Tree),
                  std::invalid_argument);
}

TEST_CASE("ring peer symmetry: every send has the matching recv one step later") {
  for (Rank k : {2, 3, 5, 8}) {
    const RingTopology ring = identity_ring(k);
    std::vector<std::vector<PrimitiveStep>> all;
    for (Rank r = 0; r < k; ++r) all.push_back(ring_allreduce_steps(k, r, ring));
    for (Rank r = 0; r < k; ++r) {
      for (std::size_t s = 0; s + 1 < all[static_cast<std::size_t>(r)].size(); ++s) {
        const PrimitiveStep& step = all[static_cast<std::size_t>(r)][s];
        if (step.sendTo.empty()) continue;
        const Rank q = step.sendTo[0];
        const PrimitiveStep& peer = all[static_cast<std::size_t>(q)][s + 1];
        REQUIRE(peer.recvFrom.size() == 1);
        CHECK(peer.recvFrom[0] == r);
        CHECK(peer.segmentOffset == step.segmentOffset);
      }
    }
  }
}

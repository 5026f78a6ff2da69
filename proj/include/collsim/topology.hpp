// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "collsim/types.hpp"

namespace collsim {

struct LinkParams {
  Seconds alphaControl = 0.0;  // rendezvous/control latency charged per hop
  double bandwidth = 0.0;      // bytes per second, > 0
};

/// Ranks, their node placement, and per-link-class cost parameters.
struct ClusterSpec {
  Rank nRanks = 0;
  std::vector<NodeId> nodeOf;    // rank -> node id, contiguous from 0
  LinkParams intra{0.0, 150e9};  // defaults follow a GH200-like testbed
  LinkParams inter{2e-6, 25e9};

  NodeId nNodes() const;
  const LinkParams& link(LinkClass c) const {
    return c == LinkClass::IntraNode ? intra : inter;
  }
  std::vector<Rank> ranksOnNode(NodeId n) const;

  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;

  /// nRanks ranks spread over nNodes nodes, ranks per node as even as
  /// possible, rank order following node order.
  static ClusterSpec uniform(Rank nRanks, NodeId nNodes);
};

struct RingTopology {
  std::vector<Rank> order;  // ring positions -> rank
  std::vector<Rank> next;   // rank -> successor rank
  std::vector<Rank> prev;   // rank -> predecessor rank

  int positionOf(Rank r) const;
};

struct TreeNode {
  NodeId parent = -1;
  std::vector<NodeId> children;  // ascending, at most two
};

/// Two spanning trees over nodes plus a per-node chain of local ranks.
/// Interior sets of the two trees are disjoint; at most one node is a leaf
/// in both.
struct DoubleBinaryTree {
  std::vector<TreeNode> tree0;
  std::vector<TreeNode> tree1;
  std::vector<std::vector<Rank>> intraChain;  // node -> local ranks in chain order
};

/// Per-rank links of one rank-level tree (a node tree composed with the
/// intra-node chains). The chain head carries all inter-node links.
struct RankTreeLinks {
  Rank parent = -1;
  PeerList children;  // child-node chain heads (ascending node id), then local successor
};

LinkClass classify_link(Rank a, Rank b, const ClusterSpec& cluster);

/// Node-contiguous unidirectional ring. Distinct channels rotate the node
/// visiting order so traffic exits nodes over different boundaries.
RingTopology build_ring(const ClusterSpec& cluster, int channelIndex);

/// Node-level double binary tree: tree1 mirrors tree0 for even node counts
/// and is the one-position shift for odd counts. intraChain is left empty.
DoubleBinaryTree build_double_binary_trees(NodeId nNodes);

/// build_double_binary_trees plus intra-node chains in ascending rank order.
DoubleBinaryTree build_double_binary_trees(const ClusterSpec& cluster);

/// Rank-level links of tree 0 or 1 for every rank.
std::vector<RankTreeLinks> rank_tree_links(const ClusterSpec& cluster,
                                           const DoubleBinaryTree& dbt, int whichTree);

}  // namespace collsim

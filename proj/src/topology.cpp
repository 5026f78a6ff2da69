// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/topology.hpp"

#include <algorithm>
#include <numeric>

namespace collsim {

NodeId ClusterSpec::nNodes() const {
  NodeId maxNode = -1;
  for (NodeId n : nodeOf) maxNode = std::max(maxNode, n);
  return maxNode + 1;
}

std::vector<Rank> ClusterSpec::ranksOnNode(NodeId n) const {
  std::vector<Rank> out;
  for (Rank r = 0; r < nRanks; ++r)
    if (nodeOf[r] == n) out.push_back(r);
  return out;
}

void ClusterSpec::validate() const {
  if (nRanks < 1) throw std::invalid_argument("cluster: nRanks must be >= 1");
  if (static_cast<Rank>(nodeOf.size()) != nRanks)
    throw std::invalid_argument("cluster: nodeOf must assign every rank exactly one node");
  const NodeId n = nNodes();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (NodeId id : nodeOf) {
    if (id < 0 || id >= n) throw std::invalid_argument("cluster: node id out of range");
    seen[static_cast<std::size_t>(id)] = true;
  }
  for (NodeId i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw std::invalid_argument("cluster: node ids must be contiguous from 0");
  if (intra.bandwidth <= 0.0 || inter.bandwidth <= 0.0)
    throw std::invalid_argument("cluster: bandwidths must be strictly positive");
}

ClusterSpec ClusterSpec::uniform(Rank nRanks, NodeId nNodes) {
  if (nRanks < 1 || nNodes < 1 || nNodes > nRanks)
    throw std::invalid_argument("uniform cluster: need 1 <= nNodes <= nRanks");
  ClusterSpec c;
  c.nRanks = nRanks;
  c.nodeOf.resize(static_cast<std::size_t>(nRanks));
  const Rank base = nRanks / nNodes;
  const Rank extra = nRanks % nNodes;
  Rank r = 0;
  for (NodeId n = 0; n < nNodes; ++n) {
    const Rank here = base + (n < extra ? 1 : 0);
    for (Rank i = 0; i < here; ++i) c.nodeOf[static_cast<std::size_t>(r++)] = n;
  }
  return c;
}

int RingTopology::positionOf(Rank r) const {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == r) return static_cast<int>(i);
  throw std::invalid_argument("rank not in ring");
}

LinkClass classify_link(Rank a, Rank b, const ClusterSpec& cluster) {
  if (a == b) throw std::invalid_argument("classify_link: self-links carry no cost");
  if (a < 0 || b < 0 || a >= cluster.nRanks || b >= cluster.nRanks)
    throw std::invalid_argument("classify_link: rank out of range");
  return cluster.nodeOf[static_cast<std::size_t>(a)] == cluster.nodeOf[static_cast<std::size_t>(b)]
             ? LinkClass::IntraNode
             : LinkClass::InterNode;
}

RingTopology build_ring(const ClusterSpec& cluster, int channelIndex) {
  cluster.validate();
  if (channelIndex < 0) throw std::invalid_argument("build_ring: channelIndex must be >= 0");
  const NodeId nNodes = cluster.nNodes();

  RingTopology ring;
  ring.order.reserve(static_cast<std::size_t>(cluster.nRanks));
  // Visit nodes in ascending id starting from a channel-dependent node, keeping
  // ranks within a node in ascending order.
  const NodeId start = static_cast<NodeId>(channelIndex % nNodes);
  for (NodeId i = 0; i < nNodes; ++i) {
    const NodeId node = static_cast<NodeId>((start + i) % nNodes);
    for (Rank r : cluster.ranksOnNode(node)) ring.order.push_back(r);
  }

  ring.next.assign(static_cast<std::size_t>(cluster.nRanks), -1);
  ring.prev.assign(static_cast<std::size_t>(cluster.nRanks), -1);
  const std::size_t k = ring.order.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Rank a = ring.order[i];
    const Rank b = ring.order[(i + 1) % k];
    ring.next[static_cast<std::size_t>(a)] = b;
    ring.prev[static_cast<std::size_t>(b)] = a;
  }
  return ring;
}

namespace {

// In-order binary tree over 0..n-1 rooted at 0. Leaves are the odd indices;
// every even index is interior. The parent of a rank is found by replacing
// its lowest set bit with the next higher bit, falling back to clearing the
// lowest set bit when that overshoots n.
NodeId btree_parent(NodeId rank, NodeId n) {
  NodeId bit = 1;
  while ((rank & bit) == 0) bit <<= 1;
  NodeId up = (rank ^ bit) | (bit << 1);
  if (up >= n) up = rank ^ bit;
  return up;
}

std::vector<TreeNode> build_btree(NodeId n) {
  std::vector<TreeNode> tree(static_cast<std::size_t>(n));
  for (NodeId r = 1; r < n; ++r) {
    const NodeId p = btree_parent(r, n);
    tree[static_cast<std::size_t>(r)].parent = p;
    tree[static_cast<std::size_t>(p)].children.push_back(r);
  }
  for (auto& node : tree) std::sort(node.children.begin(), node.children.end());
  return tree;
}

// Relabel a tree through node -> map[node].
std::vector<TreeNode> relabel(const std::vector<TreeNode>& tree,
                              const std::vector<NodeId>& map) {
  std::vector<TreeNode> out(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const NodeId to = map[i];
    const TreeNode& src = tree[i];
    TreeNode& dst = out[static_cast<std::size_t>(to)];
    dst.parent = src.parent < 0 ? -1 : map[static_cast<std::size_t>(src.parent)];
    for (NodeId c : src.children) dst.children.push_back(map[static_cast<std::size_t>(c)]);
    std::sort(dst.children.begin(), dst.children.end());
  }
  return out;
}

}  // namespace

DoubleBinaryTree build_double_binary_trees(NodeId nNodes) {
  if (nNodes < 1) throw std::invalid_argument("build_double_binary_trees: nNodes must be >= 1");

  DoubleBinaryTree dbt;
  if (nNodes == 1) {
    dbt.tree0.resize(1);
    dbt.tree1.resize(1);
    return dbt;
  }

  if (nNodes % 2 == 0) {
    dbt.tree0 = build_btree(nNodes);
  } else {
    // For odd counts the last node must be a leaf of tree0, otherwise the
    // shifted tree would share an interior node with it. Build the even-count
    // tree and hang the last node off the root (found by clearing the lowest
    // set bit down to 0).
    dbt.tree0 = build_btree(nNodes - 1);
    dbt.tree0.emplace_back();
    dbt.tree0.back().parent = 0;
    dbt.tree0[0].children.push_back(nNodes - 1);
    std::sort(dbt.tree0[0].children.begin(), dbt.tree0[0].children.end());
  }

  std::vector<NodeId> map(static_cast<std::size_t>(nNodes));
  if (nNodes % 2 == 0) {
    for (NodeId i = 0; i < nNodes; ++i) map[static_cast<std::size_t>(i)] = nNodes - 1 - i;
  } else {
    for (NodeId i = 0; i < nNodes; ++i) map[static_cast<std::size_t>(i)] = (i + 1) % nNodes;
  }
  dbt.tree1 = relabel(dbt.tree0, map);
  return dbt;
}

DoubleBinaryTree build_double_binary_trees(const ClusterSpec& cluster) {
  cluster.validate();
  DoubleBinaryTree dbt = build_double_binary_trees(cluster.nNodes());
  dbt.intraChain.resize(static_cast<std::size_t>(cluster.nNodes()));
  for (NodeId n = 0; n < cluster.nNodes(); ++n)
    dbt.intraChain[static_cast<std::size_t>(n)] = cluster.ranksOnNode(n);
  return dbt;
}

std::vector<RankTreeLinks> rank_tree_links(const ClusterSpec& cluster,
                                           const DoubleBinaryTree& dbt, int whichTree) {
  if (whichTree != 0 && whichTree != 1)
    throw std::invalid_argument("rank_tree_links: whichTree must be 0 or 1");
  if (dbt.intraChain.empty())
    throw std::invalid_argument("rank_tree_links: tree has no intra-node chains");
  const auto& tree = whichTree == 0 ? dbt.tree0 : dbt.tree1;

  std::vector<RankTreeLinks> links(static_cast<std::size_t>(cluster.nRanks));
  for (NodeId n = 0; n < cluster.nNodes(); ++n) {
    const auto& chain = dbt.intraChain[static_cast<std::size_t>(n)];
    const TreeNode& node = tree[static_cast<std::size_t>(n)];
    const Rank head = chain.front();
    RankTreeLinks& headLinks = links[static_cast<std::size_t>(head)];
    headLinks.parent =
        node.parent < 0 ? -1 : dbt.intraChain[static_cast<std::size_t>(node.parent)].front();
    for (NodeId c : node.children)
      headLinks.children.push_back(dbt.intraChain[static_cast<std::size_t>(c)].front());
    if (chain.size() > 1) headLinks.children.push_back(chain[1]);
    for (std::size_t i = 1; i < chain.size(); ++i) {
      RankTreeLinks& l = links[static_cast<std::size_t>(chain[i])];
      l.parent = chain[i - 1];
      if (i + 1 < chain.size()) l.children.push_back(chain[i + 1]);
    }
  }
  return links;
}

}  // namespace collsim

// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/collectives.hpp"

#include <algorithm>

#include "collsim/protocol.hpp"

namespace collsim {

namespace {

Elements mod(Elements a, Elements k) { return ((a % k) + k) % k; }

void check_ring_args(Rank k, Rank rank, const RingTopology& ring) {
  if (k < 2) throw std::invalid_argument("ring schedule needs k >= 2 ranks");
  if (rank < 0 || rank >= k) throw std::invalid_argument("rank out of range");
  if (static_cast<Rank>(ring.order.size()) != k)
    throw std::invalid_argument("ring size does not match k");
}

}  // namespace

std::vector<PrimitiveStep> ring_allreduce_steps(Rank k, Rank rank, const RingTopology& ring) {
  check_ring_args(k, rank, ring);
  const Rank prev = ring.prev[static_cast<std::size_t>(rank)];
  const Rank next = ring.next[static_cast<std::size_t>(rank)];
  const Elements p = ring.positionOf(rank);

  std::vector<PrimitiveStep> steps;
  steps.reserve(static_cast<std::size_t>(2 * k - 1));
  for (int s = 0; s < 2 * k - 1; ++s) {
    PrimitiveStep step;
    step.rank = rank;
    step.stepIndex = s;
    step.segmentOffset = mod(p - s, k);
    if (s == 0) {
      step.kind = PrimitiveKind::Send;
    } else if (s <= k - 2) {
      step.kind = PrimitiveKind::RecvReduceSend;
    } else if (s == k - 1) {
      step.kind = PrimitiveKind::RecvReduceCopySend;
    } else if (s <= 2 * k - 3) {
      step.kind = PrimitiveKind::RecvCopySend;
    } else {
      step.kind = PrimitiveKind::Recv;
    }
    if (primitive_receives(step.kind)) step.recvFrom.push_back(prev);
    if (primitive_sends(step.kind)) step.sendTo.push_back(next);
    steps.push_back(step);
  }
  return steps;
}

std::vector<PrimitiveStep> ring_allgather_steps(Rank k, Rank rank, const RingTopology& ring,
                                                bool inPlace) {
  check_ring_args(k, rank, ring);
  const Rank prev = ring.prev[static_cast<std::size_t>(rank)];
  const Rank next = ring.next[static_cast<std::size_t>(rank)];
  const Elements p = ring.positionOf(rank);

  std::vector<PrimitiveStep> steps;
  steps.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    PrimitiveStep step;
    step.rank = rank;
    step.stepIndex = s;
    // Block moved at step s: the one owned by the rank sitting s positions
    // back on the ring.
    step.segmentOffset = ring.order[static_cast<std::size_t>(mod(p - s, k))];
    if (s == 0) {
      step.kind = inPlace ? PrimitiveKind::Send : PrimitiveKind::CopySend;
    } else if (s <= k - 2) {
      step.kind = PrimitiveKind::RecvCopySend;
    } else {
      step.kind = PrimitiveKind::Recv;
    }
    if (primitive_receives(step.kind)) step.recvFrom.push_back(prev);
    if (primitive_sends(step.kind)) step.sendTo.push_back(next);
    steps.push_back(step);
  }
  return steps;
}

std::vector<PrimitiveStep> ring_reducescatter_steps(Rank k, Rank rank,
                                                    const RingTopology& ring) {
  check_ring_args(k, rank, ring);
  const Rank prev = ring.prev[static_cast<std::size_t>(rank)];
  const Rank next = ring.next[static_cast<std::size_t>(rank)];
  const Elements p = ring.positionOf(rank);

  std::vector<PrimitiveStep> steps;
  steps.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    PrimitiveStep step;
    step.rank = rank;
    step.stepIndex = s;
    // Block handled at step s: one position further back each step, so the
    // final step reduces into the rank's own block.
    step.segmentOffset = ring.order[static_cast<std::size_t>(mod(p - s - 1, k))];
    if (s == 0) {
      step.kind = PrimitiveKind::Send;
    } else if (s <= k - 2) {
      step.kind = PrimitiveKind::RecvReduceSend;
    } else {
      step.kind = PrimitiveKind::RecvReduceCopy;
    }
    if (primitive_receives(step.kind)) step.recvFrom.push_back(prev);
    if (primitive_sends(step.kind)) step.sendTo.push_back(next);
    steps.push_back(step);
  }
  return steps;
}

std::vector<Rank> ring_chain(const RingTopology& ring, Rank root, CollectiveKind coll) {
  const Rank k = static_cast<Rank>(ring.order.size());
  if (root < 0 || root >= k) throw std::invalid_argument("invalid root rank");
  std::vector<Rank> chain;
  chain.reserve(static_cast<std::size_t>(k));
  // Broadcast flows root -> ... -> last; Reduce flows next(root) -> ... -> root.
  Rank start = coll == CollectiveKind::Reduce ? ring.next[static_cast<std::size_t>(root)] : root;
  Rank r = start;
  for (Rank i = 0; i < k; ++i) {
    chain.push_back(r);
    r = ring.next[static_cast<std::size_t>(r)];
  }
  return chain;
}

std::vector<PrimitiveStep> ring_broadcast_steps(Rank k, Rank rank, const RingTopology& ring,
                                                Rank root, bool inPlace) {
  if (k < 1) throw std::invalid_argument("broadcast needs k >= 1");
  if (static_cast<Rank>(ring.order.size()) != k)
    throw std::invalid_argument("ring size does not match k");
  if (root < 0 || root >= k) throw std::invalid_argument("invalid root rank");
  if (k == 1) return {};  // broadcast to self

  const std::vector<Rank> chain = ring_chain(ring, root, CollectiveKind::Broadcast);
  const auto pos = static_cast<std::size_t>(
      std::find(chain.begin(), chain.end(), rank) - chain.begin());

  PrimitiveStep step;
  step.rank = rank;
  step.stepIndex = 0;
  step.segmentOffset = 0;
  if (pos == 0) {
    step.kind = inPlace ? PrimitiveKind::Send : PrimitiveKind::CopySend;
    step.sendTo.push_back(chain[1]);
  } else if (pos + 1 < chain.size()) {
    step.kind = PrimitiveKind::RecvCopySend;
    step.recvFrom.push_back(chain[pos - 1]);
    step.sendTo.push_back(chain[pos + 1]);
  } else {
    step.kind = PrimitiveKind::Recv;
    step.recvFrom.push_back(chain[pos - 1]);
  }
  return {step};
}

std::vector<PrimitiveStep> ring_reduce_steps(Rank k, Rank rank, const RingTopology& ring,
                                             Rank root) {
  if (k < 1) throw std::invalid_argument("reduce needs k >= 1");
  if (static_cast<Rank>(ring.order.size()) != k)
    throw std::invalid_argument("ring size does not match k");
  if (root < 0 || root >= k) throw std::invalid_argument("invalid root rank");
  if (k == 1) return {};  // reduce over one rank is a local copy

  const std::vector<Rank> chain = ring_chain(ring, root, CollectiveKind::Reduce);
  const auto pos = static_cast<std::size_t>(
      std::find(chain.begin(), chain.end(), rank) - chain.begin());

  PrimitiveStep step;
  step.rank = rank;
  step.stepIndex = 0;
  step.segmentOffset = 0;
  if (pos == 0) {
    step.kind = PrimitiveKind::Send;
    step.sendTo.push_back(chain[1]);
  } else if (pos + 1 < chain.size()) {
    step.kind = PrimitiveKind::RecvReduceSend;
    step.recvFrom.push_back(chain[pos - 1]);
    step.sendTo.push_back(chain[pos + 1]);
  } else {
    step.kind = PrimitiveKind::RecvReduceCopy;  // rank == root
    step.recvFrom.push_back(chain[pos - 1]);
  }
  return {step};
}

TreeRole tree_role(const RankTreeLinks& links) {
  if (links.parent < 0) return TreeRole::Root;
  if (links.children.empty()) return TreeRole::Leaf;
  return TreeRole::Middle;
}

std::vector<PrimitiveStep> tree_allreduce_steps(Rank rank, const RankTreeLinks& links) {
  const TreeRole role = tree_role(links);
  std::vector<PrimitiveStep> steps;

  if (role == TreeRole::Root) {
    if (links.children.empty()) return {};  // single rank, nothing moves
    PrimitiveStep step;
    step.rank = rank;
    step.stepIndex = 0;
    step.kind = PrimitiveKind::RecvReduceCopySend;
    for (Rank c : links.children) step.recvFrom.push_back(c);
    for (Rank c : links.children) step.sendTo.push_back(c);
    steps.push_back(step);
    return steps;
  }

  PrimitiveStep up;
  up.rank = rank;
  up.stepIndex = 0;
  PrimitiveStep down;
  down.rank = rank;
  down.stepIndex = 1;
  if (role == TreeRole::Middle) {
    up.kind = PrimitiveKind::RecvReduceSend;
    for (Rank c : links.children) up.recvFrom.push_back(c);
    up.sendTo.push_back(links.parent);
    down.kind = PrimitiveKind::RecvCopySend;
    down.recvFrom.push_back(links.parent);
    for (Rank c : links.children) down.sendTo.push_back(c);
  } else {
    up.kind = PrimitiveKind::Send;
    up.sendTo.push_back(links.parent);
    down.kind = PrimitiveKind::Recv;
    down.recvFrom.push_back(links.parent);
  }
  steps.push_back(up);
  steps.push_back(down);
  return steps;
}

PipelineMode pipeline_mode(CollectiveKind coll, Algorithm algo) {
  if (!algorithm_supported(coll, algo))
    throw std::invalid_argument("pipeline_mode: unsupported pair " + to_string(coll) + "/" +
                                to_string(algo));
  if (algo == Algorithm::Tree) return PipelineMode::Pipelined;
  switch (coll) {
    case CollectiveKind::AllReduce:
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
      return PipelineMode::NonPipelined;
    case CollectiveKind::Broadcast:
    case CollectiveKind::Reduce:
      return PipelineMode::Pipelined;
  }
  throw std::invalid_argument("pipeline_mode: unknown collective");
}

}  // namespace collsim

// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/schedule.hpp"

#include <map>
#include <tuple>

namespace collsim {

Elements partition_count(CollectiveKind coll, Bytes msgBytes, Bytes dtypeBytes) {
  if (msgBytes < 0) throw std::invalid_argument("msgBytes must be >= 0");
  switch (coll) {
    case CollectiveKind::AllGather:
    case CollectiveKind::Broadcast:
      return msgBytes;  // byte elements
    case CollectiveKind::AllReduce:
    case CollectiveKind::Reduce:
    case CollectiveKind::ReduceScatter:
      if (msgBytes % dtypeBytes != 0)
        throw std::invalid_argument("msgBytes must be a multiple of the dtype width");
      return msgBytes / dtypeBytes;
  }
  throw std::invalid_argument("unknown collective");
}

Elements segments_per_loop(CollectiveKind coll, Algorithm algo, Rank k) {
  if (algo == Algorithm::Tree) return 1;
  switch (coll) {
    case CollectiveKind::AllReduce:
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
      return k;
    case CollectiveKind::Broadcast:
    case CollectiveKind::Reduce:
      return 1;
  }
  throw std::invalid_argument("unknown collective");
}

SegmentLayout segment_layout(CollectiveKind coll, Algorithm algo) {
  if (algo == Algorithm::Ring &&
      (coll == CollectiveKind::AllGather || coll == CollectiveKind::ReduceScatter))
    return SegmentLayout::PerBlock;
  return SegmentLayout::Split;
}

namespace {

/// Emission bookkeeping shared by every collective expansion.
class Builder {
 public:
  Builder(Schedule& out) : out_(out) {}

  std::int32_t emit(ChunkStep step) {
    const auto id = static_cast<std::int32_t>(out_.steps.size());
    const StreamKey sk{step.rank, step.channel, step.streamId};
    auto [it, fresh] = lastOnStream_.try_emplace(sk, -1);
    step.streamPred = it->second;
    it->second = id;
    for (std::size_t j = 0; j < step.sendTo.size(); ++j) {
      const FifoKey fk{step.channel, step.rank, step.sendTo[j]};
      auto [fit, _] = fifoIndex_.try_emplace(fk, -1);
      if (fit->second < 0) {
        fit->second = static_cast<std::int32_t>(out_.fifos.size());
        out_.fifos.emplace_back();
      }
      auto& fifo = out_.fifos[static_cast<std::size_t>(fit->second)];
      step.sendFifo[j] = FifoRef{fit->second, static_cast<std::int32_t>(fifo.size())};
      fifo.push_back(FifoEntry{id, -1});
    }
    out_.steps.push_back(step);
    return id;
  }

  /// Record that `receiverId` consumes the payload posted by `senderId`.
  void link(std::int32_t receiverId, std::int32_t senderId) {
    ChunkStep& recv = out_.steps[static_cast<std::size_t>(receiverId)];
    const ChunkStep& send = out_.steps[static_cast<std::size_t>(senderId)];
    recv.recvDeps.push_back(senderId);
    if (recv.recvDeps.size() != recv.recvFrom.size() &&
        recv.recvDeps.size() > recv.recvFrom.size())
      throw std::logic_error("more deps than recv peers");
    // Mark the consumer on the sender's FIFO entry toward this rank.
    for (std::size_t j = 0; j < send.sendTo.size(); ++j) {
      if (send.sendTo[j] == recv.rank) {
        out_.fifos[static_cast<std::size_t>(send.sendFifo[j].fifoId)]
            [static_cast<std::size_t>(send.sendFifo[j].pos)]
                .consumerId = receiverId;
        return;
      }
    }
    throw std::logic_error("link: sender does not address receiver");
  }

 private:
  using StreamKey = std::tuple<Rank, std::int32_t, std::uint8_t>;
  using FifoKey = std::tuple<std::int32_t, Rank, Rank>;
  Schedule& out_;
  std::map<StreamKey, std::int32_t> lastOnStream_;
  std::map<FifoKey, std::int32_t> fifoIndex_;
};

ChunkStep base_step(const PrimitiveStep& tmpl, std::int32_t channel, std::int32_t loop,
                    std::int32_t chunk, Elements payload) {
  ChunkStep s;
  s.rank = tmpl.rank;
  s.channel = channel;
  s.loop = loop;
  s.step = tmpl.stepIndex;
  s.chunk = chunk;
  s.kind = tmpl.kind;
  s.recvFrom = tmpl.recvFrom;
  s.sendTo = tmpl.sendTo;
  s.payloadElems = payload;
  return s;
}

void expand_ring_allreduce(const ClusterSpec& cluster, Schedule& out, Builder& b) {
  const Rank k = cluster.nRanks;
  const auto ranges = plan_channels(out.count, out.nChannels);
  for (int ch = 0; ch < out.nChannels; ++ch) {
    const ChannelRange& range = ranges[static_cast<std::size_t>(ch)];
    if (range.channelCount == 0) continue;
    const RingTopology ring = build_ring(cluster, ch);
    std::vector<std::vector<PrimitiveStep>> tmpl;
    tmpl.reserve(static_cast<std::size_t>(k));
    for (Rank r = 0; r < k; ++r) tmpl.push_back(ring_allreduce_steps(k, r, ring));

    const LoopPlan plan =
        plan_loops(range, out.proto, k, k, out.elem, SegmentLayout::Split);
    Elements loopStart = range.workOffset;
    for (const Loop& loop : plan.loops) {
      const Elements L = loop.loopCount;
      std::vector<std::vector<std::int32_t>> prevIds(static_cast<std::size_t>(k));
      std::vector<std::vector<std::int32_t>> curIds(static_cast<std::size_t>(k));
      for (int s = 0; s < 2 * k - 1; ++s) {
        for (Rank r = 0; r < k; ++r) {
          const PrimitiveStep& t = tmpl[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
          const Elements seg = t.segmentOffset;
          const Elements segLen = segment_length(L, k, seg);
          const Elements segOff = loopStart + segment_offset(L, k, seg);
          const Elements nCh = chunk_count_of(segLen, loop.chunkCount);
          curIds[static_cast<std::size_t>(r)].clear();
          for (Elements c = 0; c < nCh; ++c) {
            const Elements clen = chunk_length(segLen, loop.chunkCount, c);
            const Elements off = segOff + c * loop.chunkCount;
            ChunkStep cs = base_step(t, ch, loop.loopIndex, static_cast<std::int32_t>(c), clen);
            switch (cs.kind) {
              case PrimitiveKind::Send:
              case PrimitiveKind::RecvReduceSend:
                cs.src = {BufferKind::SendBuf, off};
                break;
              case PrimitiveKind::RecvReduceCopySend:
                cs.src = {BufferKind::SendBuf, off};
                cs.dst = {BufferKind::RecvBuf, off};
                break;
              case PrimitiveKind::RecvCopySend:
              case PrimitiveKind::Recv:
                cs.dst = {BufferKind::RecvBuf, off};
                break;
              default:
                throw std::logic_error("unexpected allreduce primitive");
            }
            const std::int32_t id = b.emit(cs);
            if (s > 0) {
              const Rank sender = ring.prev[static_cast<std::size_t>(r)];
              b.link(id, prevIds[static_cast<std::size_t>(sender)][static_cast<std::size_t>(c)]);
            }
            curIds[static_cast<std::size_t>(r)].push_back(id);
          }
        }
        std::swap(prevIds, curIds);
      }
      loopStart += L;
    }
  }
}

void expand_ring_blockwise(const ClusterSpec& cluster, Schedule& out, Builder& b) {
  // Shared by AllGather and ReduceScatter: per loop, k whole-block segments
  // circulate the ring, one per step.
  const Rank k = cluster.nRanks;
  const Elements N = out.count;  // per-block elements; also the block stride
  const bool gather = out.coll == CollectiveKind::AllGather;
  const auto ranges = plan_channels(N, out.nChannels);
  for (int ch = 0; ch < out.nChannels; ++ch) {
    const ChannelRange& range = ranges[static_cast<std::size_t>(ch)];
    if (range.channelCount == 0) continue;
    const RingTopology ring = build_ring(cluster, ch);
    std::vector<std::vector<PrimitiveStep>> tmpl;
    tmpl.reserve(static_cast<std::size_t>(k));
    for (Rank r = 0; r < k; ++r)
      tmpl.push_back(gather ? ring_allgather_steps(k, r, ring, out.inPlace)
                            : ring_reducescatter_steps(k, r, ring));

    const LoopPlan plan =
        plan_loops(range, out.proto, k, k, out.elem, SegmentLayout::PerBlock);
    Elements loopStart = range.workOffset;
    for (const Loop& loop : plan.loops) {
      const Elements L = loop.loopCount;
      const Elements nCh = chunk_count_of(L, loop.chunkCount);
      std::vector<std::vector<std::int32_t>> prevIds(static_cast<std::size_t>(k));
      std::vector<std::vector<std::int32_t>> curIds(static_cast<std::size_t>(k));
      for (int s = 0; s < k; ++s) {
        for (Rank r = 0; r < k; ++r) {
          const PrimitiveStep& t = tmpl[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
          const Elements block = t.segmentOffset;  // owner rank of the moving block
          curIds[static_cast<std::size_t>(r)].clear();
          for (Elements c = 0; c < nCh; ++c) {
            const Elements clen = chunk_length(L, loop.chunkCount, c);
            const Elements wOff = loopStart + c * loop.chunkCount;
            ChunkStep cs = base_step(t, ch, loop.loopIndex, static_cast<std::int32_t>(c), clen);
            if (gather) {
              switch (cs.kind) {
                case PrimitiveKind::Send:  // in place: own block already staged
                  cs.src = {BufferKind::RecvBuf, block * N + wOff};
                  break;
                case PrimitiveKind::CopySend:
                  cs.src = {BufferKind::SendBuf, wOff};
                  cs.dst = {BufferKind::RecvBuf, block * N + wOff};
                  break;
                case PrimitiveKind::RecvCopySend:
                case PrimitiveKind::Recv:
                  cs.dst = {BufferKind::RecvBuf, block * N + wOff};
                  break;
                default:
                  throw std::logic_error("unexpected allgather primitive");
              }
            } else {
              switch (cs.kind) {
                case PrimitiveKind::Send:
                case PrimitiveKind::RecvReduceSend:
                  cs.src = {BufferKind::SendBuf, block * N + wOff};
                  break;
                case PrimitiveKind::RecvReduceCopy:
                  cs.src = {BufferKind::SendBuf, block * N + wOff};
                  cs.dst = {BufferKind::RecvBuf, wOff};
                  break;
                default:
                  throw std::logic_error("unexpected reducescatter primitive");
              }
            }
            const std::int32_t id = b.emit(cs);
            if (s > 0) {
              const Rank sender = ring.prev[static_cast<std::size_t>(r)];
              b.link(id, prevIds[static_cast<std::size_t>(sender)][static_cast<std::size_t>(c)]);
            }
            curIds[static_cast<std::size_t>(r)].push_back(id);
          }
        }
        std::swap(prevIds, curIds);
      }
      loopStart += L;
    }
  }
}

void expand_ring_chain(const ClusterSpec& cluster, Schedule& out, Builder& b) {
  // Broadcast and Reduce: a pipelined chain, one step per rank per chunk.
  const Rank k = cluster.nRanks;
  const bool bcast = out.coll == CollectiveKind::Broadcast;
  const auto ranges = plan_channels(out.count, out.nChannels);
  for (int ch = 0; ch < out.nChannels; ++ch) {
    const ChannelRange& range = ranges[static_cast<std::size_t>(ch)];
    if (range.channelCount == 0) continue;
    const RingTopology ring = build_ring(cluster, ch);
    const std::vector<Rank> chain = ring_chain(ring, out.root, out.coll);
    std::vector<std::vector<PrimitiveStep>> tmpl(static_cast<std::size_t>(k));
    for (Rank r = 0; r < k; ++r)
      tmpl[static_cast<std::size_t>(r)] =
          bcast ? ring_broadcast_steps(k, r, ring, out.root, out.inPlace)
                : ring_reduce_steps(k, r, ring, out.root);

    const LoopPlan plan =
        plan_loops(range, out.proto, k, 1, out.elem, SegmentLayout::Split);
    Elements loopStart = range.workOffset;
    for (const Loop& loop : plan.loops) {
      const Elements L = loop.loopCount;
      const Elements nCh = chunk_count_of(L, loop.chunkCount);
      for (Elements c = 0; c < nCh; ++c) {
        const Elements clen = chunk_length(L, loop.chunkCount, c);
        const Elements off = loopStart + c * loop.chunkCount;
        std::int32_t upstream = -1;
        for (Rank pos = 0; pos < k; ++pos) {
          const Rank r = chain[static_cast<std::size_t>(pos)];
          const PrimitiveStep& t = tmpl[static_cast<std::size_t>(r)].front();
          ChunkStep cs = base_step(t, ch, loop.loopIndex, static_cast<std::int32_t>(c), clen);
          switch (cs.kind) {
            case PrimitiveKind::Send:
              cs.src = bcast ? BufferRef{BufferKind::RecvBuf, off}
                             : BufferRef{BufferKind::SendBuf, off};
              break;
            case PrimitiveKind::CopySend:
              cs.src = {BufferKind::SendBuf, off};
              cs.dst = {BufferKind::RecvBuf, off};
              break;
            case PrimitiveKind::RecvCopySend:
            case PrimitiveKind::Recv:
              cs.dst = {BufferKind::RecvBuf, off};
              break;
            case PrimitiveKind::RecvReduceSend:
              cs.src = {BufferKind::SendBuf, off};
              break;
            case PrimitiveKind::RecvReduceCopy:
              cs.src = {BufferKind::SendBuf, off};
              cs.dst = {BufferKind::RecvBuf, off};
              break;
            default:
              throw std::logic_error("unexpected chain primitive");
          }
          const std::int32_t id = b.emit(cs);
          if (pos > 0) b.link(id, upstream);
          upstream = id;
        }
      }
      loopStart += L;
    }
  }
}

void expand_tree_allreduce(const ClusterSpec& cluster, Schedule& out, Builder& b) {
  const Rank k = cluster.nRanks;
  const DoubleBinaryTree dbt = build_double_binary_trees(cluster);
  const std::array<std::vector<RankTreeLinks>, 2> links = {
      rank_tree_links(cluster, dbt, 0), rank_tree_links(cluster, dbt, 1)};

  const auto ranges = plan_channels(out.count, out.nChannels);
  for (int ch = 0; ch < out.nChannels; ++ch) {
    const ChannelRange& range = ranges[static_cast<std::size_t>(ch)];
    if (range.channelCount == 0) continue;
    // Even channels climb tree 0, odd channels tree 1, spreading load over
    // both interior sets.
    const auto& rankLinks = links[static_cast<std::size_t>(ch % 2)];
    std::vector<std::vector<PrimitiveStep>> tmpl(static_cast<std::size_t>(k));
    for (Rank r = 0; r < k; ++r)
      tmpl[static_cast<std::size_t>(r)] =
          tree_allreduce_steps(r, rankLinks[static_cast<std::size_t>(r)]);

    const LoopPlan plan =
        plan_loops(range, out.proto, k, 1, out.elem, SegmentLayout::Split);
    Elements loopStart = range.workOffset;
    for (const Loop& loop : plan.loops) {
      const Elements L = loop.loopCount;
      const Elements nCh = chunk_count_of(L, loop.chunkCount);
      std::vector<std::vector<std::int32_t>> upIds(static_cast<std::size_t>(k));
      std::vector<std::vector<std::int32_t>> downIds(static_cast<std::size_t>(k));

      for (int phase = 0; phase < 2; ++phase) {
        for (Rank r = 0; r < k; ++r) {
          const auto& steps = tmpl[static_cast<std::size_t>(r)];
          const PrimitiveStep* t = nullptr;
          for (const auto& cand : steps)
            if (cand.stepIndex == phase) t = &cand;
          if (t == nullptr) continue;
          for (Elements c = 0; c < nCh; ++c) {
            const Elements clen = chunk_length(L, loop.chunkCount, c);
            const Elements off = loopStart + c * loop.chunkCount;
            ChunkStep cs = base_step(*t, ch, loop.loopIndex, static_cast<std::int32_t>(c), clen);
            if (out.overlapPhases) cs.streamId = static_cast<std::uint8_t>(phase);
            switch (cs.kind) {
              case PrimitiveKind::Send:
              case PrimitiveKind::RecvReduceSend:
                cs.src = {BufferKind::SendBuf, off};
                break;
              case PrimitiveKind::RecvReduceCopySend:
                cs.src = {BufferKind::SendBuf, off};
                cs.dst = {BufferKind::RecvBuf, off};
                break;
              case PrimitiveKind::RecvCopySend:
              case PrimitiveKind::Recv:
                cs.dst = {BufferKind::RecvBuf, off};
                break;
              default:
                throw std::logic_error("unexpected tree primitive");
            }
            const std::int32_t id = b.emit(cs);
            auto& ids = phase == 0 ? upIds : downIds;
            ids[static_cast<std::size_t>(r)].push_back(id);
          }
        }
      }

      // Reduce phase consumes the children's uploads; the broadcast phase
      // consumes the parent's downward send (the root pushes down from its
      // single combined step).
      for (Rank r = 0; r < k; ++r) {
        const RankTreeLinks& l = rankLinks[static_cast<std::size_t>(r)];
        const auto& up = upIds[static_cast<std::size_t>(r)];
        for (Elements c = 0; c < nCh; ++c) {
          if (!up.empty()) {
            for (Rank child : l.children)
              b.link(up[static_cast<std::size_t>(c)],
                     upIds[static_cast<std::size_t>(child)][static_cast<std::size_t>(c)]);
          }
          const auto& down = downIds[static_cast<std::size_t>(r)];
          if (!down.empty()) {
            const RankTreeLinks& pl = rankLinks[static_cast<std::size_t>(l.parent)];
            const bool parentIsRoot = pl.parent < 0;
            const auto& parentIds = parentIsRoot ? upIds[static_cast<std::size_t>(l.parent)]
                                                 : downIds[static_cast<std::size_t>(l.parent)];
            b.link(down[static_cast<std::size_t>(c)], parentIds[static_cast<std::size_t>(c)]);
          }
        }
      }
      loopStart += L;
    }
  }
}

}  // namespace

Schedule expand_schedule(const ClusterSpec& cluster, CollectiveKind coll, Algorithm algo,
                         Elements count, const ElementModel& elem,
                         const ProtocolParams& proto, int nChannels, Rank root,
                         bool inPlace, bool overlapPhases) {
  cluster.validate();
  if (!algorithm_supported(coll, algo))
    throw std::invalid_argument("expand_schedule: " + to_string(algo) +
                                " does not support " + to_string(coll));
  if (nChannels < 1) throw std::invalid_argument("expand_schedule: nChannels must be >= 1");
  if (count < 0) throw std::invalid_argument("expand_schedule: count must be >= 0");
  if (root < 0 || root >= cluster.nRanks)
    throw std::invalid_argument("expand_schedule: invalid root rank");

  Schedule out;
  out.coll = coll;
  out.algo = algo;
  out.mode = pipeline_mode(coll, algo);
  out.nRanks = cluster.nRanks;
  out.nChannels = nChannels;
  out.count = count;
  out.elem = elem;
  out.proto = proto;
  out.root = root;
  out.inPlace = inPlace;
  out.overlapPhases = overlapPhases;

  if (cluster.nRanks == 1 || count == 0) return out;  // local copy, nothing moves

  Builder b(out);
  if (algo == Algorithm::Tree) {
    expand_tree_allreduce(cluster, out, b);
    return out;
  }
  switch (coll) {
    case CollectiveKind::AllReduce:
      expand_ring_allreduce(cluster, out, b);
      break;
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
      expand_ring_blockwise(cluster, out, b);
      break;
    case CollectiveKind::Broadcast:
    case CollectiveKind::Reduce:
      expand_ring_chain(cluster, out, b);
      break;
  }
  return out;
}

}  // namespace collsim

// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/emulator.hpp"

#include <algorithm>
#include <queue>
#include <type_traits>

namespace collsim {

namespace {

template <typename T>
T reduce_one(RedOp op, T a, T b) {
  if constexpr (std::is_integral_v<T>) {
    using U = std::make_unsigned_t<T>;
    switch (op) {
      case RedOp::Sum:
        return static_cast<T>(static_cast<U>(a) + static_cast<U>(b));
      case RedOp::Prod:
        return static_cast<T>(static_cast<U>(a) * static_cast<U>(b));
      case RedOp::Min:
        return std::min(a, b);
      case RedOp::Max:
        return std::max(a, b);
    }
  } else {
    switch (op) {
      case RedOp::Sum:
        return a + b;
      case RedOp::Prod:
        return a * b;
      case RedOp::Min:
        return std::min(a, b);
      case RedOp::Max:
        return std::max(a, b);
    }
  }
  throw std::invalid_argument("unknown reduction op");
}

template <typename T>
void check_range(const std::vector<T>& buf, Elements off, Elements len, const char* what) {
  if (off < 0 || len < 0 || off + len > static_cast<Elements>(buf.size()))
    throw std::out_of_range(std::string("segment out of bounds in ") + what);
}

struct Shapes {
  Elements send = 0;
  Elements recv = 0;
};

Shapes expected_shapes(CollectiveKind coll, Rank k, Elements count) {
  switch (coll) {
    case CollectiveKind::AllReduce:
    case CollectiveKind::Broadcast:
    case CollectiveKind::Reduce:
      return {count, count};
    case CollectiveKind::AllGather:
      return {count, count * k};
    case CollectiveKind::ReduceScatter:
      return {count * k, count};
  }
  throw std::invalid_argument("unknown collective");
}

}  // namespace

Dtype dtype_of(const ValueVec& v) {
  switch (v.index()) {
    case 0: return Dtype::Int32;
    case 1: return Dtype::Int64;
    case 2: return Dtype::Float32;
    case 3: return Dtype::Float64;
  }
  throw std::invalid_argument("empty variant");
}

ValueVec make_value_vec(Dtype d, Elements n) {
  const auto sz = static_cast<std::size_t>(n);
  switch (d) {
    case Dtype::Int32: return std::vector<std::int32_t>(sz, 0);
    case Dtype::Int64: return std::vector<std::int64_t>(sz, 0);
    case Dtype::Float32: return std::vector<float>(sz, 0.f);
    case Dtype::Float64: return std::vector<double>(sz, 0.0);
  }
  throw std::invalid_argument("unknown dtype");
}

Elements value_size(const ValueVec& v) {
  return std::visit([](const auto& vec) { return static_cast<Elements>(vec.size()); }, v);
}

std::optional<ValueVec> apply_primitive(RankBuffers& local, const ChunkStep& step,
                                        const std::vector<ValueVec>& payloads, RedOp op) {
  if (payloads.size() != step.recvFrom.size())
    throw std::runtime_error("apply_primitive: missing in-flight payload (dependency violation)");
  for (const ValueVec& p : payloads)
    if (value_size(p) != step.payloadElems)
      throw std::runtime_error("apply_primitive: payload length mismatch");

  return std::visit(
      [&](auto& sendVec) -> std::optional<ValueVec> {
        using VecT = std::decay_t<decltype(sendVec)>;
        using T = typename VecT::value_type;
        auto& recvVec = std::get<VecT>(local.recvBuff);
        const Elements len = step.payloadElems;

        auto read_local = [&]() {
          const auto& src = step.src.buf == BufferKind::SendBuf ? sendVec : recvVec;
          check_range(src, step.src.offset, len, "local read");
          return std::vector<T>(src.begin() + step.src.offset,
                                src.begin() + step.src.offset + len);
        };

        std::vector<T> value;
        if (primitive_reduces(step.kind)) {
          value = read_local();
          for (const ValueVec& p : payloads) {
            const auto& pv = std::get<VecT>(p);
            for (Elements i = 0; i < len; ++i)
              value[static_cast<std::size_t>(i)] = reduce_one<T>(
                  op, value[static_cast<std::size_t>(i)], pv[static_cast<std::size_t>(i)]);
          }
        } else if (!payloads.empty()) {
          value = std::get<VecT>(payloads.front());
        } else {
          value = read_local();  // Send / CopySend originate locally
        }

        if (step.dst.buf != BufferKind::None) {
          auto& dst = step.dst.buf == BufferKind::RecvBuf ? recvVec : sendVec;
          check_range(dst, step.dst.offset, len, "local write");
          std::copy(value.begin(), value.end(), dst.begin() + step.dst.offset);
        }

        if (primitive_sends(step.kind)) return ValueVec(std::move(value));
        return std::nullopt;
      },
      local.sendBuff);
}

EmulationResult emulate(const Schedule& schedule, std::vector<RankBuffers> buffers,
                        RedOp op) {
  const Rank k = schedule.nRanks;
  if (static_cast<Rank>(buffers.size()) != k)
    throw std::invalid_argument("emulate: need one buffer set per rank");
  const Shapes want = expected_shapes(schedule.coll, k, schedule.count);
  const Dtype d = k > 0 ? dtype_of(buffers[0].sendBuff) : Dtype::Int32;
  for (const RankBuffers& b : buffers) {
    if (dtype_of(b.sendBuff) != d || dtype_of(b.recvBuff) != d)
      throw std::invalid_argument("emulate: mixed dtypes");
    if (value_size(b.sendBuff) != want.send || value_size(b.recvBuff) != want.recv)
      throw std::invalid_argument("emulate: buffer shape mismatch");
  }

  EmulationResult result;

  auto copy_region = [&](ValueVec& dst, Elements dstOff, const ValueVec& src,
                         Elements srcOff, Elements len) {
    std::visit(
        [&](auto& dv) {
          using VecT = std::decay_t<decltype(dv)>;
          const auto& sv = std::get<VecT>(src);
          std::copy(sv.begin() + srcOff, sv.begin() + srcOff + len, dv.begin() + dstOff);
        },
        dst);
  };

  // Single-rank collectives and empty payloads degenerate to local copies.
  if (k == 1 || schedule.count == 0) {
    if (schedule.count > 0) {
      RankBuffers& b = buffers[0];
      copy_region(b.recvBuff, 0, b.sendBuff, 0, schedule.count);
    }
    result.perRank = std::move(buffers);
    return result;
  }

  // In-place operation: the caller's payload already sits in its output slot.
  if (schedule.inPlace) {
    if (schedule.coll == CollectiveKind::AllGather) {
      for (Rank r = 0; r < k; ++r)
        copy_region(buffers[static_cast<std::size_t>(r)].recvBuff, r * schedule.count,
                    buffers[static_cast<std::size_t>(r)].sendBuff, 0, schedule.count);
    } else if (schedule.coll == CollectiveKind::Broadcast) {
      auto& b = buffers[static_cast<std::size_t>(schedule.root)];
      copy_region(b.recvBuff, 0, b.sendBuff, 0, schedule.count);
    }
  }

  const auto n = schedule.steps.size();
  std::vector<std::vector<std::int32_t>> consumers(n);
  std::vector<int> inDeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const ChunkStep& s = schedule.steps[i];
    inDeg[i] = static_cast<int>(s.recvDeps.size());
    for (std::size_t j = 0; j < s.recvDeps.size(); ++j)
      consumers[static_cast<std::size_t>(s.recvDeps[j])].push_back(
          static_cast<std::int32_t>(i));
  }

  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (inDeg[i] == 0) ready.push(static_cast<std::int32_t>(i));

  std::vector<std::optional<ValueVec>> posted(n);
  result.stepLog.reserve(n);
  while (!ready.empty()) {
    const std::int32_t id = ready.top();
    ready.pop();
    const ChunkStep& step = schedule.steps[static_cast<std::size_t>(id)];
    std::vector<ValueVec> payloads;
    payloads.reserve(step.recvDeps.size());
    for (std::size_t j = 0; j < step.recvDeps.size(); ++j) {
      const auto& p = posted[static_cast<std::size_t>(step.recvDeps[j])];
      if (!p) throw std::runtime_error("emulate: dependency executed without payload");
      payloads.push_back(*p);
    }
    auto forwarded =
        apply_primitive(buffers[static_cast<std::size_t>(step.rank)], step, payloads, op);
    if (primitive_sends(step.kind)) {
      if (!forwarded) throw std::logic_error("emulate: send step produced no payload");
      posted[static_cast<std::size_t>(id)] = std::move(*forwarded);
    }
    result.stepLog.push_back(id);
    for (std::int32_t c : consumers[static_cast<std::size_t>(id)])
      if (--inDeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }

  if (result.stepLog.size() != n)
    throw std::runtime_error("emulate: schedule has unsatisfiable dependencies");
  result.perRank = std::move(buffers);
  return result;
}

std::vector<ValueVec> oracle(CollectiveKind coll, Rank k,
                             const std::vector<RankBuffers>& buffers, RedOp op,
                             Rank root, Elements count) {
  if (static_cast<Rank>(buffers.size()) != k)
    throw std::invalid_argument("oracle: need one buffer set per rank");
  const Shapes want = expected_shapes(coll, k, count);
  const Dtype d = dtype_of(buffers[0].sendBuff);
  for (const RankBuffers& b : buffers)
    if (value_size(b.sendBuff) != want.send)
      throw std::invalid_argument("oracle: buffer shape mismatch");

  std::vector<ValueVec> out;
  out.reserve(static_cast<std::size_t>(k));
  for (Rank r = 0; r < k; ++r) out.push_back(make_value_vec(d, want.recv));

  std::visit(
      [&](const auto& probe) {
        using VecT = std::decay_t<decltype(probe)>;
        using T = typename VecT::value_type;
        auto send = [&](Rank r) -> const VecT& {
          return std::get<VecT>(buffers[static_cast<std::size_t>(r)].sendBuff);
        };
        auto recv = [&](Rank r) -> VecT& {
          return std::get<VecT>(out[static_cast<std::size_t>(r)]);
        };
        switch (coll) {
          case CollectiveKind::AllReduce: {
            std::vector<T> acc(send(0).begin(), send(0).end());
            for (Rank r = 1; r < k; ++r)
              for (Elements t = 0; t < count; ++t)
                acc[static_cast<std::size_t>(t)] =
                    reduce_one<T>(op, acc[static_cast<std::size_t>(t)],
                                  send(r)[static_cast<std::size_t>(t)]);
            for (Rank r = 0; r < k; ++r) recv(r) = acc;
            break;
          }
          case CollectiveKind::Reduce: {
            std::vector<T> acc(send(0).begin(), send(0).end());
            for (Rank r = 1; r < k; ++r)
              for (Elements t = 0; t < count; ++t)
                acc[static_cast<std::size_t>(t)] =
                    reduce_one<T>(op, acc[static_cast<std::size_t>(t)],
                                  send(r)[static_cast<std::size_t>(t)]);
            recv(root) = acc;
            break;
          }
          case CollectiveKind::Broadcast: {
            for (Rank r = 0; r < k; ++r) recv(r) = send(root);
            break;
          }
          case CollectiveKind::AllGather: {
            for (Rank r = 0; r < k; ++r)
              for (Rank b = 0; b < k; ++b)
                for (Elements t = 0; t < count; ++t)
                  recv(r)[static_cast<std::size_t>(b * count + t)] =
                      send(b)[static_cast<std::size_t>(t)];
            break;
          }
          case CollectiveKind::ReduceScatter: {
            for (Rank i = 0; i < k; ++i)
              for (Elements t = 0; t < count; ++t) {
                T acc = send(0)[static_cast<std::size_t>(i * count + t)];
                for (Rank r = 1; r < k; ++r)
                  acc = reduce_one<T>(op, acc,
                                      send(r)[static_cast<std::size_t>(i * count + t)]);
                recv(i)[static_cast<std::size_t>(t)] = acc;
              }
            break;
          }
        }
      },
      buffers[0].sendBuff);
  return out;
}

}  // namespace collsim

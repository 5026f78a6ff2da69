// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace collsim {

using Rank = std::int32_t;
using NodeId = std::int32_t;
using Bytes = std::int64_t;
using Elements = std::int64_t;
using Seconds = double;

enum class LinkClass : std::uint8_t { IntraNode = 0, InterNode = 1 };

enum class CollectiveKind : std::uint8_t {
  AllReduce = 0,
  Broadcast,
  Reduce,
  AllGather,
  ReduceScatter,
};

enum class Protocol : std::uint8_t { Simple = 0, LL, LL128 };

enum class Algorithm : std::uint8_t { Ring = 0, Tree };

enum class RedOp : std::uint8_t { Sum = 0, Prod, Min, Max };

enum class Dtype : std::uint8_t { Int32 = 0, Int64, Float32, Float64 };

enum class PrimitiveKind : std::uint8_t {
  Send = 0,
  Recv,
  CopySend,
  RecvCopySend,
  RecvReduceSend,
  RecvReduceCopy,
  RecvReduceCopySend,
};

enum class PipelineMode : std::uint8_t { Pipelined = 0, NonPipelined };

constexpr bool primitive_receives(PrimitiveKind k) {
  return k == PrimitiveKind::Recv || k == PrimitiveKind::RecvCopySend ||
         k == PrimitiveKind::RecvReduceSend || k == PrimitiveKind::RecvReduceCopy ||
         k == PrimitiveKind::RecvReduceCopySend;
}

constexpr bool primitive_sends(PrimitiveKind k) {
  return k == PrimitiveKind::Send || k == PrimitiveKind::CopySend ||
         k == PrimitiveKind::RecvCopySend || k == PrimitiveKind::RecvReduceSend ||
         k == PrimitiveKind::RecvReduceCopySend;
}

constexpr bool primitive_reduces(PrimitiveKind k) {
  return k == PrimitiveKind::RecvReduceSend || k == PrimitiveKind::RecvReduceCopy ||
         k == PrimitiveKind::RecvReduceCopySend;
}

constexpr bool primitive_copies(PrimitiveKind k) {
  return k == PrimitiveKind::CopySend || k == PrimitiveKind::RecvCopySend ||
         k == PrimitiveKind::RecvReduceCopy || k == PrimitiveKind::RecvReduceCopySend;
}

/// Up to three peers: a tree rank reaches at most two child nodes plus one
/// local chain neighbor.
class PeerList {
 public:
  void push_back(Rank r) {
    if (count_ >= peers_.size()) throw std::logic_error("PeerList overflow");
    peers_[count_++] = r;
  }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  Rank operator[](std::size_t i) const { return peers_[i]; }
  const Rank* begin() const { return peers_.data(); }
  const Rank* end() const { return peers_.data() + count_; }
  bool operator==(const PeerList& o) const {
    if (count_ != o.count_) return false;
    for (std::size_t i = 0; i < count_; ++i)
      if (peers_[i] != o.peers_[i]) return false;
    return true;
  }

 private:
  std::array<Rank, 3> peers_{};
  std::uint8_t count_ = 0;
};

Bytes dtype_bytes(Dtype d);

std::string to_string(CollectiveKind c);
std::string to_string(Protocol p);
std::string to_string(Algorithm a);
std::string to_string(RedOp op);
std::string to_string(Dtype d);
std::string to_string(PrimitiveKind k);
std::string to_string(LinkClass c);

CollectiveKind collective_from_string(const std::string& s);
Protocol protocol_from_string(const std::string& s);
Algorithm algorithm_from_string(const std::string& s);
RedOp redop_from_string(const std::string& s);
Dtype dtype_from_string(const std::string& s);

}  // namespace collsim

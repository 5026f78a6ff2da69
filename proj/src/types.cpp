// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/types.hpp"

#include <algorithm>
#include <cctype>

namespace collsim {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Bytes dtype_bytes(Dtype d) {
  switch (d) {
    case Dtype::Int32:
    case Dtype::Float32:
      return 4;
    case Dtype::Int64:
    case Dtype::Float64:
      return 8;
  }
  throw std::invalid_argument("unknown dtype");
}

std::string to_string(CollectiveKind c) {
  switch (c) {
    case CollectiveKind::AllReduce: return "allreduce";
    case CollectiveKind::Broadcast: return "broadcast";
    case CollectiveKind::Reduce: return "reduce";
    case CollectiveKind::AllGather: return "allgather";
    case CollectiveKind::ReduceScatter: return "reducescatter";
  }
  return "?";
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Simple: return "Simple";
    case Protocol::LL: return "LL";
    case Protocol::LL128: return "LL128";
  }
  return "?";
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Ring: return "ring";
    case Algorithm::Tree: return "tree";
  }
  return "?";
}

std::string to_string(RedOp op) {
  switch (op) {
    case RedOp::Sum: return "sum";
    case RedOp::Prod: return "prod";
    case RedOp::Min: return "min";
    case RedOp::Max: return "max";
  }
  return "?";
}

std::string to_string(Dtype d) {
  switch (d) {
    case Dtype::Int32: return "int32";
    case Dtype::Int64: return "int64";
    case Dtype::Float32: return "float32";
    case Dtype::Float64: return "float64";
  }
  return "?";
}

std::string to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Send: return "send";
    case PrimitiveKind::Recv: return "recv";
    case PrimitiveKind::CopySend: return "copySend";
    case PrimitiveKind::RecvCopySend: return "recvCopySend";
    case PrimitiveKind::RecvReduceSend: return "recvReduceSend";
    case PrimitiveKind::RecvReduceCopy: return "recvReduceCopy";
    case PrimitiveKind::RecvReduceCopySend: return "recvReduceCopySend";
  }
  return "?";
}

std::string to_string(LinkClass c) {
  return c == LinkClass::IntraNode ? "intra" : "inter";
}

CollectiveKind collective_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "allreduce") return CollectiveKind::AllReduce;
  if (v == "broadcast") return CollectiveKind::Broadcast;
  if (v == "reduce") return CollectiveKind::Reduce;
  if (v == "allgather") return CollectiveKind::AllGather;
  if (v == "reducescatter") return CollectiveKind::ReduceScatter;
  throw std::invalid_argument("unknown collective: " + s);
}

Protocol protocol_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "simple") return Protocol::Simple;
  if (v == "ll") return Protocol::LL;
  if (v == "ll128") return Protocol::LL128;
  throw std::invalid_argument("unknown protocol: " + s);
}

Algorithm algorithm_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "ring") return Algorithm::Ring;
  if (v == "tree") return Algorithm::Tree;
  throw std::invalid_argument("unknown algorithm: " + s);
}

RedOp redop_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "sum") return RedOp::Sum;
  if (v == "prod") return RedOp::Prod;
  if (v == "min") return RedOp::Min;
  if (v == "max") return RedOp::Max;
  throw std::invalid_argument("unknown reduction op: " + s);
}

Dtype dtype_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "int32") return Dtype::Int32;
  if (v == "int64") return Dtype::Int64;
  if (v == "float32") return Dtype::Float32;
  if (v == "float64") return Dtype::Float64;
  throw std::invalid_argument("unknown dtype: " + s);
}

}  // namespace collsim

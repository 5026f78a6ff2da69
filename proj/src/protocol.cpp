// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/protocol.hpp"

namespace collsim {

namespace {
constexpr Bytes kKiB = 1024;
}

ProtocolParams protocol_params(Protocol p, int nSlots) {
  if (nSlots < 1) throw std::invalid_argument("protocol_params: nSlots must be >= 1");
  ProtocolParams params;
  params.kind = p;
  params.nSlots = nSlots;
  switch (p) {
    case Protocol::Simple:
      params.slotBytes = 512 * kKiB;
      params.flagGranuleBytes = 1;
      params.payloadPerGranuleBytes = 1;
      params.hopLatency = 6e-6;
      break;
    case Protocol::LL:
      params.slotBytes = 32 * kKiB;
      params.flagGranuleBytes = 8;  // 4B data + 4B flag
      params.payloadPerGranuleBytes = 4;
      params.hopLatency = 1e-6;
      break;
    case Protocol::LL128:
      params.slotBytes = 600 * kKiB;
      params.flagGranuleBytes = 128;  // 120B data + 8B flag
      params.payloadPerGranuleBytes = 120;
      params.hopLatency = 2e-6;
      break;
  }
  params.totalChannelBufferBytes = params.slotBytes * nSlots;
  params.effectiveSlotBytes =
      params.slotBytes * params.payloadPerGranuleBytes / params.flagGranuleBytes;
  params.bandwidthEfficiency = static_cast<double>(params.payloadPerGranuleBytes) /
                               static_cast<double>(params.flagGranuleBytes);
  return params;
}

Bytes wire_bytes(const ProtocolParams& p, Bytes payload) {
  if (payload < 0) throw std::invalid_argument("wire_bytes: payload must be >= 0");
  const Bytes granules =
      (payload + p.payloadPerGranuleBytes - 1) / p.payloadPerGranuleBytes;
  return granules * p.flagGranuleBytes;
}

Bytes wire_bytes(Protocol p, Bytes payload) {
  return wire_bytes(protocol_params(p, 8), payload);
}

Protocol select_protocol(Bytes msgBytes, std::optional<Protocol> override,
                         bool ll128Supported, const Thresholds& t) {
  if (msgBytes < 0) throw std::invalid_argument("select_protocol: msgBytes must be >= 0");
  if (override) {
    if (*override == Protocol::LL128 && !ll128Supported)
      throw std::invalid_argument(
          "select_protocol: LL128 requested but not supported on this system");
    return *override;
  }
  if (msgBytes < t.protoSmall) return Protocol::LL;
  if (msgBytes < t.protoLarge && ll128Supported) return Protocol::LL128;
  return Protocol::Simple;
}

bool algorithm_supported(CollectiveKind coll, Algorithm algo) {
  if (algo == Algorithm::Tree) return coll == CollectiveKind::AllReduce;
  return true;
}

Algorithm select_algorithm(CollectiveKind coll, Bytes msgBytes,
                           std::optional<Algorithm> override, const Thresholds& t) {
  if (override) {
    if (!algorithm_supported(coll, *override))
      throw std::invalid_argument("select_algorithm: " + to_string(*override) +
                                  " does not support " + to_string(coll));
    return *override;
  }
  if (coll == CollectiveKind::AllReduce && msgBytes < t.treeThreshold) return Algorithm::Tree;
  return Algorithm::Ring;
}

}  // namespace collsim

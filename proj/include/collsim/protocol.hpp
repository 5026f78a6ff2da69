// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "collsim/types.hpp"

namespace collsim {

/// Framing, buffer, and latency constants of one transfer protocol.
struct ProtocolParams {
  Protocol kind = Protocol::Simple;
  int nSlots = 8;
  Bytes totalChannelBufferBytes = 0;  // slotBytes * nSlots
  Bytes slotBytes = 0;                // buffer capacity per slot
  Bytes effectiveSlotBytes = 0;       // payload capacity per slot
  Bytes flagGranuleBytes = 1;         // data+flag unit on the wire
  Bytes payloadPerGranuleBytes = 1;   // payload bytes within one granule
  double bandwidthEfficiency = 1.0;   // payloadPerGranule / flagGranule
  Seconds hopLatency = 0.0;
};

struct Thresholds {
  Bytes protoSmall = 64 * 1024;        // below: LL
  Bytes protoLarge = 1024 * 1024;      // below (and LL128 available): LL128
  Bytes treeThreshold = 1024 * 1024;   // AllReduce below: Tree
};

ProtocolParams protocol_params(Protocol p, int nSlots);

/// Bytes that actually cross the wire for `payload` bytes of user data,
/// rounded up to whole granules.
Bytes wire_bytes(Protocol p, Bytes payload);
Bytes wire_bytes(const ProtocolParams& p, Bytes payload);

Protocol select_protocol(Bytes msgBytes, std::optional<Protocol> override,
                         bool ll128Supported, const Thresholds& t = {});

Algorithm select_algorithm(CollectiveKind coll, Bytes msgBytes,
                           std::optional<Algorithm> override, const Thresholds& t = {});

/// Tree is implemented for AllReduce only; everything else rides the ring.
bool algorithm_supported(CollectiveKind coll, Algorithm algo);

}  // namespace collsim

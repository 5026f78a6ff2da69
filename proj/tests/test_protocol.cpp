// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "collsim/protocol.hpp"

using namespace collsim;

namespace {
constexpr Bytes KiB = 1024;
constexpr Bytes MiB = 1024 * 1024;
}  // namespace

TEST_CASE("protocol constants at the default slot count") {
  const ProtocolParams simple = protocol_params(Protocol::Simple, 8);
  CHECK(simple.totalChannelBufferBytes == 4 * MiB);
  CHECK(simple.slotBytes == 512 * KiB);
  CHECK(simple.effectiveSlotBytes == 512 * KiB);
  CHECK(simple.bandwidthEfficiency == 1.0);
  CHECK(simple.hopLatency == 6e-6);

  const ProtocolParams ll = protocol_params(Protocol::LL, 8);
  CHECK(ll.totalChannelBufferBytes == 256 * KiB);
  CHECK(ll.slotBytes == 32 * KiB);
  CHECK(ll.effectiveSlotBytes == 16 * KiB);
  CHECK(ll.bandwidthEfficiency == 0.5);
  CHECK(ll.hopLatency == 1e-6);

  const ProtocolParams ll128 = protocol_params(Protocol::LL128, 8);
  CHECK(ll128.totalChannelBufferBytes == 4800 * KiB);
  CHECK(ll128.slotBytes == 600 * KiB);
  CHECK(ll128.effectiveSlotBytes == 576000);  // 562.5 KiB
  CHECK(ll128.effectiveSlotBytes * 2 == 1125 * KiB);
  CHECK(ll128.bandwidthEfficiency == 0.9375);
  CHECK(ll128.hopLatency == 2e-6);
}

TEST_CASE("protocol params scale with the slot count") {
  for (Protocol p : {Protocol::Simple, Protocol::LL, Protocol::LL128}) {
    for (int nSlots : {1, 2, 8, 16}) {
      const ProtocolParams params = protocol_params(p, nSlots);
      CHECK(params.totalChannelBufferBytes == params.slotBytes * nSlots);
      CHECK(params.effectiveSlotBytes ==
            params.slotBytes * params.payloadPerGranuleBytes / params.flagGranuleBytes);
    }
  }
  CHECK_THROWS_AS(protocol_params(Protocol::LL, 0), std::invalid_argument);
}

TEST_CASE("wire bytes per protocol framing") {
  CHECK(wire_bytes(Protocol::Simple, 1024) == 1024);
  CHECK(wire_bytes(Protocol::LL, 4) == 8);
  CHECK(wire_bytes(Protocol::LL128, 120) == 128);

  CHECK(wire_bytes(Protocol::LL, 0) == 0);
  CHECK(wire_bytes(Protocol::LL, 1) == 8);
  CHECK(wire_bytes(Protocol::LL, 5) == 16);
  CHECK(wire_bytes(Protocol::LL128, 121) == 256);
  CHECK_THROWS_AS(wire_bytes(Protocol::LL, -1), std::invalid_argument);
}

TEST_CASE("wire bytes monotonicity and inflation limits") {
  for (Protocol p : {Protocol::Simple, Protocol::LL, Protocol::LL128}) {
    Bytes prev = 0;
    for (Bytes payload = 0; payload <= 4096; payload += 7) {
      const Bytes w = wire_bytes(p, payload);
      CHECK(w >= payload);
      CHECK(w >= prev);
      prev = w;
    }
  }
  // At granule multiples the inflation is exact.
  CHECK(wire_bytes(Protocol::LL, 4096) == 2 * 4096);
  CHECK(wire_bytes(Protocol::LL128, 120 * 64) == 128 * 64);
}

TEST_CASE("protocol selection thresholds") {
  CHECK(select_protocol(4 * KiB, std::nullopt, true) == Protocol::LL);
  CHECK(select_protocol(512 * KiB, std::nullopt, false) == Protocol::Simple);
  CHECK(select_protocol(512 * KiB, std::nullopt, true) == Protocol::LL128);
  CHECK(select_protocol(16 * MiB, std::nullopt, true) == Protocol::Simple);
  CHECK(select_protocol(0, std::nullopt, true) == Protocol::LL);

  CHECK(select_protocol(16 * MiB, Protocol::LL, true) == Protocol::LL);
  CHECK_THROWS_AS(select_protocol(1024, Protocol::LL128, false), std::invalid_argument);

  // Never LL128 without support and without an override.
  for (Bytes b : {Bytes{0}, Bytes{1}, 64 * KiB, 512 * KiB, 1 * MiB, 64 * MiB})
    CHECK(select_protocol(b, std::nullopt, false) != Protocol::LL128);
}

TEST_CASE("algorithm selection and support matrix") {
  CHECK(select_algorithm(CollectiveKind::AllGather, 123, std::nullopt) == Algorithm::Ring);
  CHECK(select_algorithm(CollectiveKind::AllReduce, 32 * KiB, std::nullopt) ==
        Algorithm::Tree);
  CHECK(select_algorithm(CollectiveKind::AllReduce, 16 * MiB, std::nullopt) ==
        Algorithm::Ring);
  CHECK_THROWS_AS(select_algorithm(CollectiveKind::Broadcast, 1024, Algorithm::Tree),
                  std::invalid_argument);
  CHECK(algorithm_supported(CollectiveKind::AllReduce, Algorithm::Tree));
  CHECK_FALSE(algorithm_supported(CollectiveKind::ReduceScatter, Algorithm::Tree));
}

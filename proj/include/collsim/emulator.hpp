// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "collsim/schedule.hpp"
#include "collsim/types.hpp"

namespace collsim {

/// Typed element storage; the active alternative is the dtype.
using ValueVec = std::variant<std::vector<std::int32_t>, std::vector<std::int64_t>,
                              std::vector<float>, std::vector<double>>;

struct RankBuffers {
  ValueVec sendBuff;
  ValueVec recvBuff;
};

struct EmulationResult {
  std::vector<RankBuffers> perRank;
  std::vector<std::int32_t> stepLog;  // schedule step ids in execution order
};

Dtype dtype_of(const ValueVec& v);
ValueVec make_value_vec(Dtype d, Elements n);
Elements value_size(const ValueVec& v);

/// Executes one primitive against a rank's local buffers. `payloads` must
/// carry exactly the step's receive dependencies in order; returns the
/// forwarded payload for *Send kinds. Integer reductions wrap; this is the
/// semantics the oracle uses too, so results stay comparable bit for bit.
std::optional<ValueVec> apply_primitive(RankBuffers& local, const ChunkStep& step,
                                        const std::vector<ValueVec>& payloads, RedOp op);

/// Runs the full schedule on real buffers. Buffers are shaped by the
/// collective's contract relative to schedule.count (AllGather recv holds
/// k blocks, ReduceScatter send holds k blocks, everything else is flat).
EmulationResult emulate(const Schedule& schedule, std::vector<RankBuffers> buffers,
                        RedOp op);

/// Direct mathematical evaluation, no schedules: the independent reference
/// the emulator is checked against. Regions a collective leaves untouched
/// come back zero-initialized.
std::vector<ValueVec> oracle(CollectiveKind coll, Rank k,
                             const std::vector<RankBuffers>& buffers, RedOp op,
                             Rank root, Elements count);

}  // namespace collsim

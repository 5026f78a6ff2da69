// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "collsim/config.hpp"
#include "collsim/goal.hpp"

namespace collsim {

/// A collective call resolved against the selection heuristics: ready to
/// emulate, simulate, or serialize.
struct PlannedRun {
  Protocol protocol = Protocol::Simple;
  Algorithm algorithm = Algorithm::Ring;
  Elements count = 0;
  Schedule schedule;
};

PlannedRun plan_run(const RunConfig& cfg, CollectiveKind coll, Bytes msgBytes,
                    Dtype dtype, std::optional<Protocol> forceProto = std::nullopt,
                    std::optional<Algorithm> forceAlgo = std::nullopt);

/// Exit codes: 0 success, 1 verification failure, 2 config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, const std::string& outDir, std::ostream& out);
int cmd_explain(const RunConfig& cfg, std::ostream& out);

}  // namespace collsim

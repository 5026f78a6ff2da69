// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "collsim/simtime.hpp"

namespace collsim {

/// Everything one CLI invocation needs: the cluster, the collective call,
/// engine knobs, and output selection. Loaded from a JSON config file;
/// --override patches individual paths.
struct RunConfig {
  ClusterSpec cluster;
  CollectiveKind collective = CollectiveKind::AllReduce;
  Bytes msgBytes = 1024 * 1024;
  Dtype dtype = Dtype::Float32;
  RedOp redOp = RedOp::Sum;
  Rank root = 0;
  bool inPlace = false;
  std::uint64_t seed = 1;
  bool outCsv = true;
  bool outGoal = false;
  bool outJson = false;

  std::optional<Protocol> protocolOverride;
  std::optional<Algorithm> algorithmOverride;
  SimConfig sim;

  std::vector<Bytes> sweepSizes;  // empty: just msgBytes

  // verify subcommand fan-out; empty lists fall back to the single values.
  std::vector<CollectiveKind> verifyCollectives;
  std::vector<Bytes> verifySizes;
  std::vector<Dtype> verifyDtypes;
  std::vector<RedOp> verifyRedOps;
  int verifyCases = 3;
};

/// Thrown for malformed or contradictory configs; message carries the JSON
/// path of the offending field and the violated rule.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides = {});

/// The built-in defaults: a 16-node single-GPU-per-node cluster.
RunConfig default_config();

/// Human-readable listing of every config field and its default.
std::string describe_defaults();

}  // namespace collsim

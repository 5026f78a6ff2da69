// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "collsim/emulator.hpp"

namespace collsim {

namespace {

std::string fmt_seconds(Seconds s) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(9) << s;
  return out.str();
}

ValueVec random_buffer(Dtype d, Elements n, RedOp op, std::mt19937_64& rng) {
  ValueVec v = make_value_vec(d, n);
  std::visit(
      [&](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        if constexpr (std::is_integral_v<T>) {
          // Keep products small; wraparound stays exact either way.
          std::uniform_int_distribution<std::int64_t> dist(op == RedOp::Prod ? 1 : -50,
                                                           op == RedOp::Prod ? 3 : 50);
          for (auto& x : vec) x = static_cast<T>(dist(rng));
        } else {
          std::uniform_real_distribution<double> dist(0.0, 1.0);
          for (auto& x : vec) x = static_cast<T>(dist(rng));
        }
      },
      v);
  return v;
}

struct ErrStat {
  bool exact = true;
  double maxRel = 0.0;
};

ErrStat compare_buffers(const ValueVec& got, const ValueVec& want) {
  ErrStat stat;
  std::visit(
      [&](const auto& g) {
        using VecT = std::decay_t<decltype(g)>;
        const auto& w = std::get<VecT>(want);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (g[i] == w[i]) continue;
          stat.exact = false;
          const double a = static_cast<double>(g[i]);
          const double b = static_cast<double>(w[i]);
          const double scale = std::max({std::fabs(a), std::fabs(b), 1e-30});
          stat.maxRel = std::max(stat.maxRel, std::fabs(a - b) / scale);
        }
      },
      got);
  return stat;
}

double rel_tolerance(Dtype d, RedOp op) {
  if (op == RedOp::Min || op == RedOp::Max) return 0.0;
  switch (d) {
    case Dtype::Int32:
    case Dtype::Int64:
      return 0.0;
    case Dtype::Float32:
      return 1e-5;
    case Dtype::Float64:
      return 1e-12;
  }
  return 0.0;
}

std::vector<Algorithm> algorithms_for(const RunConfig& cfg, CollectiveKind coll) {
  if (cfg.algorithmOverride) return {*cfg.algorithmOverride};
  if (coll == CollectiveKind::AllReduce) return {Algorithm::Ring, Algorithm::Tree};
  return {Algorithm::Ring};
}

std::string run_tag(CollectiveKind coll, Algorithm algo, Protocol proto, Bytes bytes) {
  return to_string(coll) + "_" + to_string(algo) + "_" + to_string(proto) + "_" +
         std::to_string(bytes);
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::string timeline_json(const Timeline& t) {
  std::ostringstream out;
  out << "{\n  \"makespan_s\": " << fmt_seconds(t.makespan) << ",\n";
  out << "  \"perRankFinish_s\": [";
  for (std::size_t i = 0; i < t.perRankFinish.size(); ++i)
    out << (i ? ", " : "") << fmt_seconds(t.perRankFinish[i]);
  out << "],\n  \"events\": [\n";
  const char* kinds[] = {"sendPost", "recvComplete", "reduceDone", "copyDone"};
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const Event& e = t.events[i];
    out << "    {\"rank\": " << e.rank << ", \"channel\": " << e.channelId
        << ", \"loop\": " << e.loopIndex << ", \"step\": " << e.stepIndex << ", \"kind\": \""
        << kinds[static_cast<std::size_t>(e.kind)] << "\", \"start\": " << fmt_seconds(e.start)
        << ", \"end\": " << fmt_seconds(e.end) << ", \"bytesOnWire\": " << e.bytesOnWire
        << ", \"peer\": " << e.peer << "}" << (i + 1 < t.events.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

}  // namespace

PlannedRun plan_run(const RunConfig& cfg, CollectiveKind coll, Bytes msgBytes,
                    Dtype dtype, std::optional<Protocol> forceProto,
                    std::optional<Algorithm> forceAlgo) {
  PlannedRun run;
  const std::optional<Protocol> protoOverride =
      forceProto ? forceProto : cfg.protocolOverride;
  const std::optional<Algorithm> algoOverride =
      forceAlgo ? forceAlgo : cfg.algorithmOverride;
  run.protocol = select_protocol(msgBytes, protoOverride, cfg.sim.ll128Supported,
                                 cfg.sim.thresholds);
  run.algorithm = select_algorithm(coll, msgBytes, algoOverride, cfg.sim.thresholds);
  const ElementModel elem = element_model(coll, dtype_bytes(dtype));
  run.count = partition_count(coll, msgBytes, dtype_bytes(dtype));
  const ProtocolParams proto = protocol_params(run.protocol, cfg.sim.nSlots);
  run.schedule = expand_schedule(cfg.cluster, coll, run.algorithm, run.count, elem, proto,
                                 cfg.sim.nChannels, cfg.root, cfg.inPlace,
                                 cfg.sim.overlapPhases);
  return run;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const auto collectives = cfg.verifyCollectives.empty()
                               ? std::vector<CollectiveKind>{cfg.collective}
                               : cfg.verifyCollectives;
  const auto sizes =
      cfg.verifySizes.empty() ? std::vector<Bytes>{cfg.msgBytes} : cfg.verifySizes;
  const auto dtypes =
      cfg.verifyDtypes.empty() ? std::vector<Dtype>{cfg.dtype} : cfg.verifyDtypes;
  const auto redOps =
      cfg.verifyRedOps.empty() ? std::vector<RedOp>{cfg.redOp} : cfg.verifyRedOps;

  const Rank k = cfg.cluster.nRanks;
  int failures = 0;
  int cases = 0;
  std::mt19937_64 rng(cfg.seed);
  for (CollectiveKind coll : collectives) {
    for (Algorithm algo : algorithms_for(cfg, coll)) {
      for (Bytes bytes : sizes) {
        for (Dtype dtype : dtypes) {
          if (bytes % dtype_bytes(dtype) != 0) continue;
          for (RedOp op : redOps) {
            for (int c = 0; c < cfg.verifyCases; ++c) {
              const PlannedRun run =
                  plan_run(cfg, coll, bytes, dtype, std::nullopt, algo);
              const Elements count = run.count;
              const Elements sendLen =
                  coll == CollectiveKind::ReduceScatter ? count * k : count;
              const Elements recvLen =
                  coll == CollectiveKind::AllGather ? count * k : count;
              std::vector<RankBuffers> buffers;
              buffers.reserve(static_cast<std::size_t>(k));
              for (Rank r = 0; r < k; ++r)
                buffers.push_back(RankBuffers{random_buffer(dtype, sendLen, op, rng),
                                              make_value_vec(dtype, recvLen)});
              const auto expected = oracle(coll, k, buffers, op, cfg.root, count);
              const auto result = emulate(run.schedule, std::move(buffers), op);

              ErrStat worst;
              for (Rank r = 0; r < k; ++r) {
                const ErrStat s = compare_buffers(
                    result.perRank[static_cast<std::size_t>(r)].recvBuff,
                    expected[static_cast<std::size_t>(r)]);
                worst.exact = worst.exact && s.exact;
                worst.maxRel = std::max(worst.maxRel, s.maxRel);
              }
              const bool pass = worst.maxRel <= rel_tolerance(dtype, op);
              ++cases;
              if (!pass) ++failures;
              out << (pass ? "PASS" : "FAIL") << " " << to_string(coll) << " "
                  << to_string(algo) << " k=" << k << " bytes=" << bytes << " "
                  << to_string(dtype) << " " << to_string(op) << " case=" << c
                  << " maxRelErr=" << worst.maxRel << "\n";
            }
          }
        }
      }
    }
  }
  out << (failures == 0 ? "VERIFY OK" : "VERIFY FAILED") << " (" << cases - failures << "/"
      << cases << " cases)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_simulate(const RunConfig& cfg, const std::string& outDir, std::ostream& out) {
  namespace fs = std::filesystem;
  const fs::path dir = outDir.empty() ? fs::path(".") : fs::path(outDir);
  fs::create_directories(dir);

  const auto sizes =
      cfg.sweepSizes.empty() ? std::vector<Bytes>{cfg.msgBytes} : cfg.sweepSizes;

  std::ostringstream csv;
  csv << "collective,algorithm,protocol,bytes,makespan_s,internode_bytes\n";
  for (Bytes bytes : sizes) {
    const PlannedRun run = plan_run(cfg, cfg.collective, bytes, cfg.dtype);
    const Timeline t = simulate(run.schedule, cfg.cluster, cfg.sim);
    const Bytes inter = internode_bytes(t, cfg.cluster);
    csv << to_string(cfg.collective) << "," << to_string(run.algorithm) << ","
        << to_string(run.protocol) << "," << bytes << "," << fmt_seconds(t.makespan) << ","
        << inter << "\n";
    const std::string tag = run_tag(cfg.collective, run.algorithm, run.protocol, bytes);
    if (cfg.outGoal) {
      const GoalProgram p = emit_goal(run.schedule, cfg.cluster, cfg.sim, &t);
      write_file(dir / (tag + ".goal"), serialize_goal(p));
      write_file(dir / (tag + ".goal.json"), goal_to_json(p));
    }
    if (cfg.outJson) write_file(dir / (tag + "_timeline.json"), timeline_json(t));
    out << tag << ": makespan " << fmt_seconds(t.makespan) << " s, internode " << inter
        << " B\n";
  }
  if (cfg.outCsv) write_file(dir / "results.csv", csv.str());
  return 0;
}

int cmd_explain(const RunConfig& cfg, std::ostream& out) {
  const PlannedRun run = plan_run(cfg, cfg.collective, cfg.msgBytes, cfg.dtype);
  out << "collective : " << to_string(cfg.collective) << "\n";
  out << "message    : " << cfg.msgBytes << " bytes (" << to_string(cfg.dtype) << ", "
      << to_string(cfg.redOp) << ")\n";
  out << "cluster    : " << cfg.cluster.nRanks << " ranks on " << cfg.cluster.nNodes()
      << " nodes\n";
  out << "algorithm  : " << to_string(run.algorithm)
      << (cfg.algorithmOverride ? " (override)" : " (selected)") << "\n";
  out << "protocol   : " << to_string(run.protocol)
      << (cfg.protocolOverride ? " (override)" : " (selected)") << "\n";
  const ProtocolParams proto = protocol_params(run.protocol, cfg.sim.nSlots);
  out << "buffers    : slot " << proto.slotBytes << " B, effective " << proto.effectiveSlotBytes
      << " B, " << proto.nSlots << " slots, channel buffer " << proto.totalChannelBufferBytes
      << " B\n";
  out << "channels   : " << cfg.sim.nChannels << "\n";

  const ElementModel elem = element_model(cfg.collective, dtype_bytes(cfg.dtype));
  const Elements segs =
      segments_per_loop(cfg.collective, run.algorithm, cfg.cluster.nRanks);
  const SegmentLayout layout = segment_layout(cfg.collective, run.algorithm);
  out << "partition  : count " << run.count << " elements of " << elem.elementBytes
      << " B, segmentsPerLoop " << segs << "\n";
  for (const ChannelRange& range : plan_channels(run.count, cfg.sim.nChannels)) {
    const LoopPlan plan =
        plan_loops(range, proto, cfg.cluster.nRanks, segs, elem, layout);
    out << "  channel " << range.channelId << ": offset " << range.workOffset << ", count "
        << range.channelCount << ", loops " << plan.loops.size();
    if (!plan.loops.empty()) {
      const Loop& l0 = plan.loops.front();
      const Loop& ln = plan.loops.back();
      out << " (chunkCount " << l0.chunkCount << ", nChunks " << l0.nChunks
          << ", lastChunkCount " << ln.lastChunkCount << ")";
    }
    out << "\n";
  }

  out << "steps      : rank 0, one loop\n";
  const Rank k = cfg.cluster.nRanks;
  std::vector<PrimitiveStep> steps;
  if (k >= 2) {
    const RingTopology ring = build_ring(cfg.cluster, 0);
    switch (run.algorithm) {
      case Algorithm::Tree: {
        const DoubleBinaryTree dbt = build_double_binary_trees(cfg.cluster);
        steps = tree_allreduce_steps(0, rank_tree_links(cfg.cluster, dbt, 0)[0]);
        break;
      }
      case Algorithm::Ring:
        switch (cfg.collective) {
          case CollectiveKind::AllReduce:
            steps = ring_allreduce_steps(k, 0, ring);
            break;
          case CollectiveKind::AllGather:
            steps = ring_allgather_steps(k, 0, ring, cfg.inPlace);
            break;
          case CollectiveKind::ReduceScatter:
            steps = ring_reducescatter_steps(k, 0, ring);
            break;
          case CollectiveKind::Broadcast:
            steps = ring_broadcast_steps(k, 0, ring, cfg.root, cfg.inPlace);
            break;
          case CollectiveKind::Reduce:
            steps = ring_reduce_steps(k, 0, ring, cfg.root);
            break;
        }
        break;
    }
  }
  for (const PrimitiveStep& s : steps) {
    out << "  step " << s.stepIndex << ": " << to_string(s.kind);
    if (!s.recvFrom.empty()) {
      out << " from";
      for (Rank r : s.recvFrom) out << " " << r;
    }
    if (!s.sendTo.empty()) {
      out << " to";
      for (Rank r : s.sendTo) out << " " << r;
    }
    out << "\n";
  }
  if (steps.empty()) out << "  (no communication steps)\n";
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"collsim: collective-communication planning, verification, and timing"};
  app.require_subcommand(0, 1);

  std::string configPath;
  std::string outDir;
  std::uint64_t seedArg = 0;
  bool seedSet = false;
  bool showDefaults = false;
  std::vector<std::string> overrides;

  auto addCommon = [&](CLI::App* cmd) {
    cmd->add_option("--config", configPath, "JSON config file");
    cmd->add_option("--out", outDir, "output directory");
    cmd->add_option("--seed", seedArg, "seed override")->each([&](const std::string&) {
      seedSet = true;
    });
    cmd->add_option("--override", overrides, "config override key=value (repeatable)");
  };

  CLI::App* verify = app.add_subcommand("verify", "emulate against the oracle");
  CLI::App* simulateCmd = app.add_subcommand("simulate", "timing simulation and reports");
  CLI::App* explain = app.add_subcommand("explain", "show selection and partition plan");
  explain->add_flag("--defaults", showDefaults, "print all config defaults");
  addCommon(verify);
  addCommon(simulateCmd);
  addCommon(explain);

  std::vector<const char*> argv;
  argv.push_back("collsim");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (explain->parsed() && showDefaults) {
      out << describe_defaults();
      return 0;
    }
    RunConfig cfg =
        configPath.empty() ? default_config() : load_config(configPath, overrides);
    if (configPath.empty() && !overrides.empty()) {
      cfg = parse_config_text("{}", overrides);
    }
    if (seedSet) cfg.seed = seedArg;

    if (verify->parsed()) return cmd_verify(cfg, out);
    if (simulateCmd->parsed()) return cmd_simulate(cfg, outDir, out);
    if (explain->parsed()) return cmd_explain(cfg, out);
    out << app.help();
    return 0;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace collsim

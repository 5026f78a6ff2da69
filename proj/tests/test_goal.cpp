// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "collsim/goal.hpp"

using namespace collsim;

namespace {

GoalProgram example_program() {
  GoalProgram p;
  p.nRanks = 2;
  GoalRankBlock r0;
  r0.rank = 0;
  r0.ops.push_back(GoalOp{1, GoalOpKind::Send, 1024, 0, 1, 7});
  GoalRankBlock r1;
  r1.rank = 1;
  r1.ops.push_back(GoalOp{1, GoalOpKind::Recv, 1024, 0, 0, 7});
  r1.ops.push_back(GoalOp{2, GoalOpKind::Calc, 0, 3000, -1, 0});
  r1.deps.emplace_back(2, 1);
  p.ranks.push_back(r0);
  p.ranks.push_back(r1);
  return p;
}

/// Random yet structurally valid program: recvs match earlier sends, arcs
/// point backwards within a rank, leftover sends get terminal recvs.
GoalProgram random_program(std::mt19937_64& rng) {
  GoalProgram p;
  p.nRanks = 2 + static_cast<Rank>(rng() % 4);
  p.ranks.resize(static_cast<std::size_t>(p.nRanks));
  for (Rank r = 0; r < p.nRanks; ++r) p.ranks[static_cast<std::size_t>(r)].rank = r;
  std::vector<std::int64_t> next(static_cast<std::size_t>(p.nRanks), 1);

  struct Open {
    Rank src;
    Rank dst;
    Bytes bytes;
    std::int64_t tag;
  };
  std::vector<Open> open;
  std::int64_t tag = 0;
  const int nOps = 5 + static_cast<int>(rng() % 40);
  for (int i = 0; i < nOps; ++i) {
    const Rank r = static_cast<Rank>(rng() % p.nRanks);
    GoalRankBlock& blk = p.ranks[static_cast<std::size_t>(r)];
    const int kind = static_cast<int>(rng() % 3);
    GoalOp op;
    op.label = next[static_cast<std::size_t>(r)]++;
    if (kind == 0) {
      Rank dst = static_cast<Rank>(rng() % p.nRanks);
      if (dst == r) dst = (dst + 1) % p.nRanks;
      op.kind = GoalOpKind::Send;
      op.bytes = static_cast<Bytes>(1 + rng() % 4096);
      op.peer = dst;
      op.tag = tag++;
      open.push_back(Open{r, dst, op.bytes, op.tag});
    } else if (kind == 1 && !open.empty()) {
      // Receive an open send whose destination we are, if any.
      std::size_t pick = open.size();
      for (std::size_t j = 0; j < open.size(); ++j)
        if (open[j].dst == r) {
          pick = j;
          break;
        }
      if (pick == open.size()) {
        op.kind = GoalOpKind::Calc;
        op.durationNs = static_cast<std::int64_t>(rng() % 10000);
      } else {
        const Open o = open[pick];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        op.kind = GoalOpKind::Recv;
        op.bytes = o.bytes;
        op.peer = o.src;
        op.tag = o.tag;
      }
    } else {
      op.kind = GoalOpKind::Calc;
      op.durationNs = static_cast<std::int64_t>(rng() % 10000);
    }
    blk.ops.push_back(op);
    // Arcs only to earlier labels of the same rank keep the graph acyclic.
    if (blk.ops.size() > 1 && rng() % 2 == 0) {
      const std::int64_t b =
          blk.ops[static_cast<std::size_t>(rng() % (blk.ops.size() - 1))].label;
      blk.deps.emplace_back(op.label, b);
    }
  }
  // Close every remaining send with a terminal recv.
  for (const Open& o : open) {
    GoalRankBlock& blk = p.ranks[static_cast<std::size_t>(o.dst)];
    GoalOp op;
    op.label = next[static_cast<std::size_t>(o.dst)]++;
    op.kind = GoalOpKind::Recv;
    op.bytes = o.bytes;
    op.peer = o.src;
    op.tag = o.tag;
    blk.ops.push_back(op);
  }
  return p;
}

}  // namespace

TEST_CASE("serialize: empty program is just the header") {
  GoalProgram p;
  p.nRanks = 0;
  CHECK(serialize_goal(p) == "goal 1\nranks 0\n");
}

TEST_CASE("serialize: golden single send line") {
  GoalProgram p;
  p.nRanks = 1;
  GoalRankBlock blk;
  blk.rank = 0;
  blk.ops.push_back(GoalOp{1, GoalOpKind::Send, 1024, 0, 1, 7});
  p.ranks.push_back(blk);
  CHECK(serialize_goal(p) ==
        "goal 1\n"
        "ranks 1\n"
        "rank 0 {\n"
        "l1: send 1024b to 1 tag 7\n"
        "}\n");
}

TEST_CASE("serialize/parse round trip on a small program") {
  const GoalProgram p = example_program();
  CHECK(parse_goal(serialize_goal(p)) == p);
  CHECK(goal_from_json(goal_to_json(p)) == p);
}

TEST_CASE("round trip property on random programs") {
  std::mt19937_64 rng(59);
  for (int iter = 0; iter < 300; ++iter) {
    const GoalProgram p = random_program(rng);
    CHECK(parse_goal(serialize_goal(p)) == p);
    CHECK(goal_from_json(goal_to_json(p)) == p);
  }
}

TEST_CASE("validation catches broken programs") {
  GoalProgram dup = example_program();
  dup.ranks[1].ops.push_back(GoalOp{1, GoalOpKind::Calc, 0, 5, -1, 0});
  CHECK_THROWS_AS(validate_goal(dup), std::invalid_argument);

  GoalProgram orphanRecv = example_program();
  orphanRecv.ranks[0].ops.clear();  // drops the matching send
  CHECK_THROWS_AS(validate_goal(orphanRecv), std::invalid_argument);

  GoalProgram danglingDep = example_program();
  danglingDep.ranks[1].deps.emplace_back(2, 99);
  CHECK_THROWS_AS(validate_goal(danglingDep), std::invalid_argument);

  GoalProgram cyclic = example_program();
  cyclic.ranks[1].ops.push_back(GoalOp{3, GoalOpKind::Calc, 0, 5, -1, 0});
  cyclic.ranks[1].deps.emplace_back(2, 3);
  cyclic.ranks[1].deps.emplace_back(3, 2);
  CHECK_THROWS_AS(validate_goal(cyclic), std::invalid_argument);
}

TEST_CASE("replay of the example program") {
  // send -> recv -> calc of 3000 ns.
  CHECK(replay_goal(example_program()) == doctest::Approx(3e-6).epsilon(1e-12));
}

TEST_CASE("emitted programs replay to the simulated makespan") {
  const struct {
    Rank ranks;
    NodeId nodes;
    CollectiveKind coll;
    Algorithm algo;
    Bytes msgBytes;
  } runs[] = {
      {2, 1, CollectiveKind::AllReduce, Algorithm::Ring, 1024},
      {8, 4, CollectiveKind::AllReduce, Algorithm::Ring, 262144},
      {8, 4, CollectiveKind::AllReduce, Algorithm::Tree, 262144},
      {6, 3, CollectiveKind::AllGather, Algorithm::Ring, 40000},
      {6, 3, CollectiveKind::ReduceScatter, Algorithm::Ring, 40000},
      {5, 5, CollectiveKind::Broadcast, Algorithm::Ring, 100000},
      {5, 5, CollectiveKind::Reduce, Algorithm::Ring, 65536},
  };
  for (const auto& run : runs) {
    const ClusterSpec cluster = ClusterSpec::uniform(run.ranks, run.nodes);
    SimConfig cfg;
    cfg.nSlots = 4;
    const ElementModel elem = element_model(run.coll, 4);
    const Elements count = partition_count(run.coll, run.msgBytes, 4);
    const Schedule schedule =
        expand_schedule(cluster, run.coll, run.algo, count, elem,
                        protocol_params(Protocol::LL, cfg.nSlots), 2);
    const Timeline t = simulate(schedule, cluster, cfg);
    const GoalProgram p = emit_goal(schedule, cluster, cfg, &t);

    std::size_t calcs = 0;
    for (const auto& blk : p.ranks) {
      for (const auto& op : blk.ops)
        if (op.kind == GoalOpKind::Calc) ++calcs;
    }
    const Seconds replayed = replay_goal(p);
    CHECK(std::fabs(replayed - t.makespan) <= 1e-9 * static_cast<double>(calcs) + 1e-15);

    // Byte conservation: program sends equal the timeline's wire bytes.
    Bytes programBytes = 0;
    for (const auto& blk : p.ranks)
      for (const auto& op : blk.ops)
        if (op.kind == GoalOpKind::Send) programBytes += op.bytes;
    Bytes timelineBytes = 0;
    for (const Event& e : t.events)
      if (e.kind == EventKind::SendPost) timelineBytes += e.bytesOnWire;
    CHECK(programBytes == timelineBytes);
  }
}

TEST_CASE("emitting without a timeline simulates internally") {
  const ClusterSpec cluster = ClusterSpec::uniform(4, 2);
  SimConfig cfg;
  const ElementModel elem = element_model(CollectiveKind::AllReduce, 4);
  const Schedule schedule =
      expand_schedule(cluster, CollectiveKind::AllReduce, Algorithm::Ring, 4096, elem,
                      protocol_params(Protocol::Simple, cfg.nSlots), 2);
  const Timeline t = simulate(schedule, cluster, cfg);
  const GoalProgram withT = emit_goal(schedule, cluster, cfg, &t);
  const GoalProgram withoutT = emit_goal(schedule, cluster, cfg);
  CHECK(withT == withoutT);
}

TEST_CASE("single rank emits an empty program per rank") {
  const ClusterSpec cluster = ClusterSpec::uniform(1, 1);
  SimConfig cfg;
  const Schedule schedule = expand_schedule(
      cluster, CollectiveKind::AllReduce, Algorithm::Ring, 16,
      element_model(CollectiveKind::AllReduce, 4), protocol_params(Protocol::LL, 8), 1);
  const GoalProgram p = emit_goal(schedule, cluster, cfg);
  REQUIRE(p.ranks.size() == 1);
  CHECK(p.ranks[0].ops.empty());
  CHECK(replay_goal(p) == 0.0);
}

TEST_CASE("two-rank one-chunk allreduce program shape") {
  // Each rank sends twice (the opener and the combine-and-forward) and
  // receives twice (the combine input and the final landing).
  const ClusterSpec cluster = ClusterSpec::uniform(2, 1);
  SimConfig cfg;
  const Schedule schedule = expand_schedule(
      cluster, CollectiveKind::AllReduce, Algorithm::Ring, 2,
      element_model(CollectiveKind::AllReduce, 4), protocol_params(Protocol::Simple, 8), 1);
  const GoalProgram p = emit_goal(schedule, cluster, cfg);
  REQUIRE(p.ranks.size() == 2);
  for (const auto& blk : p.ranks) {
    int sends = 0;
    int recvs = 0;
    for (const auto& op : blk.ops) {
      if (op.kind == GoalOpKind::Send) ++sends;
      if (op.kind == GoalOpKind::Recv) ++recvs;
    }
    CHECK(sends == 2);
    CHECK(recvs == 2);
  }
  validate_goal(p);
}

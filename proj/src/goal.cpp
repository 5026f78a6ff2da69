// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/goal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace collsim {

namespace {

std::int64_t round_ns(Seconds s) {
  return static_cast<std::int64_t>(std::floor(s * 1e9 + 0.5));
}

}  // namespace

GoalProgram emit_goal(const Schedule& schedule, const ClusterSpec& cluster,
                      const SimConfig& cfg, const Timeline* timeline) {
  Timeline local;
  if (timeline == nullptr) {
    local = simulate(schedule, cluster, cfg);
    timeline = &local;
  }

  GoalProgram p;
  p.nRanks = schedule.nRanks;
  p.ranks.resize(static_cast<std::size_t>(schedule.nRanks));
  for (Rank r = 0; r < schedule.nRanks; ++r) p.ranks[static_cast<std::size_t>(r)].rank = r;

  const auto n = schedule.steps.size();
  // Per step, three calc entries mirror the engine phases: acq ends at the
  // inputs-consumed instant, occ covers the wire occupancy, lat the hop and
  // rendezvous latency. Consumers gate on lat; slot arcs gate on acq.
  std::vector<std::int64_t> acqLabel(n, 0);
  std::vector<std::int64_t> occLabel(n, 0);
  std::vector<std::int64_t> latLabel(n, 0);
  std::vector<std::int64_t> nextLabel(static_cast<std::size_t>(schedule.nRanks), 1);

  auto fresh = [&](Rank r) { return nextLabel[static_cast<std::size_t>(r)]++; };

  // First pass: allocate the calc labels so cross-step arcs can point at them.
  for (std::size_t i = 0; i < n; ++i) {
    const Rank r = schedule.steps[i].rank;
    // recv labels sit before the calcs, send labels after; reserve in order.
    nextLabel[static_cast<std::size_t>(r)] +=
        static_cast<std::int64_t>(schedule.steps[i].recvDeps.size());
    acqLabel[i] = fresh(r);
    occLabel[i] = fresh(r);
    latLabel[i] = fresh(r);
    nextLabel[static_cast<std::size_t>(r)] +=
        static_cast<std::int64_t>(schedule.steps[i].sendTo.size());
  }

  // Slot releases cross ranks: the consumer that frees a FIFO entry signals
  // the stalled sender. Per-rank arcs cannot express that, so each release
  // travels as a zero-byte credit message, the way a FIFO tail update would.
  struct SlotCredit {
    std::int32_t consumer;
    std::int32_t sender;
  };
  std::vector<SlotCredit> slotCredits;

  std::vector<std::int64_t> cursor(static_cast<std::size_t>(schedule.nRanks), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const ChunkStep& s = schedule.steps[i];
    const StepTiming& timing = timeline->stepTimings[i];
    GoalRankBlock& blk = p.ranks[static_cast<std::size_t>(s.rank)];
    auto& cur = cursor[static_cast<std::size_t>(s.rank)];

    std::vector<std::int64_t> recvLabels;
    for (std::size_t j = 0; j < s.recvDeps.size(); ++j) {
      const auto senderId = static_cast<std::size_t>(s.recvDeps[j]);
      const ChunkStep& sender = schedule.steps[senderId];
      GoalOp op;
      op.label = cur++;
      op.kind = GoalOpKind::Recv;
      op.bytes = wire_bytes(schedule.proto, schedule.payloadBytes(sender));
      op.peer = sender.rank;
      op.tag = s.recvDeps[j] * 4;
      for (std::size_t pj = 0; pj < sender.sendTo.size(); ++pj)
        if (sender.sendTo[pj] == s.rank)
          op.tag = s.recvDeps[j] * 4 + static_cast<std::int64_t>(pj);
      blk.ops.push_back(op);
      recvLabels.push_back(op.label);
    }

    GoalOp acq;
    acq.label = cur++;
    acq.kind = GoalOpKind::Calc;
    acq.durationNs = 0;
    blk.ops.push_back(acq);
    if (acq.label != acqLabel[i]) throw std::logic_error("goal label bookkeeping drift");

    GoalOp occ;
    occ.label = cur++;
    occ.kind = GoalOpKind::Calc;
    occ.durationNs = round_ns(timing.release - timing.start);
    blk.ops.push_back(occ);

    GoalOp lat;
    lat.label = cur++;
    lat.kind = GoalOpKind::Calc;
    lat.durationNs = round_ns(timing.completion - timing.release);
    blk.ops.push_back(lat);

    for (std::int64_t rl : recvLabels) blk.deps.emplace_back(acq.label, rl);
    if (s.streamPred >= 0)
      blk.deps.emplace_back(acq.label, occLabel[static_cast<std::size_t>(s.streamPred)]);
    const std::int32_t barrier = timeline->loopBarrierArgmax[i];
    if (barrier >= 0)
      blk.deps.emplace_back(acq.label, latLabel[static_cast<std::size_t>(barrier)]);

    blk.deps.emplace_back(occ.label, acq.label);
    for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
      const FifoRef& f = s.sendFifo[j];
      if (f.pos >= schedule.proto.nSlots) {
        const FifoEntry& freed = schedule.fifos[static_cast<std::size_t>(f.fifoId)]
            [static_cast<std::size_t>(f.pos - schedule.proto.nSlots)];
        slotCredits.push_back(SlotCredit{freed.consumerId, static_cast<std::int32_t>(i)});
      }
    }

    blk.deps.emplace_back(lat.label, occ.label);

    for (std::size_t j = 0; j < s.sendTo.size(); ++j) {
      GoalOp op;
      op.label = cur++;
      op.kind = GoalOpKind::Send;
      op.bytes = wire_bytes(schedule.proto, schedule.payloadBytes(s));
      op.peer = s.sendTo[j];
      op.tag = static_cast<std::int64_t>(i) * 4 + static_cast<std::int64_t>(j);
      blk.ops.push_back(op);
      blk.deps.emplace_back(op.label, lat.label);
    }
  }

  for (std::size_t i = 0; i < slotCredits.size(); ++i) {
    const SlotCredit& credit = slotCredits[i];
    const Rank from = schedule.steps[static_cast<std::size_t>(credit.consumer)].rank;
    const Rank to = schedule.steps[static_cast<std::size_t>(credit.sender)].rank;
    const std::int64_t tag = static_cast<std::int64_t>(i) * 4 + 3;

    GoalRankBlock& fromBlk = p.ranks[static_cast<std::size_t>(from)];
    GoalOp send;
    send.label = cursor[static_cast<std::size_t>(from)]++;
    send.kind = GoalOpKind::Send;
    send.bytes = 0;
    send.peer = to;
    send.tag = tag;
    fromBlk.ops.push_back(send);
    fromBlk.deps.emplace_back(send.label,
                              acqLabel[static_cast<std::size_t>(credit.consumer)]);

    GoalRankBlock& toBlk = p.ranks[static_cast<std::size_t>(to)];
    GoalOp recv;
    recv.label = cursor[static_cast<std::size_t>(to)]++;
    recv.kind = GoalOpKind::Recv;
    recv.bytes = 0;
    recv.peer = from;
    recv.tag = tag;
    toBlk.ops.push_back(recv);
    toBlk.deps.emplace_back(occLabel[static_cast<std::size_t>(credit.sender)], recv.label);
  }

  validate_goal(p);
  return p;
}

std::string serialize_goal(const GoalProgram& p) {
  std::ostringstream out;
  out << "goal 1\n";
  out << "ranks " << p.nRanks << "\n";
  for (const GoalRankBlock& blk : p.ranks) {
    out << "rank " << blk.rank << " {\n";
    for (const GoalOp& op : blk.ops) {
      out << "l" << op.label << ": ";
      switch (op.kind) {
        case GoalOpKind::Send:
          out << "send " << op.bytes << "b to " << op.peer << " tag " << op.tag;
          break;
        case GoalOpKind::Recv:
          out << "recv " << op.bytes << "b from " << op.peer << " tag " << op.tag;
          break;
        case GoalOpKind::Calc:
          out << "calc " << op.durationNs;
          break;
      }
      out << "\n";
    }
    for (const auto& [a, b] : blk.deps) out << "l" << a << " requires l" << b << "\n";
    out << "}\n";
  }
  return out.str();
}

namespace {

class GoalParser {
 public:
  explicit GoalParser(const std::string& text) : in_(text) {}

  GoalProgram parse() {
    GoalProgram p;
    expect_line("goal 1");
    std::string line = next_line();
    if (line.rfind("ranks ", 0) != 0) fail("expected 'ranks <n>'");
    p.nRanks = static_cast<Rank>(std::stol(line.substr(6)));
    while (peek_line()) {
      line = next_line();
      if (line.empty()) continue;
      if (line.rfind("rank ", 0) != 0) fail("expected 'rank <r> {'");
      GoalRankBlock blk;
      std::istringstream hdr(line);
      std::string word, brace;
      hdr >> word >> blk.rank >> brace;
      if (brace != "{") fail("expected '{' after rank header");
      while (true) {
        if (!peek_line()) fail("unterminated rank block");
        line = next_line();
        if (line == "}") break;
        parse_entry(line, blk);
      }
      p.ranks.push_back(std::move(blk));
    }
    return p;
  }

 private:
  void parse_entry(const std::string& line, GoalRankBlock& blk) {
    if (line.find(" requires ") != std::string::npos) {
      const auto pos = line.find(" requires ");
      blk.deps.emplace_back(parse_label(line.substr(0, pos)),
                            parse_label(line.substr(pos + 10)));
      return;
    }
    const auto colon = line.find(": ");
    if (colon == std::string::npos || line.empty() || line[0] != 'l')
      fail("bad entry: " + line);
    GoalOp op;
    op.label = std::stoll(line.substr(1, colon - 1));
    std::istringstream body(line.substr(colon + 2));
    std::string kind;
    body >> kind;
    if (kind == "calc") {
      op.kind = GoalOpKind::Calc;
      body >> op.durationNs;
    } else if (kind == "send" || kind == "recv") {
      op.kind = kind == "send" ? GoalOpKind::Send : GoalOpKind::Recv;
      std::string bytesWord, dir, tagWord;
      body >> bytesWord >> dir >> op.peer >> tagWord >> op.tag;
      if (bytesWord.empty() || bytesWord.back() != 'b') fail("bad byte count: " + line);
      op.bytes = std::stoll(bytesWord.substr(0, bytesWord.size() - 1));
      const std::string wantDir = op.kind == GoalOpKind::Send ? "to" : "from";
      if (dir != wantDir || tagWord != "tag") fail("bad entry: " + line);
    } else {
      fail("unknown entry kind: " + kind);
    }
    blk.ops.push_back(op);
  }

  static std::int64_t parse_label(const std::string& s) {
    if (s.empty() || s[0] != 'l') throw std::invalid_argument("goal parse: bad label " + s);
    return std::stoll(s.substr(1));
  }

  bool peek_line() { return in_.peek() != std::char_traits<char>::eof(); }

  std::string next_line() {
    std::string line;
    std::getline(in_, line);
    return line;
  }

  void expect_line(const std::string& want) {
    const std::string got = next_line();
    if (got != want) fail("expected '" + want + "', got '" + got + "'");
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("goal parse: " + msg);
  }

  std::istringstream in_;
};

}  // namespace

GoalProgram parse_goal(const std::string& text) { return GoalParser(text).parse(); }

std::string goal_to_json(const GoalProgram& p) {
  nlohmann::ordered_json j;
  j["format"] = "goal";
  j["version"] = 1;
  j["nRanks"] = p.nRanks;
  j["ranks"] = nlohmann::ordered_json::array();
  for (const GoalRankBlock& blk : p.ranks) {
    nlohmann::ordered_json rb;
    rb["rank"] = blk.rank;
    rb["ops"] = nlohmann::ordered_json::array();
    for (const GoalOp& op : blk.ops) {
      nlohmann::ordered_json jo;
      jo["label"] = op.label;
      switch (op.kind) {
        case GoalOpKind::Send:
          jo["kind"] = "send";
          jo["bytes"] = op.bytes;
          jo["peer"] = op.peer;
          jo["tag"] = op.tag;
          break;
        case GoalOpKind::Recv:
          jo["kind"] = "recv";
          jo["bytes"] = op.bytes;
          jo["peer"] = op.peer;
          jo["tag"] = op.tag;
          break;
        case GoalOpKind::Calc:
          jo["kind"] = "calc";
          jo["durationNs"] = op.durationNs;
          break;
      }
      rb["ops"].push_back(jo);
    }
    rb["deps"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : blk.deps) rb["deps"].push_back({a, b});
    j["ranks"].push_back(rb);
  }
  return j.dump(2) + "\n";
}

GoalProgram goal_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GoalProgram p;
  p.nRanks = j.at("nRanks").get<Rank>();
  for (const auto& rb : j.at("ranks")) {
    GoalRankBlock blk;
    blk.rank = rb.at("rank").get<Rank>();
    for (const auto& jo : rb.at("ops")) {
      GoalOp op;
      op.label = jo.at("label").get<std::int64_t>();
      const std::string kind = jo.at("kind").get<std::string>();
      if (kind == "send" || kind == "recv") {
        op.kind = kind == "send" ? GoalOpKind::Send : GoalOpKind::Recv;
        op.bytes = jo.at("bytes").get<Bytes>();
        op.peer = jo.at("peer").get<Rank>();
        op.tag = jo.at("tag").get<std::int64_t>();
      } else if (kind == "calc") {
        op.kind = GoalOpKind::Calc;
        op.durationNs = jo.at("durationNs").get<std::int64_t>();
      } else {
        throw std::invalid_argument("goal json: unknown op kind " + kind);
      }
      blk.ops.push_back(op);
    }
    for (const auto& d : rb.at("deps"))
      blk.deps.emplace_back(d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>());
    p.ranks.push_back(std::move(blk));
  }
  return p;
}

namespace {

struct FlatOp {
  Rank rank;
  const GoalOp* op;
};

/// Global op table plus matching/dep edges shared by validate and replay.
struct GoalGraph {
  std::vector<FlatOp> ops;
  std::vector<std::vector<std::int32_t>> dependents;
  std::vector<int> inDeg;
  std::vector<std::int32_t> matchedSend;  // per recv op, global send index

  explicit GoalGraph(const GoalProgram& p) {
    std::map<std::pair<Rank, std::int64_t>, std::int32_t> byLabel;
    for (const GoalRankBlock& blk : p.ranks) {
      if (blk.rank < 0 || blk.rank >= p.nRanks)
        throw std::invalid_argument("goal: rank id out of range");
      for (const GoalOp& op : blk.ops) {
        const auto id = static_cast<std::int32_t>(ops.size());
        if (!byLabel.emplace(std::pair{blk.rank, op.label}, id).second)
          throw std::invalid_argument("goal: duplicate label l" +
                                      std::to_string(op.label) + " on rank " +
                                      std::to_string(blk.rank));
        ops.push_back(FlatOp{blk.rank, &op});
      }
    }
    dependents.resize(ops.size());
    inDeg.assign(ops.size(), 0);
    matchedSend.assign(ops.size(), -1);

    for (const GoalRankBlock& blk : p.ranks) {
      for (const auto& [a, b] : blk.deps) {
        const auto ia = byLabel.find({blk.rank, a});
        const auto ib = byLabel.find({blk.rank, b});
        if (ia == byLabel.end() || ib == byLabel.end())
          throw std::invalid_argument("goal: dependency references unknown label on rank " +
                                      std::to_string(blk.rank));
        dependents[static_cast<std::size_t>(ib->second)].push_back(ia->second);
        ++inDeg[static_cast<std::size_t>(ia->second)];
      }
    }

    // Perfect bipartite matching on (src, dst, tag).
    std::map<std::tuple<Rank, Rank, std::int64_t>, std::vector<std::int32_t>> sends;
    for (std::size_t i = 0; i < ops.size(); ++i)
      if (ops[i].op->kind == GoalOpKind::Send)
        sends[{ops[i].rank, ops[i].op->peer, ops[i].op->tag}].push_back(
            static_cast<std::int32_t>(i));
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (ops[i].op->kind != GoalOpKind::Recv) continue;
      const auto key = std::tuple{ops[i].op->peer, ops[i].rank, ops[i].op->tag};
      auto it = sends.find(key);
      if (it == sends.end() || it->second.empty())
        throw std::invalid_argument("goal: recv without matching send (tag " +
                                    std::to_string(ops[i].op->tag) + ")");
      const std::int32_t sendId = it->second.back();
      it->second.pop_back();
      if (ops[static_cast<std::size_t>(sendId)].op->bytes != ops[i].op->bytes)
        throw std::invalid_argument("goal: matched send/recv byte mismatch");
      matchedSend[i] = sendId;
      dependents[static_cast<std::size_t>(sendId)].push_back(static_cast<std::int32_t>(i));
      ++inDeg[i];
    }
    for (const auto& [key, remaining] : sends)
      if (!remaining.empty())
        throw std::invalid_argument("goal: send without matching recv (tag " +
                                    std::to_string(std::get<2>(key)) + ")");
  }
};

}  // namespace

void validate_goal(const GoalProgram& p) {
  GoalGraph g(p);
  // Topological sort proves acyclicity.
  std::queue<std::int32_t> q;
  std::vector<int> deg = g.inDeg;
  for (std::size_t i = 0; i < g.ops.size(); ++i)
    if (deg[i] == 0) q.push(static_cast<std::int32_t>(i));
  std::size_t seen = 0;
  while (!q.empty()) {
    const std::int32_t id = q.front();
    q.pop();
    ++seen;
    for (std::int32_t d : g.dependents[static_cast<std::size_t>(id)])
      if (--deg[static_cast<std::size_t>(d)] == 0) q.push(d);
  }
  if (seen != g.ops.size()) throw std::invalid_argument("goal: dependency graph has a cycle");
}

Seconds replay_goal(const GoalProgram& p) {
  GoalGraph g(p);
  std::vector<Seconds> done(g.ops.size(), 0.0);
  std::vector<int> deg = g.inDeg;
  std::queue<std::int32_t> q;
  for (std::size_t i = 0; i < g.ops.size(); ++i)
    if (deg[i] == 0) q.push(static_cast<std::int32_t>(i));

  // Completion joins arrive through edge relaxation: an op's time is the max
  // over its prerequisites, plus its own calc duration.
  std::vector<Seconds> ready(g.ops.size(), 0.0);
  std::size_t seen = 0;
  Seconds makespan = 0.0;
  while (!q.empty()) {
    const std::int32_t id = q.front();
    q.pop();
    ++seen;
    const FlatOp& f = g.ops[static_cast<std::size_t>(id)];
    Seconds t = ready[static_cast<std::size_t>(id)];
    if (f.op->kind == GoalOpKind::Calc) t += static_cast<Seconds>(f.op->durationNs) * 1e-9;
    done[static_cast<std::size_t>(id)] = t;
    makespan = std::max(makespan, t);
    for (std::int32_t d : g.dependents[static_cast<std::size_t>(id)]) {
      ready[static_cast<std::size_t>(d)] =
          std::max(ready[static_cast<std::size_t>(d)], t);
      if (--deg[static_cast<std::size_t>(d)] == 0) q.push(d);
    }
  }
  if (seen != g.ops.size()) throw std::runtime_error("goal replay: cycle in program");
  return makespan;
}

}  // namespace collsim

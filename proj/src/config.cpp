// Copyright (c) 2026, collsim contributors.
// SPDX-License-Identifier: Apache-2.0

#include "collsim/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace collsim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& rule) {
  throw ConfigError("config error at " + path + ": " + rule);
}

template <typename T>
T get_number(const json& j, const std::string& path, T lo, T hi) {
  if (!j.is_number()) bad(path, "expected a number");
  const auto v = j.get<T>();
  if (v < lo || v > hi)
    bad(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]");
  return v;
}

LinkParams parse_link(const json& j, const std::string& path, const LinkParams& base) {
  LinkParams out = base;
  for (const auto& [key, val] : j.items()) {
    if (key == "alphaControl")
      out.alphaControl = get_number<double>(val, path + "/alphaControl", 0.0, 1.0);
    else if (key == "bandwidth")
      out.bandwidth = get_number<double>(val, path + "/bandwidth", 1.0, 1e15);
    else
      bad(path + "/" + key, "unknown link parameter");
  }
  return out;
}

ClusterSpec parse_cluster(const json& j) {
  ClusterSpec cluster = default_config().cluster;
  if (j.contains("nodeOf")) {
    const auto& arr = j.at("nodeOf");
    if (!arr.is_array()) bad("/cluster/nodeOf", "expected an array of node ids");
    cluster.nodeOf.clear();
    for (const auto& v : arr)
      cluster.nodeOf.push_back(get_number<NodeId>(v, "/cluster/nodeOf", 0, 1 << 20));
    cluster.nRanks = static_cast<Rank>(cluster.nodeOf.size());
    if (j.contains("ranks") &&
        get_number<Rank>(j.at("ranks"), "/cluster/ranks", 1, 1 << 20) != cluster.nRanks)
      bad("/cluster/ranks", "contradicts the length of nodeOf");
  } else {
    const Rank ranks = j.contains("ranks")
                           ? get_number<Rank>(j.at("ranks"), "/cluster/ranks", 1, 1 << 20)
                           : cluster.nRanks;
    const NodeId nodes = j.contains("nodes")
                             ? get_number<NodeId>(j.at("nodes"), "/cluster/nodes", 1, 1 << 20)
                             : std::min<NodeId>(ranks, cluster.nNodes());
    if (nodes > ranks) bad("/cluster/nodes", "more nodes than ranks");
    const ClusterSpec shaped = ClusterSpec::uniform(ranks, nodes);
    cluster.nRanks = shaped.nRanks;
    cluster.nodeOf = shaped.nodeOf;
  }
  if (j.contains("links")) {
    const auto& links = j.at("links");
    if (links.contains("intra"))
      cluster.intra = parse_link(links.at("intra"), "/cluster/links/intra", cluster.intra);
    if (links.contains("inter"))
      cluster.inter = parse_link(links.at("inter"), "/cluster/links/inter", cluster.inter);
  }
  try {
    cluster.validate();
  } catch (const std::invalid_argument& e) {
    bad("/cluster", e.what());
  }
  return cluster;
}

void parse_overrides(const json& j, RunConfig& cfg) {
  for (const auto& [key, val] : j.items()) {
    const std::string path = "/overrides/" + key;
    if (key == "protocol") {
      try {
        cfg.protocolOverride = protocol_from_string(val.get<std::string>());
      } catch (const std::invalid_argument& e) {
        bad(path, e.what());
      }
    } else if (key == "algorithm") {
      try {
        cfg.algorithmOverride = algorithm_from_string(val.get<std::string>());
      } catch (const std::invalid_argument& e) {
        bad(path, e.what());
      }
    } else if (key == "nChannels") {
      cfg.sim.nChannels = get_number<int>(val, path, 1, 1024);
    } else if (key == "nSlots") {
      cfg.sim.nSlots = get_number<int>(val, path, 1, 1024);
    } else if (key == "overlapPhases") {
      if (!val.is_boolean()) bad(path, "expected a boolean");
      cfg.sim.overlapPhases = val.get<bool>();
    } else if (key == "ll128Supported") {
      if (!val.is_boolean()) bad(path, "expected a boolean");
      cfg.sim.ll128Supported = val.get<bool>();
    } else if (key == "thresholds") {
      for (const auto& [tk, tv] : val.items()) {
        if (tk == "protoSmall")
          cfg.sim.thresholds.protoSmall = get_number<Bytes>(tv, path + "/protoSmall", 1, 1LL << 40);
        else if (tk == "protoLarge")
          cfg.sim.thresholds.protoLarge = get_number<Bytes>(tv, path + "/protoLarge", 1, 1LL << 40);
        else if (tk == "tree")
          cfg.sim.thresholds.treeThreshold = get_number<Bytes>(tv, path + "/tree", 1, 1LL << 40);
        else
          bad(path + "/" + tk, "unknown threshold");
      }
    } else if (key == "hopLatency") {
      for (const auto& [pk, pv] : val.items()) {
        Protocol proto;
        try {
          proto = protocol_from_string(pk);
        } catch (const std::invalid_argument& e) {
          bad(path + "/" + pk, e.what());
        }
        for (const auto& [ck, cv] : pv.items()) {
          const std::size_t cls = ck == "intra" ? 0 : ck == "inter" ? 1 : 2;
          if (cls > 1) bad(path + "/" + pk + "/" + ck, "expected 'intra' or 'inter'");
          cfg.sim.hopLatencyOverride[static_cast<std::size_t>(proto)][cls] =
              get_number<double>(cv, path + "/" + pk + "/" + ck, 0.0, 1.0);
        }
      }
    } else {
      bad(path, "unknown override");
    }
  }
}

std::vector<Bytes> parse_sweep(const json& j) {
  std::vector<Bytes> sizes;
  if (j.is_array()) {
    for (const auto& v : j) sizes.push_back(get_number<Bytes>(v, "/sweep", 0, 1LL << 40));
    return sizes;
  }
  const Bytes lo = get_number<Bytes>(j.at("minBytes"), "/sweep/minBytes", 1, 1LL << 40);
  const Bytes hi = get_number<Bytes>(j.at("maxBytes"), "/sweep/maxBytes", lo, 1LL << 40);
  const Bytes factor =
      j.contains("factor") ? get_number<Bytes>(j.at("factor"), "/sweep/factor", 2, 1024) : 4;
  for (Bytes b = lo; b <= hi; b *= factor) sizes.push_back(b);
  return sizes;
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);  // bare strings stay strings
  }
}

void apply_override_arg(json& root, const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config error at --override '" + arg + "': expected key=value");
  std::string pointer = "/" + arg.substr(0, eq);
  for (auto& c : pointer)
    if (c == '.') c = '/';
  try {
    root[json::json_pointer(pointer)] = parse_scalar(arg.substr(eq + 1));
  } catch (const json::exception& e) {
    throw ConfigError("config error at --override '" + arg + "': " + e.what());
  }
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.cluster = ClusterSpec::uniform(16, 16);
  return cfg;
}

RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config error at /: expected a JSON object");
  for (const std::string& o : overrides) apply_override_arg(j, o);

  RunConfig cfg = default_config();
  for (const auto& [key, val] : j.items()) {
    const std::string path = "/" + key;
    try {
      if (key == "cluster") {
        cfg.cluster = parse_cluster(val);
      } else if (key == "collective") {
        cfg.collective = collective_from_string(val.get<std::string>());
      } else if (key == "msgBytes") {
        cfg.msgBytes = get_number<Bytes>(val, path, 0, 1LL << 40);
      } else if (key == "dtype") {
        cfg.dtype = dtype_from_string(val.get<std::string>());
      } else if (key == "redOp") {
        cfg.redOp = redop_from_string(val.get<std::string>());
      } else if (key == "root") {
        cfg.root = get_number<Rank>(val, path, 0, 1 << 20);
      } else if (key == "inPlace") {
        if (!val.is_boolean()) bad(path, "expected a boolean");
        cfg.inPlace = val.get<bool>();
      } else if (key == "seed") {
        cfg.seed = get_number<std::uint64_t>(val, path, 0, ~0ULL >> 1);
      } else if (key == "outputs") {
        cfg.outCsv = cfg.outGoal = cfg.outJson = false;
        for (const auto& o : val) {
          const std::string s = o.get<std::string>();
          if (s == "csv")
            cfg.outCsv = true;
          else if (s == "goal")
            cfg.outGoal = true;
          else if (s == "json")
            cfg.outJson = true;
          else
            bad(path, "unknown output kind '" + s + "'");
        }
      } else if (key == "overrides") {
        parse_overrides(val, cfg);
      } else if (key == "sweep") {
        cfg.sweepSizes = parse_sweep(val);
      } else if (key == "verify") {
        for (const auto& [vk, vv] : val.items()) {
          const std::string vpath = "/verify/" + vk;
          if (vk == "collectives") {
            for (const auto& c : vv)
              cfg.verifyCollectives.push_back(collective_from_string(c.get<std::string>()));
          } else if (vk == "sizesBytes") {
            for (const auto& c : vv)
              cfg.verifySizes.push_back(get_number<Bytes>(c, vpath, 0, 1LL << 32));
          } else if (vk == "dtypes") {
            for (const auto& c : vv)
              cfg.verifyDtypes.push_back(dtype_from_string(c.get<std::string>()));
          } else if (vk == "redOps") {
            for (const auto& c : vv)
              cfg.verifyRedOps.push_back(redop_from_string(c.get<std::string>()));
          } else if (vk == "cases") {
            cfg.verifyCases = get_number<int>(vv, vpath, 1, 100000);
          } else {
            bad(vpath, "unknown verify option");
          }
        }
      } else {
        bad(path, "unknown config key");
      }
    } catch (const json::exception& e) {
      bad(path, e.what());
    } catch (const std::invalid_argument& e) {
      bad(path, e.what());
    }
  }

  // Cross-field rules, each naming its source.
  try {
    cfg.sim.validate();
  } catch (const std::invalid_argument& e) {
    bad("/overrides", e.what());
  }
  if (cfg.root < 0 || cfg.root >= cfg.cluster.nRanks)
    bad("/root", "root must name a rank in [0, nRanks)");
  if (cfg.algorithmOverride &&
      !algorithm_supported(cfg.collective, *cfg.algorithmOverride))
    bad("/overrides/algorithm",
        "the support matrix allows tree only for allreduce; " +
            to_string(*cfg.algorithmOverride) + " cannot run " + to_string(cfg.collective));
  if (cfg.protocolOverride == Protocol::LL128 && !cfg.sim.ll128Supported)
    bad("/overrides/protocol", "LL128 requested but ll128Supported=false");
  const Bytes width = dtype_bytes(cfg.dtype);
  if (cfg.collective != CollectiveKind::AllGather &&
      cfg.collective != CollectiveKind::Broadcast) {
    if (cfg.msgBytes % width != 0)
      bad("/msgBytes", "must be a multiple of the dtype width for reducing collectives");
    for (Bytes b : cfg.sweepSizes)
      if (b % width != 0) bad("/sweep", "sweep sizes must be multiples of the dtype width");
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

std::string describe_defaults() {
  std::ostringstream out;
  out << "collsim config defaults (JSON keys, shown as key = default)\n"
      << "  cluster.ranks          = 16\n"
      << "  cluster.nodes          = 16        # or cluster.nodeOf = [explicit node ids]\n"
      << "  cluster.links.intra    = {alphaControl: 0.0,  bandwidth: 150e9}\n"
      << "  cluster.links.inter    = {alphaControl: 2e-6, bandwidth: 25e9}\n"
      << "  collective             = allreduce\n"
      << "  msgBytes               = 1048576\n"
      << "  dtype                  = float32   # int32 | int64 | float32 | float64\n"
      << "  redOp                  = sum       # sum | prod | min | max\n"
      << "  root                   = 0         # broadcast/reduce root\n"
      << "  inPlace                = false\n"
      << "  seed                   = 1\n"
      << "  outputs                = [csv]     # csv | goal | json\n"
      << "  overrides.protocol     = (auto)    # Simple | LL | LL128\n"
      << "  overrides.algorithm    = (auto)    # ring | tree (tree: allreduce only)\n"
      << "  overrides.nChannels    = 2\n"
      << "  overrides.nSlots       = 8\n"
      << "  overrides.thresholds   = {protoSmall: 65536, protoLarge: 1048576, tree: 1048576}\n"
      << "  overrides.overlapPhases = true\n"
      << "  overrides.ll128Supported = true\n"
      << "  overrides.hopLatency   = (per protocol/class, e.g. {LL: {inter: 1e-6}})\n"
      << "  sweep                  = (none)    # [sizes...] or {minBytes, maxBytes, factor}\n"
      << "  verify.cases           = 3         # random cases per combination\n"
      << "  verify.collectives / sizesBytes / dtypes / redOps = (the single config values)\n";
  return out.str();
}

}  // namespace collsim

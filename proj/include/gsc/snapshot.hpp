#pragma once

#include <json.hpp>

#include "gsc/index.hpp"

namespace gsc {

// Versioned msgpack snapshots for the offline bounds and the index tree. The
// dataset fingerprint rides along and is re-checked at query time.

inline constexpr int kBoundsVersion = 1;
inline constexpr int kIndexVersion = 1;

namespace snap {

using nlohmann::json;

inline json kw_to_json(const KwMap& m) {
  json arr = json::array();
  for (const auto& [k, agg] : m) arr.push_back({k, agg.f_sum, agg.f_max});
  return arr;
}

inline KwMap kw_from_json(const json& arr) {
  KwMap m;
  for (const auto& e : arr) m.push_back({e[0].get<KeywordId>(), {e[1].get<double>(), e[2].get<double>()}});
  return m;
}

}  // namespace snap

inline void save_bounds(const OfflineBounds& b, const std::string& path) {
  using nlohmann::json;
  json j;
  j["magic"] = "gsc-bounds";
  j["version"] = kBoundsVersion;
  j["fingerprint"] = b.fingerprint;
  j["max_f_sum"] = b.max_f_sum;
  j["max_f_single"] = b.max_f_single;
  j["social_pivots"] = b.pivots.social;
  j["road_pivots"] = b.pivots.road;
  json users = json::array();
  for (const auto& u : b.users) {
    users.push_back({{"kw", snap::kw_to_json(u.kw)},
                     {"fsum", u.ub_f_sum},
                     {"favg", u.ub_f_avg},
                     {"win", u.ub_w_in},
                     {"wout", u.ub_w_out},
                     {"sup", u.ub_sup},
                     {"hops", u.pivot_hops}});
  }
  j["users"] = std::move(users);
  j["poi_pivot_dist"] = b.poi_pivot_dist;

  auto bytes = json::to_msgpack(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write snapshot: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline OfflineBounds load_bounds(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot read snapshot: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = json::from_msgpack(bytes);
  if (j.value("magic", "") != "gsc-bounds")
    throw validation_error(path + " is not a bounds snapshot");
  if (j.value("version", 0) != kBoundsVersion)
    throw validation_error(path + ": unsupported bounds snapshot version");
  OfflineBounds b;
  b.fingerprint = j["fingerprint"].get<uint64_t>();
  b.max_f_sum = j["max_f_sum"].get<double>();
  b.max_f_single = j["max_f_single"].get<double>();
  b.pivots.social = j["social_pivots"].get<std::vector<UserId>>();
  b.pivots.road = j["road_pivots"].get<std::vector<VertexId>>();
  for (const auto& e : j["users"]) {
    UserBounds u;
    u.kw = snap::kw_from_json(e["kw"]);
    u.ub_f_sum = e["fsum"].get<double>();
    u.ub_f_avg = e["favg"].get<double>();
    u.ub_w_in = e["win"].get<double>();
    u.ub_w_out = e["wout"].get<double>();
    u.ub_sup = e["sup"].get<int>();
    u.pivot_hops = e["hops"].get<std::vector<int32_t>>();
    b.users.push_back(std::move(u));
  }
  b.poi_pivot_dist = j["poi_pivot_dist"].get<std::vector<std::vector<double>>>();
  return b;
}

inline void save_index(const IndexTree& t, const std::string& path) {
  using nlohmann::json;
  json j;
  j["magic"] = "gsc-index";
  j["version"] = kIndexVersion;
  j["fingerprint"] = t.fingerprint;
  j["epoch"] = t.epoch;
  j["root"] = t.root;
  j["pivots"] = t.pivots;
  j["level_pivots"] = t.level_pivots;
  j["level_node_ids"] = t.level_node_ids;
  j["leaf_of"] = t.leaf_of;
  j["pivot_of"] = t.pivot_of;
  j["norms"] = {{"f_sum", t.norms.f_sum},   {"f_max", t.norms.f_max}, {"rs", t.norms.rs},
                {"sum_sup", t.norms.sum_sup}, {"ub_isf", t.norms.ub_isf}, {"dist_s", t.norms.dist_s}};
  j["config"] = {{"fanout", t.config.fanout},
                 {"leaf_capacity", t.config.leaf_capacity},
                 {"w_bs", t.config.weights.bs},
                 {"w_ss", t.config.weights.ss},
                 {"w_rs", t.config.weights.rs},
                 {"partition_iterations", t.config.partition_iterations},
                 {"tree_iterations", t.config.tree_iterations},
                 {"cost_pair_budget", t.config.cost_pair_budget},
                 {"seed", t.config.seed}};
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json env = json::array();
    for (const auto& e : n.env) env.push_back({e.min_d, e.max_d, e.unreachable});
    nodes.push_back({{"id", n.id},
                     {"parent", n.parent},
                     {"level", n.level},
                     {"leaf", n.is_leaf},
                     {"children", n.children},
                     {"users", n.users},
                     {"kw", snap::kw_to_json(n.kw)},
                     {"sup", n.ub_sup},
                     {"win", n.ub_w_in},
                     {"env", std::move(env)}});
  }
  j["nodes"] = std::move(nodes);

  auto bytes = json::to_msgpack(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write snapshot: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline IndexTree load_index(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot read snapshot: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = json::from_msgpack(bytes);
  if (j.value("magic", "") != "gsc-index")
    throw validation_error(path + " is not an index snapshot");
  if (j.value("version", 0) != kIndexVersion)
    throw validation_error(path + ": unsupported index snapshot version");
  IndexTree t;
  t.fingerprint = j["fingerprint"].get<uint64_t>();
  t.epoch = j["epoch"].get<uint64_t>();
  t.root = j["root"].get<uint32_t>();
  t.pivots = j["pivots"].get<std::vector<UserId>>();
  t.level_pivots = j["level_pivots"].get<std::vector<std::vector<UserId>>>();
  t.level_node_ids = j["level_node_ids"].get<std::vector<std::vector<uint32_t>>>();
  t.leaf_of = j["leaf_of"].get<std::vector<uint32_t>>();
  t.pivot_of = j["pivot_of"].get<std::vector<uint32_t>>();
  const auto& nm = j["norms"];
  t.norms = {nm["f_sum"].get<double>(),  nm["f_max"].get<double>(),  nm["rs"].get<double>(),
             nm["sum_sup"].get<double>(), nm["ub_isf"].get<double>(), nm["dist_s"].get<double>()};
  const auto& c = j["config"];
  t.config.fanout = c["fanout"].get<uint32_t>();
  t.config.leaf_capacity = c["leaf_capacity"].get<uint32_t>();
  t.config.weights = {c["w_bs"].get<double>(), c["w_ss"].get<double>(), c["w_rs"].get<double>()};
  t.config.partition_iterations = c["partition_iterations"].get<int>();
  t.config.tree_iterations = c["tree_iterations"].get<int>();
  t.config.cost_pair_budget = c["cost_pair_budget"].get<int>();
  t.config.seed = c["seed"].get<uint64_t>();
  for (const auto& e : j["nodes"]) {
    IndexNode n;
    n.id = e["id"].get<uint32_t>();
    n.parent = e["parent"].get<uint32_t>();
    n.level = e["level"].get<uint32_t>();
    n.is_leaf = e["leaf"].get<bool>();
    n.children = e["children"].get<std::vector<uint32_t>>();
    n.users = e["users"].get<std::vector<UserId>>();
    n.kw = snap::kw_from_json(e["kw"]);
    n.ub_sup = e["sup"].get<int>();
    n.ub_w_in = e["win"].get<double>();
    for (const auto& ev : e["env"])
      n.env.push_back({ev[0].get<int32_t>(), ev[1].get<int32_t>(), ev[2].get<bool>()});
    t.nodes.push_back(std::move(n));
  }
  return t;
}

}  // namespace gsc

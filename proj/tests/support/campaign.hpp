#pragma once

// Seeded random query instances small enough for the brute-force oracle:
// the oracle-equivalence and pruning-soundness suites share these.

#include <optional>

#include "gsc/datagen.hpp"
#include "gsc/query.hpp"
#include "gsc/snapshot.hpp"

namespace campaign {

using namespace gsc;

struct Instance {
  Dataset ds;
  OfflineBounds bounds;
  IndexTree tree;
  QueryParams params;
  UserId q = 0;
};

inline OfflineBounds small_bounds(const Dataset& ds, uint64_t seed) {
  PivotConfig cfg;
  cfg.social_pivots = 4;
  cfg.road_pivots = 4;
  cfg.iterations = 24;
  cfg.sample_pairs = 120;
  cfg.seed = seed;
  return build_offline_bounds(ds, cfg);
}

inline IndexTree small_index(const Dataset& ds, const OfflineBounds& bounds, uint64_t seed) {
  IndexConfig cfg;
  cfg.fanout = 2;
  cfg.leaf_capacity = 6;
  cfg.partition_iterations = 10;
  cfg.tree_iterations = 6;
  cfg.cost_pair_budget = 400;
  cfg.seed = seed;
  return build_index(ds, bounds, cfg);
}

// Generates an instance around the published default ratios; returns nullopt
// when the seed draws an instance the oracle cannot enumerate (the caller
// advances to the next seed).
inline std::optional<Instance> make_instance(uint64_t seed) {
  Rng rng(seed * 0x9e3779b9ull + 1);

  GenConfig gcfg;
  gcfg.seed = seed;
  gcfg.users = 16 + rng.below(15);  // <= 40 users
  gcfg.deg_min = 2;
  gcfg.deg_max = 6;
  gcfg.weight_dist = "gaussian";
  gcfg.road_vertices = 24 + rng.below(16);
  gcfg.poi_count = 8 + rng.below(7);  // <= 15 POIs
  gcfg.dictionary = 5 + rng.below(3);
  gcfg.poi_kw_min = 2;
  gcfg.poi_kw_max = 4;
  gcfg.checkins_min = 3;
  gcfg.checkins_max = 8;
  gcfg.freq_min = 1;
  gcfg.freq_max = 10;
  gcfg.locality = 12.0;

  Instance inst;
  inst.ds = generate(gcfg).ds;

  // query user: someone with check-ins, preferably inside a skeleton triangle
  std::vector<UserId> active;
  for (UserId u = 0; u < inst.ds.social.user_count(); ++u)
    if (!inst.ds.checkins.checkins(u).empty()) active.push_back(u);
  if (active.empty()) return std::nullopt;
  auto in_triangle = [&](UserId u) {
    const auto& nb = inst.ds.skeleton.neighbors(u);
    for (size_t i = 0; i < nb.size(); ++i)
      for (size_t j = i + 1; j < nb.size(); ++j)
        if (inst.ds.skeleton.adjacent(nb[i], nb[j])) return true;
    return false;
  };
  inst.q = active[rng.below(active.size())];
  for (int tries = 0; tries < 10 && !in_triangle(inst.q); ++tries)
    inst.q = active[rng.below(active.size())];

  // keywords drawn from q's own visits plus one random dictionary word
  std::set<std::string> kws;
  const auto& visits = inst.ds.checkins.checkins(inst.q);
  for (int tries = 0; tries < 8 && kws.size() < 2; ++tries) {
    const auto& ks = inst.ds.pois.keyword_set(visits[rng.below(visits.size())].first);
    kws.insert(inst.ds.pois.keyword(ks[rng.below(ks.size())]));
  }
  kws.insert(inst.ds.pois.keyword(static_cast<KeywordId>(rng.below(inst.ds.pois.keyword_count()))));

  QueryParams p;
  p.q = inst.ds.social.name(inst.q);
  p.keywords.assign(kws.begin(), kws.end());
  p.k = 3;
  p.d = 2 + static_cast<int>(rng.below(2));
  p.omega = 0.15 + 0.25 * rng.real();
  p.pi = 0.2 + 0.25 * rng.real();
  p.theta = 0.25 + 0.2 * rng.real();

  // sigma as a quantile of the observed average distances toward POI_q
  auto query_kws = intern_query_keywords(inst.ds.pois, p.keywords);
  auto poi_q = compute_poi_q(inst.ds, inst.q, query_kws);
  if (poi_q.empty()) {
    p.sigma = 10.0;
  } else {
    std::vector<double> dists;
    for (PoiId pq : poi_q) {
      auto field = dijkstra(inst.ds.road, inst.ds.pois.anchor(pq));
      for (UserId u : active) dists.push_back(avg_dist_with(inst.ds.checkins, inst.ds.pois, u, field));
    }
    std::sort(dists.begin(), dists.end());
    double quantile = 0.5 + 0.45 * rng.real();
    p.sigma = dists[static_cast<size_t>(quantile * (dists.size() - 1))];
  }
  inst.params = p;

  // oracle feasibility: ball within d and the ISF-qualified set must be small
  auto hops = bfs_hops(inst.ds.skeleton, inst.q);
  size_t ball = 0;
  for (UserId u = 0; u < inst.ds.social.user_count(); ++u)
    if (hops[u] != kUnreachable && hops[u] <= p.d) ++ball;
  if (ball > 25) return std::nullopt;
  auto scores = isf_from(inst.ds.social, inst.q);
  size_t enumerable = 0;
  for (UserId u = 0; u < inst.ds.social.user_count(); ++u)
    if (u != inst.q && hops[u] != kUnreachable && hops[u] <= p.d && scores[u] >= p.theta)
      ++enumerable;
  if (enumerable > 14) return std::nullopt;

  inst.bounds = small_bounds(inst.ds, seed + 7);
  inst.tree = small_index(inst.ds, inst.bounds, seed + 11);
  return inst;
}

// First `count` oracle-feasible instances starting from a seed.
inline std::vector<Instance> make_instances(size_t count, uint64_t first_seed = 1) {
  std::vector<Instance> out;
  uint64_t seed = first_seed;
  while (out.size() < count) {
    if (auto inst = make_instance(seed)) out.push_back(std::move(*inst));
    ++seed;
    if (seed > first_seed + 40 * count) break;  // safety valve
  }
  return out;
}

}  // namespace campaign

#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "gsc/metrics.hpp"

namespace gsc {

// ---------------------------------------------------------------------------
// Per-keyword frequency aggregates for one user: f_sum is the summed frequency
// over the user's POIs carrying the keyword, f_max the maximum.
// ---------------------------------------------------------------------------

struct KwAgg {
  double f_sum = 0.0;
  double f_max = 0.0;
  bool operator==(const KwAgg&) const = default;
};

using KwMap = std::vector<std::pair<KeywordId, KwAgg>>;  // sorted by keyword id

inline const KwAgg* kw_find(const KwMap& m, KeywordId k) {
  auto it = std::lower_bound(m.begin(), m.end(), k,
                             [](const auto& e, KeywordId x) { return e.first < x; });
  return (it != m.end() && it->first == k) ? &it->second : nullptr;
}

struct UserBounds {
  KwMap kw;                       // keyword -> (f_sum, f_max) over visited POIs
  double ub_f_sum = 0.0;          // summed frequency over all visited POIs
  double ub_f_avg = 0.0;          // max single frequency over all visited POIs
  double ub_w_in = 0.0;           // max incoming edge weight
  double ub_w_out = 0.0;          // max outgoing edge weight
  int ub_sup = 0;                 // max support over incident skeleton edges
  std::vector<int32_t> pivot_hops;  // hop distance to each social pivot, -1 unreachable

  bool operator==(const UserBounds&) const = default;
};

struct PivotSets {
  std::vector<UserId> social;
  std::vector<VertexId> road;
};

struct OfflineBounds {
  std::vector<UserBounds> users;
  PivotSets pivots;
  // Road pivot distance table, one row per POI (rows double as the per-check-in
  // tables since check-in locations are POIs).
  std::vector<std::vector<double>> poi_pivot_dist;
  // Dataset-level scalars for threshold normalization.
  double max_f_sum = 0.0;
  double max_f_single = 0.0;
  uint64_t fingerprint = 0;

  AbsoluteThresholds thresholds(double omega, double pi) const {
    return {omega * max_f_sum, pi * max_f_single};
  }
};

// ---------------------------------------------------------------------------
// Frequency, influence and support bounds (no pivots involved).
// ---------------------------------------------------------------------------

inline void recompute_bipartite_bounds(const Dataset& ds, UserId u, UserBounds& b) {
  b.kw.clear();
  b.ub_f_sum = 0.0;
  b.ub_f_avg = 0.0;
  std::map<KeywordId, KwAgg> agg;
  for (const auto& [p, f] : ds.checkins.checkins(u)) {
    b.ub_f_sum += f;
    b.ub_f_avg = std::max(b.ub_f_avg, f);
    for (KeywordId k : ds.pois.keyword_set(p)) {
      auto& e = agg[k];
      e.f_sum += f;
      e.f_max = std::max(e.f_max, f);
    }
  }
  b.kw.assign(agg.begin(), agg.end());
}

inline void refresh_dataset_scalars(const Dataset& ds, OfflineBounds& bounds) {
  bounds.max_f_sum = 0.0;
  bounds.max_f_single = 0.0;
  for (UserId u = 0; u < ds.checkins.user_count(); ++u) {
    bounds.max_f_sum = std::max(bounds.max_f_sum, ds.checkins.sum_frequency(u));
    bounds.max_f_single = std::max(bounds.max_f_single, ds.checkins.max_frequency(u));
  }
}

inline void compute_user_bounds(const Dataset& ds, OfflineBounds& bounds) {
  size_t n = ds.social.user_count();
  bounds.users.assign(n, {});
  auto all_users = std::vector<UserId>(n);
  for (UserId u = 0; u < n; ++u) all_users[u] = u;
  auto support = edge_support(ds.skeleton, all_users);

  for (UserId u = 0; u < n; ++u) {
    auto& b = bounds.users[u];
    recompute_bipartite_bounds(ds, u, b);
    for (const auto& [v, w] : ds.social.out_edges(u)) b.ub_w_out = std::max(b.ub_w_out, w);
    for (const auto& [v, w] : ds.social.in_edges(u)) b.ub_w_in = std::max(b.ub_w_in, w);
    for (UserId v : ds.skeleton.neighbors(u))
      b.ub_sup = std::max(b.ub_sup, support.at(edge_key(u, v)));
  }
  refresh_dataset_scalars(ds, bounds);
  bounds.fingerprint = ds.fingerprint();
}

// ---------------------------------------------------------------------------
// Influence upper bound between two users (neighborhood-based estimation):
// max of the endpoint bounds when the direct edge exists, product otherwise.
// ---------------------------------------------------------------------------

inline double ub_isf(const OfflineBounds& bounds, const SocialNetwork& g, UserId u, UserId v) {
  double out_u = bounds.users[u].ub_w_out;
  double in_v = bounds.users[v].ub_w_in;
  return g.has_edge(u, v) ? std::max(out_u, in_v) : out_u * in_v;
}

// ---------------------------------------------------------------------------
// Pivot selection. Both selectors refine a random initial set by single-pivot
// swaps against a sampled-pair objective. The objective sums triangle-
// inequality lower bounds, so larger values mean stronger pruning; the default
// direction is therefore maximize (a flag restores the literal minimize).
// ---------------------------------------------------------------------------

struct PivotConfig {
  size_t social_pivots = 8;
  size_t road_pivots = 8;
  int iterations = 200;
  int sample_pairs = 1000;
  uint64_t seed = 1;
  bool maximize = true;
};

struct PivotSelectionStats {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int accepted_swaps = 0;
};

namespace detail {

inline std::vector<uint32_t> sample_distinct(Rng& rng, size_t n, size_t k) {
  std::vector<uint32_t> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = static_cast<uint32_t>(i);
  for (size_t i = 0; i < k && i + 1 < n; ++i) {
    size_t j = i + rng.below(n - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(std::min(k, n));
  return ids;
}

inline double social_pivot_objective(const std::vector<const std::vector<int32_t>*>& tables,
                                     const std::vector<std::pair<UserId, UserId>>& pairs) {
  double total = 0.0;
  for (const auto& [u, v] : pairs) {
    int32_t best = 0;
    for (const auto* t : tables) {
      int32_t du = (*t)[u], dv = (*t)[v];
      if (du == kUnreachable || dv == kUnreachable) continue;
      best = std::max(best, std::abs(du - dv));
    }
    total += best;
  }
  return total;
}

}  // namespace detail

inline std::vector<UserId> select_social_pivots(const Skeleton& s, size_t count, int iterations,
                                                int sample_pairs, uint64_t seed,
                                                bool maximize = true,
                                                PivotSelectionStats* stats = nullptr) {
  size_t n = s.user_count();
  if (n == 0) return {};
  count = std::min(count, n);
  Rng rng(seed);
  std::vector<UserId> pivots = detail::sample_distinct(rng, n, count);

  std::vector<std::pair<UserId, UserId>> pairs;
  if (n >= 2)
    for (int i = 0; i < sample_pairs; ++i) {
      UserId u = static_cast<UserId>(rng.below(n));
      UserId v = static_cast<UserId>(rng.below(n - 1));
      if (v >= u) ++v;
      pairs.emplace_back(u, v);
    }

  std::unordered_map<UserId, std::vector<int32_t>> bfs_cache;
  auto table = [&](UserId p) -> const std::vector<int32_t>* {
    auto it = bfs_cache.find(p);
    if (it == bfs_cache.end()) it = bfs_cache.emplace(p, bfs_hops(s, p)).first;
    return &it->second;
  };

  auto objective = [&](const std::vector<UserId>& set) {
    std::vector<const std::vector<int32_t>*> tables;
    for (UserId p : set) tables.push_back(table(p));
    return detail::social_pivot_objective(tables, pairs);
  };

  double cur = objective(pivots);
  if (stats) stats->initial_objective = cur;
  for (int it = 0; it < iterations; ++it) {
    if (count >= n) break;  // saturated set: every swap is a permutation
    UserId cand = static_cast<UserId>(rng.below(n));
    size_t slot = rng.below(count);
    if (std::find(pivots.begin(), pivots.end(), cand) != pivots.end()) continue;
    std::vector<UserId> trial = pivots;
    trial[slot] = cand;
    double val = objective(trial);
    if (maximize ? val > cur : val < cur) {
      pivots = std::move(trial);
      cur = val;
      if (stats) ++stats->accepted_swaps;
    }
  }
  if (stats) stats->final_objective = cur;
  return pivots;
}

inline std::vector<std::vector<double>> road_pivot_tables(const RoadNetwork& r,
                                                          const std::vector<VertexId>& pivots) {
  std::vector<std::vector<double>> tables;
  tables.reserve(pivots.size());
  for (VertexId p : pivots) tables.push_back(dijkstra(r, p));
  return tables;
}

namespace detail {

// One Eq-9 summand: the lower-bound average distance between user u and poi p
// under the given pivot distance fields (indexed by road vertex).
inline double lb_avg_term(const BipartiteNetwork& b, const PoiTable& pois,
                          const std::vector<const std::vector<double>*>& tables, UserId u,
                          PoiId p) {
  const auto& L = b.checkins(u);
  if (L.empty()) return 0.0;
  VertexId pv = pois.anchor(p);
  double sum = 0.0;
  for (const auto& [lp, f] : L) {
    VertexId lv = pois.anchor(lp);
    double best = 0.0;
    for (const auto* t : tables) best = std::max(best, std::abs((*t)[lv] - (*t)[pv]));
    sum += best;
  }
  return sum / static_cast<double>(L.size());
}

}  // namespace detail

inline std::vector<VertexId> select_road_pivots(const RoadNetwork& r, const BipartiteNetwork& b,
                                                const PoiTable& pois, size_t count, int iterations,
                                                int sample_pairs, uint64_t seed,
                                                bool maximize = true,
                                                PivotSelectionStats* stats = nullptr) {
  size_t n = r.vertex_count();
  if (n == 0) return {};
  count = std::min(count, n);
  Rng rng(seed);
  std::vector<VertexId> pivots = detail::sample_distinct(rng, n, count);

  // sampled (user with check-ins, poi) pairs
  std::vector<UserId> active;
  for (UserId u = 0; u < b.user_count(); ++u)
    if (!b.checkins(u).empty()) active.push_back(u);
  std::vector<std::pair<UserId, PoiId>> pairs;
  if (!active.empty() && pois.poi_count() > 0)
    for (int i = 0; i < sample_pairs; ++i)
      pairs.emplace_back(active[rng.below(active.size())],
                         static_cast<PoiId>(rng.below(pois.poi_count())));

  std::unordered_map<VertexId, std::vector<double>> cache;
  auto table = [&](VertexId p) -> const std::vector<double>* {
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, dijkstra(r, p)).first;
    return &it->second;
  };

  auto objective = [&](const std::vector<VertexId>& set) {
    std::vector<const std::vector<double>*> tables;
    for (VertexId p : set) tables.push_back(table(p));
    double total = 0.0;
    for (const auto& [u, p] : pairs) total += detail::lb_avg_term(b, pois, tables, u, p);
    return total;
  };

  double cur = objective(pivots);
  if (stats) stats->initial_objective = cur;
  for (int it = 0; it < iterations; ++it) {
    if (count >= n) break;
    VertexId cand = static_cast<VertexId>(rng.below(n));
    size_t slot = rng.below(count);
    if (std::find(pivots.begin(), pivots.end(), cand) != pivots.end()) continue;
    std::vector<VertexId> trial = pivots;
    trial[slot] = cand;
    double val = objective(trial);
    if (maximize ? val > cur : val < cur) {
      pivots = std::move(trial);
      cur = val;
      if (stats) ++stats->accepted_swaps;
    }
  }
  if (stats) stats->final_objective = cur;
  return pivots;
}

// Fills pivot-dependent tables: per-user social pivot hop vectors and the
// per-POI road pivot distance rows.
inline void compute_pivot_tables(const Dataset& ds, OfflineBounds& bounds) {
  const auto& sp = bounds.pivots.social;
  std::vector<std::vector<int32_t>> hops;
  hops.reserve(sp.size());
  for (UserId p : sp) hops.push_back(bfs_hops(ds.skeleton, p));
  for (UserId u = 0; u < ds.social.user_count(); ++u) {
    auto& v = bounds.users[u].pivot_hops;
    v.resize(sp.size());
    for (size_t i = 0; i < sp.size(); ++i) v[i] = hops[i][u];
  }

  auto tables = road_pivot_tables(ds.road, bounds.pivots.road);
  bounds.poi_pivot_dist.assign(ds.pois.poi_count(), {});
  for (PoiId p = 0; p < ds.pois.poi_count(); ++p) {
    auto& row = bounds.poi_pivot_dist[p];
    row.resize(tables.size());
    for (size_t i = 0; i < tables.size(); ++i) row[i] = tables[i][ds.pois.anchor(p)];
  }
}

inline OfflineBounds build_offline_bounds(const Dataset& ds, const PivotConfig& cfg) {
  OfflineBounds bounds;
  compute_user_bounds(ds, bounds);
  bounds.pivots.social = select_social_pivots(ds.skeleton, cfg.social_pivots, cfg.iterations,
                                              cfg.sample_pairs, cfg.seed, cfg.maximize);
  bounds.pivots.road = select_road_pivots(ds.road, ds.checkins, ds.pois, cfg.road_pivots,
                                          cfg.iterations, cfg.sample_pairs, cfg.seed + 1,
                                          cfg.maximize);
  compute_pivot_tables(ds, bounds);
  return bounds;
}

// ---------------------------------------------------------------------------
// Triangle-inequality lower bounds.
// ---------------------------------------------------------------------------

// Hop-distance lower bound between two users; pivots unreachable from either
// side are skipped, keeping the bound valid.
inline int32_t lb_dist_s(const OfflineBounds& bounds, UserId u, UserId q) {
  const auto& du = bounds.users[u].pivot_hops;
  const auto& dq = bounds.users[q].pivot_hops;
  int32_t best = 0;
  for (size_t i = 0; i < du.size(); ++i) {
    if (du[i] == kUnreachable || dq[i] == kUnreachable) continue;
    best = std::max(best, std::abs(du[i] - dq[i]));
  }
  return best;
}

inline double lb_avg_dist_r(const OfflineBounds& bounds, const BipartiteNetwork& b, UserId u,
                            PoiId p) {
  const auto& L = b.checkins(u);
  if (L.empty()) throw validation_error("lb_avg_dist_r undefined: user has no check-ins");
  const auto& pr = bounds.poi_pivot_dist[p];
  double sum = 0.0;
  for (const auto& [lp, f] : L) {
    const auto& lr = bounds.poi_pivot_dist[lp];
    double best = 0.0;
    for (size_t i = 0; i < pr.size(); ++i) best = std::max(best, std::abs(lr[i] - pr[i]));
    sum += best;
  }
  return sum / static_cast<double>(L.size());
}

// ---------------------------------------------------------------------------
// User-level pruning (the filter phase's per-user checks). Checks run cheapest
// first; the first firing check wins. Every check is individually toggleable.
// ---------------------------------------------------------------------------

enum class PruneReason : uint8_t {
  None = 0,
  Keyword,
  Omega,
  Pi,
  Support,
  SocialDist,
  Influence,
  SpatialDist,
};

inline const char* prune_reason_name(PruneReason r) {
  switch (r) {
    case PruneReason::None: return "keep";
    case PruneReason::Keyword: return "keyword";
    case PruneReason::Omega: return "omega";
    case PruneReason::Pi: return "pi";
    case PruneReason::Support: return "support";
    case PruneReason::SocialDist: return "social_dist";
    case PruneReason::Influence: return "influence";
    case PruneReason::SpatialDist: return "spatial_dist";
  }
  return "?";
}

struct LemmaToggles {
  bool keyword = true;
  bool omega = true;
  bool pi = true;        // unsound by design; disabled in sound-only mode
  bool support = true;
  bool social_dist = true;
  bool influence = true;
  bool spatial_dist = true;
};

struct PruneContext {
  const Dataset* ds = nullptr;
  const OfflineBounds* bounds = nullptr;
  UserId q = 0;
  std::vector<KeywordId> query_kws;  // sorted
  std::vector<PoiId> poi_q;          // q's keyword-matching check-ins, sorted
  double omega_abs = 0.0;
  double pi_abs = 0.0;
  double theta = 0.0;
  int k = 3;
  int d = 3;
  double sigma = 0.0;
  LemmaToggles toggles;
};

struct PruneOutcome {
  PruneReason reason = PruneReason::None;
  // min over POI_q of lb_avg_dist_r(u, p); the candidate heap key. Present
  // whenever POI_q is nonempty and u has check-ins.
  double min_lb_avg = 0.0;
  bool has_key = false;

  bool kept() const { return reason == PruneReason::None; }
};

inline bool kw_intersects(const KwMap& m, const std::vector<KeywordId>& query) {
  auto a = m.begin();
  auto b = query.begin();
  while (a != m.end() && b != query.end()) {
    if (a->first < *b)
      ++a;
    else if (*b < a->first)
      ++b;
    else
      return true;
  }
  return false;
}

// Sum / max of per-keyword aggregates restricted to the query keyword set.
inline double query_kw_sum(const KwMap& m, const std::vector<KeywordId>& query) {
  double s = 0.0;
  for (KeywordId k : query)
    if (const KwAgg* a = kw_find(m, k)) s += a->f_sum;
  return s;
}

inline double query_kw_max(const KwMap& m, const std::vector<KeywordId>& query) {
  double s = 0.0;
  for (KeywordId k : query)
    if (const KwAgg* a = kw_find(m, k)) s = std::max(s, a->f_max);
  return s;
}

inline PruneOutcome prune_user(UserId u, const PruneContext& ctx) {
  PruneOutcome out;
  const auto& ub = ctx.bounds->users[u];
  const auto& tg = ctx.toggles;

  auto spatial_key = [&]() {
    if (!ctx.poi_q.empty() && !ctx.ds->checkins.checkins(u).empty()) {
      double best = kInfDist;
      for (PoiId p : ctx.poi_q)
        best = std::min(best, lb_avg_dist_r(*ctx.bounds, ctx.ds->checkins, u, p));
      out.min_lb_avg = best;
      out.has_key = true;
    }
  };

  if (tg.keyword && !kw_intersects(ub.kw, ctx.query_kws)) {
    out.reason = PruneReason::Keyword;
    return out;
  }
  // Both the all-POI sum and the query-keyword sum upper-bound f_sum(u, V_p');
  // either dropping below omega_abs rules u out.
  if (tg.omega && (ub.ub_f_sum < ctx.omega_abs ||
                   query_kw_sum(ub.kw, ctx.query_kws) < ctx.omega_abs)) {
    out.reason = PruneReason::Omega;
    return out;
  }
  if (tg.pi && query_kw_max(ub.kw, ctx.query_kws) < ctx.pi_abs) {
    out.reason = PruneReason::Pi;
    return out;
  }
  if (tg.support && ub.ub_sup < ctx.k - 2) {
    out.reason = PruneReason::Support;
    return out;
  }
  if (tg.social_dist && lb_dist_s(*ctx.bounds, u, ctx.q) > ctx.d) {
    out.reason = PruneReason::SocialDist;
    return out;
  }
  // ISF(q,q) = 1, so the query user is never influence-pruned.
  if (tg.influence && u != ctx.q &&
      ub_isf(*ctx.bounds, ctx.ds->social, ctx.q, u) < ctx.theta) {
    out.reason = PruneReason::Influence;
    return out;
  }
  spatial_key();
  // The spatial check needs omega_abs > 0: only then must the community share
  // a POI with POI_q, which is what the bound argues against.
  if (tg.spatial_dist && ctx.omega_abs > 0.0 && !ctx.poi_q.empty() && out.has_key &&
      out.min_lb_avg > ctx.sigma) {
    out.reason = PruneReason::SpatialDist;
    return out;
  }
  return out;
}

// q's keyword-matching check-in locations (Algorithm 3 line 1).
inline std::vector<PoiId> compute_poi_q(const Dataset& ds, UserId q,
                                        const std::vector<KeywordId>& query_kws) {
  std::vector<PoiId> out;
  for (const auto& [p, f] : ds.checkins.checkins(q))
    if (ds.pois.matches(p, query_kws)) out.push_back(p);
  return out;
}

}  // namespace gsc

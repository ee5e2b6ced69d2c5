#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gsc/bounds.hpp"

namespace gsc {

inline constexpr uint32_t kNoNode = UINT32_MAX;

// ---------------------------------------------------------------------------
// Normalization constants: the largest(.) denominators of the score functions.
// Computed once over the dataset at index build time and stored in the tree;
// scores are clamped if temporal drift later exceeds a stored maximum. The
// pairwise constants (rs, dist_s) are exact on small datasets and sampled
// estimates at scale.
// ---------------------------------------------------------------------------

struct NormConstants {
  double f_sum = 1.0;
  double f_max = 1.0;
  double rs = 1.0;
  double sum_sup = 1.0;
  double ub_isf = 1.0;
  double dist_s = 1.0;
};

struct ScoreWeights {
  double bs = 1.0 / 3.0;
  double ss = 1.0 / 3.0;
  double rs = 1.0 / 3.0;
};

// Average-road-distance fields, one per "anchor" user: field[v][x] is the mean
// shortest-path distance from road vertex x to v's check-in locations. Lets
// rs_score(u,v) collapse to |u.L| lookups.
class AvgDistFieldCache {
 public:
  explicit AvgDistFieldCache(const Dataset& ds) : ds_(&ds) {}

  const std::vector<float>* field(UserId v) {
    auto it = cache_.find(v);
    if (it != cache_.end()) return &it->second;
    const auto& L = ds_->checkins.checkins(v);
    if (L.empty()) return nullptr;
    std::vector<float> acc(ds_->road.vertex_count(), 0.0f);
    for (const auto& [p, f] : L) {
      auto d = dijkstra(ds_->road, ds_->pois.anchor(p));
      for (size_t x = 0; x < d.size(); ++x) acc[x] += static_cast<float>(d[x]);
    }
    float inv = 1.0f / static_cast<float>(L.size());
    for (auto& v2 : acc) v2 *= inv;
    return &cache_.emplace(v, std::move(acc)).first->second;
  }

  void invalidate(UserId v) { cache_.erase(v); }

 private:
  const Dataset* ds_;
  std::unordered_map<UserId, std::vector<float>> cache_;
};

class HopFieldCache {
 public:
  explicit HopFieldCache(const Skeleton& s) : s_(&s) {}

  const std::vector<int32_t>& field(UserId v) {
    auto it = cache_.find(v);
    if (it == cache_.end()) it = cache_.emplace(v, bfs_hops(*s_, v)).first;
    return it->second;
  }

 private:
  const Skeleton* s_;
  std::unordered_map<UserId, std::vector<int32_t>> cache_;
};

// ---------------------------------------------------------------------------
// Score engine: the bipartite / spatial / social structure scores and the
// partition quality built from them.
// ---------------------------------------------------------------------------

class ScoreEngine {
 public:
  ScoreEngine(const Dataset& ds, const OfflineBounds& bounds, NormConstants norms)
      : ds_(&ds), bounds_(&bounds), norms_(norms), avg_fields_(ds), hop_fields_(ds.skeleton) {}

  const NormConstants& norms() const { return norms_; }
  const Dataset& dataset() const { return *ds_; }
  const OfflineBounds& bounds() const { return *bounds_; }

  // Bipartite structure score over shared keywords.
  double bs_score(UserId u, UserId v) const {
    const auto& mu = bounds_->users[u].kw;
    const auto& mv = bounds_->users[v].kw;
    double total = 0.0;
    auto a = mu.begin();
    auto b = mv.begin();
    while (a != mu.end() && b != mv.end()) {
      if (a->first < b->first)
        ++a;
      else if (b->first < a->first)
        ++b;
      else {
        total += ratio(a->second.f_sum + b->second.f_sum, norms_.f_sum);
        total += ratio(a->second.f_max + b->second.f_max, norms_.f_max);
        ++a;
        ++b;
      }
    }
    return total;
  }

  // Spatial structure score: mean over v's check-ins of avg_dist(u, p),
  // normalized. Asymmetric by construction. Throws if v has no check-ins.
  double rs_score(UserId u, UserId v) {
    double raw = rs_raw(u, v);
    return std::clamp(norms_.rs > 0.0 ? raw / norms_.rs : 0.0, 0.0, 1.0);
  }

  double rs_raw(UserId u, UserId v) {
    const auto* g = avg_fields_.field(v);
    if (!g) throw validation_error("rs_score undefined: second user has no check-ins");
    const auto& L = ds_->checkins.checkins(u);
    if (L.empty()) throw validation_error("rs_score undefined: first user has no check-ins");
    double sum = 0.0;
    for (const auto& [p, f] : L) sum += (*g)[ds_->pois.anchor(p)];
    return sum / static_cast<double>(L.size());
  }

  // Social structure score: normalized support sum + normalized influence
  // bound + (1 - normalized hop distance); unreachable pairs normalize to 1.
  double ss_score(UserId u, UserId v) {
    double sup = clamped_ratio(bounds_->users[u].ub_sup + bounds_->users[v].ub_sup,
                               norms_.sum_sup);
    double inf = clamped_ratio(ub_isf(*bounds_, ds_->social, u, v), norms_.ub_isf);
    int32_t d = hop_fields_.field(v)[u];
    double nd = (d == kUnreachable) ? 1.0 : clamped_ratio(d, norms_.dist_s);
    return sup + inf + (1.0 - nd);
  }

  // Assignment quality of Eq-style user-to-pivot mapping. rs terms with no
  // check-ins on either side contribute 0.
  double quality(UserId u, UserId piv, const ScoreWeights& w) {
    double rs = 0.0;
    if (!ds_->checkins.checkins(u).empty() && !ds_->checkins.checkins(piv).empty())
      rs = rs_score(u, piv);
    return w.bs * bs_score(u, piv) + w.ss * ss_score(u, piv) + (1.0 - w.rs * rs);
  }

  void invalidate_user(UserId u) { avg_fields_.invalidate(u); }

 private:
  static double ratio(double x, double denom) { return denom > 0.0 ? x / denom : 0.0; }
  static double clamped_ratio(double x, double denom) {
    return std::clamp(ratio(x, denom), 0.0, 1.0);
  }

  const Dataset* ds_;
  const OfflineBounds* bounds_;
  NormConstants norms_;
  AvgDistFieldCache avg_fields_;
  HopFieldCache hop_fields_;
};

// ---------------------------------------------------------------------------
// Normalization constant computation.
// ---------------------------------------------------------------------------

struct NormConfig {
  size_t rs_exact_user_limit = 300;    // all ordered pairs below this
  size_t dist_exact_user_limit = 2048; // all-sources BFS below this
  int sample_pairs = 512;
  uint64_t seed = 9;
};

inline NormConstants compute_norm_constants(const Dataset& ds, const OfflineBounds& bounds,
                                            const NormConfig& cfg = {}) {
  NormConstants n;
  n.f_sum = 0.0;
  n.f_max = 0.0;
  for (const auto& ub : bounds.users)
    for (const auto& [k, agg] : ub.kw) {
      n.f_sum = std::max(n.f_sum, agg.f_sum);
      n.f_max = std::max(n.f_max, agg.f_max);
    }

  // largest sum_sup over distinct pairs = top two ub_sup values.
  int s1 = 0, s2 = 0;
  for (const auto& ub : bounds.users) {
    if (ub.ub_sup >= s1) {
      s2 = s1;
      s1 = ub.ub_sup;
    } else {
      s2 = std::max(s2, ub.ub_sup);
    }
  }
  n.sum_sup = bounds.users.size() >= 2 ? s1 + s2 : s1;

  // largest ub_ISF over pairs: attained on a direct edge at the larger of the
  // global out/in maxima (products of values <= 1 never exceed it).
  double max_out = 0.0, max_in = 0.0;
  for (const auto& ub : bounds.users) {
    max_out = std::max(max_out, ub.ub_w_out);
    max_in = std::max(max_in, ub.ub_w_in);
  }
  n.ub_isf = std::max(max_out, max_in);

  size_t users = ds.social.user_count();
  if (users <= cfg.dist_exact_user_limit) {
    int32_t diam = 0;
    for (UserId u = 0; u < users; ++u)
      for (int32_t d : bfs_hops(ds.skeleton, u)) diam = std::max(diam, d);
    n.dist_s = diam;
  } else {
    int32_t best = 0;
    for (const auto& ub : bounds.users)
      for (int32_t d : ub.pivot_hops) best = std::max(best, d);
    n.dist_s = best;
  }

  std::vector<UserId> active;
  for (UserId u = 0; u < users; ++u)
    if (!ds.checkins.checkins(u).empty()) active.push_back(u);
  double max_rs = 0.0;
  AvgDistFieldCache fields(ds);
  if (active.size() <= cfg.rs_exact_user_limit) {
    for (UserId v : active) {
      const auto* g = fields.field(v);
      for (UserId u : active) {
        const auto& L = ds.checkins.checkins(u);
        double sum = 0.0;
        for (const auto& [p, f] : L) sum += (*g)[ds.pois.anchor(p)];
        max_rs = std::max(max_rs, sum / static_cast<double>(L.size()));
      }
    }
  } else if (!active.empty()) {
    Rng rng(cfg.seed);
    size_t anchors = std::min<size_t>(32, active.size());
    for (size_t i = 0; i < anchors; ++i) {
      UserId v = active[rng.below(active.size())];
      const auto* g = fields.field(v);
      for (int j = 0; j < cfg.sample_pairs / static_cast<int>(anchors) + 1; ++j) {
        UserId u = active[rng.below(active.size())];
        const auto& L = ds.checkins.checkins(u);
        double sum = 0.0;
        for (const auto& [p, f] : L) sum += (*g)[ds.pois.anchor(p)];
        max_rs = std::max(max_rs, sum / static_cast<double>(L.size()));
      }
    }
  }
  n.rs = max_rs;

  if (n.f_sum <= 0.0) n.f_sum = 1.0;
  if (n.f_max <= 0.0) n.f_max = 1.0;
  if (n.sum_sup <= 0.0) n.sum_sup = 1.0;
  if (n.ub_isf <= 0.0) n.ub_isf = 1.0;
  if (n.dist_s <= 0.0) n.dist_s = 1.0;
  if (n.rs <= 0.0) n.rs = 1.0;
  return n;
}

// ---------------------------------------------------------------------------
// Partitioning (leaf-level pivot assignment) and its cost model.
// ---------------------------------------------------------------------------

struct Partition {
  std::vector<uint32_t> assignment;         // user -> pivot index
  std::vector<std::vector<UserId>> groups;  // pivot index -> users
};

// Every user goes to the pivot with the highest quality; the strict '>' keeps
// the earliest maximum on ties.
inline Partition partition_social_network(ScoreEngine& eng, const std::vector<UserId>& pivots,
                                          const ScoreWeights& w,
                                          std::vector<double>* best_out = nullptr) {
  size_t n = eng.dataset().social.user_count();
  Partition part;
  part.assignment.assign(n, 0);
  part.groups.assign(pivots.size(), {});
  if (best_out) best_out->assign(n, 0.0);
  for (UserId u = 0; u < n; ++u) {
    double best = 0.0;
    uint32_t best_i = 0;
    for (uint32_t i = 0; i < pivots.size(); ++i) {
      double q = eng.quality(u, pivots[i], w);
      if (q > best) {
        best = q;
        best_i = i;
      }
    }
    part.assignment[u] = best_i;
    part.groups[best_i].push_back(u);
    if (best_out) (*best_out)[u] = best;
  }
  return part;
}

// Ordered same-subgraph pair sample for the cost model. Small instances get
// every ordered pair; larger ones a seeded structured sample (few distinct
// second elements keeps the spatial fields cheap).
inline std::vector<std::pair<UserId, UserId>> make_cost_pairs(size_t n, int budget,
                                                              uint64_t seed) {
  std::vector<std::pair<UserId, UserId>> pairs;
  if (n < 2) return pairs;
  if (n * (n - 1) <= static_cast<size_t>(budget)) {
    for (UserId u = 0; u < n; ++u)
      for (UserId v = 0; v < n; ++v)
        if (u != v) pairs.emplace_back(u, v);
    return pairs;
  }
  Rng rng(seed);
  size_t seconds = std::min<size_t>(std::max(8, budget / 16), n);
  size_t per = std::max<size_t>(1, budget / seconds);
  for (size_t i = 0; i < seconds; ++i) {
    UserId v = static_cast<UserId>(rng.below(n));
    for (size_t j = 0; j < per; ++j) {
      UserId u = static_cast<UserId>(rng.below(n - 1));
      if (u >= v) ++u;
      pairs.emplace_back(u, v);
    }
  }
  return pairs;
}

// Cost of a partition: bipartite and social affinity enter as (1 - sum),
// spatial as a raw penalty, each summed over sampled intra-subgraph pairs.
inline double pindex_cost(ScoreEngine& eng, const Partition& part,
                          const std::vector<std::pair<UserId, UserId>>& pairs,
                          const ScoreWeights& w) {
  double bs = 0.0, rs = 0.0, ss = 0.0;
  const auto& b = eng.dataset().checkins;
  for (const auto& [u, v] : pairs) {
    if (part.assignment[u] != part.assignment[v]) continue;
    bs += eng.bs_score(u, v);
    ss += eng.ss_score(u, v);
    if (!b.checkins(u).empty() && !b.checkins(v).empty()) rs += eng.rs_score(u, v);
  }
  return w.bs * (1.0 - bs) + w.rs * rs + w.ss * (1.0 - ss);
}

// Algorithm-1-style refinement: seeded random pivot set, single-pivot swap
// trials, accept strict cost decreases.
struct RefinementResult {
  std::vector<UserId> pivots;
  Partition partition;
  double cost = 0.0;
};

// Swap trials are evaluated incrementally: replacing the pivot in one slot
// re-derives each user's earliest-argmax winner from its cached best value
// (users previously assigned to the slot rescan all pivots), and the sampled
// pair scores are static, so a trial costs O(n + |pairs|) instead of a full
// repartition.
inline RefinementResult pivot_index_refinement(ScoreEngine& eng, size_t pivot_count,
                                               int threshold_iter, int pair_budget,
                                               const ScoreWeights& w, uint64_t seed) {
  size_t n = eng.dataset().social.user_count();
  pivot_count = std::min(std::max<size_t>(1, pivot_count), n);
  Rng rng(seed);

  RefinementResult res;
  res.pivots = detail::sample_distinct(rng, n, pivot_count);
  auto pairs = make_cost_pairs(n, pair_budget, seed + 1);

  std::vector<double> best_q;
  res.partition = partition_social_network(eng, res.pivots, w, &best_q);
  auto& assign = res.partition.assignment;

  // static per-pair score triples
  struct PairScore {
    double bs, ss, rs;
  };
  std::vector<PairScore> ps(pairs.size());
  const auto& checkins = eng.dataset().checkins;
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [u, v] = pairs[i];
    double rs = 0.0;
    if (!checkins.checkins(u).empty() && !checkins.checkins(v).empty())
      rs = eng.rs_score(u, v);
    ps[i] = {eng.bs_score(u, v), eng.ss_score(u, v), rs};
  }
  auto cost_of = [&](const std::vector<uint32_t>& a) {
    double bs = 0.0, rs = 0.0, ss = 0.0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      if (a[pairs[i].first] != a[pairs[i].second]) continue;
      bs += ps[i].bs;
      ss += ps[i].ss;
      rs += ps[i].rs;
    }
    return w.bs * (1.0 - bs) + w.rs * rs + w.ss * (1.0 - ss);
  };
  res.cost = cost_of(assign);

  // users that matter for the cost: members of sampled pairs
  std::vector<UserId> pair_users;
  for (const auto& [u, v] : pairs) {
    pair_users.push_back(u);
    pair_users.push_back(v);
  }
  std::sort(pair_users.begin(), pair_users.end());
  pair_users.erase(std::unique(pair_users.begin(), pair_users.end()), pair_users.end());

  // earliest-argmax winner after replacing the slot pivot, given the cached
  // winner excluding the slot (valid when the user was not assigned there)
  auto rewinner = [&](double cand_q, size_t slot, uint32_t cur_i, double cur_q) {
    return cand_q > cur_q || (cand_q == cur_q && slot < cur_i);
  };

  std::vector<uint32_t> trial_assign;
  std::vector<double> trial_best;
  for (int it = 0; it < threshold_iter; ++it) {
    if (pivot_count >= n) break;
    UserId cand = static_cast<UserId>(rng.below(n));
    size_t slot = rng.below(pivot_count);
    if (std::find(res.pivots.begin(), res.pivots.end(), cand) != res.pivots.end()) continue;
    std::vector<UserId> trial = res.pivots;
    trial[slot] = cand;

    // trial assignment restricted to the pair users
    trial_assign = assign;
    for (UserId u : pair_users) {
      if (assign[u] == slot) {
        double best = 0.0;
        uint32_t best_i = 0;
        for (uint32_t i = 0; i < trial.size(); ++i) {
          double q = eng.quality(u, trial[i], w);
          if (q > best) {
            best = q;
            best_i = i;
          }
        }
        trial_assign[u] = best_i;
      } else if (rewinner(eng.quality(u, cand, w), slot, assign[u], best_q[u])) {
        trial_assign[u] = static_cast<uint32_t>(slot);
      }
    }
    double tc = cost_of(trial_assign);
    if (tc >= res.cost) continue;

    // commit: exact incremental update of every user's winner
    res.pivots = std::move(trial);
    res.cost = tc;
    for (UserId u = 0; u < n; ++u) {
      if (assign[u] == slot) {
        double best = 0.0;
        uint32_t best_i = 0;
        for (uint32_t i = 0; i < res.pivots.size(); ++i) {
          double q = eng.quality(u, res.pivots[i], w);
          if (q > best) {
            best = q;
            best_i = i;
          }
        }
        assign[u] = best_i;
        best_q[u] = best;
      } else {
        double q = eng.quality(u, cand, w);
        if (rewinner(q, slot, assign[u], best_q[u])) {
          assign[u] = static_cast<uint32_t>(slot);
          best_q[u] = q;
        }
      }
    }
  }

  res.partition.groups.assign(pivot_count, {});
  for (UserId u = 0; u < n; ++u) res.partition.groups[assign[u]].push_back(u);
  return res;
}

// ---------------------------------------------------------------------------
// Index tree.
// ---------------------------------------------------------------------------

// Distance envelope to one social pivot over a node's users. `unreachable`
// marks that some contained user cannot reach the pivot, which voids the
// pivot's contribution to the node lower bound.
struct Envelope {
  int32_t min_d = INT32_MAX;
  int32_t max_d = -1;
  bool unreachable = false;

  bool empty() const { return max_d < 0 && !unreachable; }
  bool operator==(const Envelope&) const = default;
};

struct IndexNode {
  uint32_t id = 0;
  uint32_t parent = kNoNode;
  uint32_t level = 0;  // leaves are level 0
  bool is_leaf = true;
  std::vector<uint32_t> children;  // internal nodes
  std::vector<UserId> users;       // leaf nodes, sorted
  KwMap kw;                        // keyword -> entrywise max of (f_sum, f_max)
  int ub_sup = 0;
  double ub_w_in = 0.0;
  std::vector<Envelope> env;  // one per social pivot
};

struct IndexConfig {
  uint32_t fanout = 8;
  uint32_t leaf_capacity = 64;
  ScoreWeights weights;
  int partition_iterations = 64;
  int tree_iterations = 32;
  int cost_pair_budget = 512;
  uint64_t seed = 1;
};

struct IndexTree {
  std::vector<IndexNode> nodes;
  uint32_t root = kNoNode;
  std::vector<UserId> pivots;                        // leaf i <-> pivots[i]
  std::vector<std::vector<UserId>> level_pivots;     // per internal level (level-1 indexed)
  std::vector<std::vector<uint32_t>> level_node_ids; // node ids per internal level
  std::vector<uint32_t> leaf_of;                     // user -> leaf node id
  std::vector<uint32_t> pivot_of;                    // user -> leaf/pivot index
  NormConstants norms;
  IndexConfig config;
  uint64_t fingerprint = 0;
  uint64_t epoch = 0;

  const IndexNode& node(uint32_t id) const { return nodes[id]; }
  IndexNode& node(uint32_t id) { return nodes[id]; }

  // Highest ancestor of `id` with level <= `level` (walks parent links).
  uint32_t ancestor_at(uint32_t id, uint32_t level) const {
    while (nodes[id].level < level && nodes[id].parent != kNoNode) id = nodes[id].parent;
    return id;
  }

  bool subtree_contains(uint32_t node_id, UserId u) const {
    return ancestor_at(leaf_of[u], nodes[node_id].level) == node_id;
  }

  void collect_users(uint32_t node_id, std::vector<UserId>& out) const {
    const auto& n = nodes[node_id];
    if (n.is_leaf) {
      out.insert(out.end(), n.users.begin(), n.users.end());
      return;
    }
    for (uint32_t c : n.children) collect_users(c, out);
  }

  std::vector<UserId> subtree_users(uint32_t node_id) const {
    std::vector<UserId> out;
    collect_users(node_id, out);
    std::sort(out.begin(), out.end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// Aggregate maintenance.
// ---------------------------------------------------------------------------

inline void kw_merge_max(KwMap& into, const KwMap& from) {
  KwMap out;
  out.reserve(into.size() + from.size());
  auto a = into.begin();
  auto b = from.begin();
  while (a != into.end() || b != from.end()) {
    if (b == from.end() || (a != into.end() && a->first < b->first)) {
      out.push_back(*a++);
    } else if (a == into.end() || b->first < a->first) {
      out.push_back(*b++);
    } else {
      out.push_back({a->first,
                     {std::max(a->second.f_sum, b->second.f_sum),
                      std::max(a->second.f_max, b->second.f_max)}});
      ++a;
      ++b;
    }
  }
  into = std::move(out);
}

inline void env_absorb(Envelope& e, int32_t d) {
  if (d == kUnreachable) {
    e.unreachable = true;
    return;
  }
  e.min_d = std::min(e.min_d, d);
  e.max_d = std::max(e.max_d, d);
}

inline void env_merge(Envelope& e, const Envelope& o) {
  e.unreachable = e.unreachable || o.unreachable;
  e.min_d = std::min(e.min_d, o.min_d);
  e.max_d = std::max(e.max_d, o.max_d);
}

inline void recompute_leaf_aggregates(IndexTree& tree, const OfflineBounds& bounds,
                                      uint32_t leaf_id) {
  auto& n = tree.node(leaf_id);
  size_t pivots = bounds.pivots.social.size();
  n.kw.clear();
  n.ub_sup = 0;
  n.ub_w_in = 0.0;
  n.env.assign(pivots, {});
  for (UserId u : n.users) {
    const auto& ub = bounds.users[u];
    kw_merge_max(n.kw, ub.kw);
    n.ub_sup = std::max(n.ub_sup, ub.ub_sup);
    n.ub_w_in = std::max(n.ub_w_in, ub.ub_w_in);
    for (size_t i = 0; i < pivots; ++i) env_absorb(n.env[i], ub.pivot_hops[i]);
  }
}

inline void recompute_internal_aggregates(IndexTree& tree, uint32_t node_id) {
  auto& n = tree.node(node_id);
  size_t pivots = n.env.size();
  n.kw.clear();
  n.ub_sup = 0;
  n.ub_w_in = 0.0;
  n.env.assign(pivots, {});
  for (uint32_t c : n.children) {
    const auto& cn = tree.node(c);
    kw_merge_max(n.kw, cn.kw);
    n.ub_sup = std::max(n.ub_sup, cn.ub_sup);
    n.ub_w_in = std::max(n.ub_w_in, cn.ub_w_in);
    if (n.env.size() < cn.env.size()) n.env.resize(cn.env.size());
    for (size_t i = 0; i < cn.env.size(); ++i) env_merge(n.env[i], cn.env[i]);
  }
}

inline void recompute_all_aggregates(IndexTree& tree, const OfflineBounds& bounds) {
  uint32_t max_level = tree.node(tree.root).level;
  for (auto& n : tree.nodes)
    if (n.is_leaf) recompute_leaf_aggregates(tree, bounds, n.id);
  for (uint32_t lv = 1; lv <= max_level; ++lv)
    for (auto& n : tree.nodes)
      if (!n.is_leaf && n.level == lv) recompute_internal_aggregates(tree, n.id);
}

// ---------------------------------------------------------------------------
// Node-level scores (tree construction and temporal remapping).
// ---------------------------------------------------------------------------

// Point-to-envelope hop lower bound against one node. Sound: per pivot the
// contribution is the distance from q's pivot distance to the node's
// [min,max] span, zero when any contained user is unreachable or when q is
// inside the node.
inline int32_t lb_dist_s_node(const IndexTree& tree, const OfflineBounds& bounds, UserId q,
                              uint32_t node_id, bool q_inside) {
  if (q_inside) return 0;
  const auto& n = tree.node(node_id);
  const auto& qh = bounds.users[q].pivot_hops;
  int32_t best = 0;
  for (size_t i = 0; i < n.env.size() && i < qh.size(); ++i) {
    const auto& e = n.env[i];
    if (e.unreachable || e.empty() || qh[i] == kUnreachable) continue;
    int32_t lo = e.min_d, hi = e.max_d;
    int32_t c = 0;
    if (qh[i] < lo)
      c = lo - qh[i];
    else if (qh[i] > hi)
      c = qh[i] - hi;
    best = std::max(best, c);
  }
  return best;
}

class NodeScoreEngine {
 public:
  NodeScoreEngine(const IndexTree& tree, const OfflineBounds& bounds)
      : tree_(&tree), bounds_(&bounds) {}

  double bs_score_node(uint32_t node_id, UserId piv) const {
    const auto& nk = tree_->node(node_id).kw;
    const auto& pk = bounds_->users[piv].kw;
    const auto& nm = tree_->norms;
    double fsum = 0.0, fmax = 0.0;
    auto a = nk.begin();
    auto b = pk.begin();
    while (a != nk.end() && b != pk.end()) {
      if (a->first < b->first)
        ++a;
      else if (b->first < a->first)
        ++b;
      else {
        fsum += a->second.f_sum + b->second.f_sum;
        fmax += a->second.f_max + b->second.f_max;
        ++a;
        ++b;
      }
    }
    return (nm.f_sum > 0 ? fsum / nm.f_sum : 0.0) + (nm.f_max > 0 ? fmax / nm.f_max : 0.0);
  }

  double ss_score_node(uint32_t node_id, UserId piv) const {
    const auto& n = tree_->node(node_id);
    const auto& pb = bounds_->users[piv];
    const auto& nm = tree_->norms;
    double sup = std::clamp((n.ub_sup + pb.ub_sup) / std::max(nm.sum_sup, 1e-300), 0.0, 1.0);
    double inf = std::clamp(pb.ub_w_out * n.ub_w_in / std::max(nm.ub_isf, 1e-300), 0.0, 1.0);
    bool inside = tree_->subtree_contains(node_id, piv);
    double nd = std::clamp(lb_dist_s_node(*tree_, *bounds_, piv, node_id, inside) /
                               std::max(nm.dist_s, 1e-300),
                           0.0, 1.0);
    return sup + inf + (1.0 - nd);
  }

  double quality_node(uint32_t node_id, UserId piv, const ScoreWeights& w) const {
    return w.bs * bs_score_node(node_id, piv) + w.ss * ss_score_node(node_id, piv);
  }

  double tree_cost(const std::vector<uint32_t>& node_ids, const std::vector<UserId>& pivots,
                   const ScoreWeights& w) const {
    double bs = 0.0, ss = 0.0;
    for (uint32_t id : node_ids)
      for (UserId piv : pivots) {
        bs += bs_score_node(id, piv);
        ss += ss_score_node(id, piv);
      }
    return w.bs * (1.0 - bs) + w.ss * (1.0 - ss);
  }

 private:
  const IndexTree* tree_;
  const OfflineBounds* bounds_;
};

// ---------------------------------------------------------------------------
// Tree construction. Leaves wrap the partition subgraphs (one leaf per pivot,
// kept even when empty so temporal migration targets stay stable). Internal
// levels pick ceil(count/fanout) node-pivots out of the leaf pivot set by
// swap refinement against the tree cost, then assign each node to its argmax
// quality pivot.
// ---------------------------------------------------------------------------

inline IndexTree build_tree(const Dataset& ds, const OfflineBounds& bounds,
                            const RefinementResult& part, NormConstants norms,
                            const IndexConfig& cfg) {
  if (cfg.fanout < 2) throw validation_error("index fanout must be >= 2");
  IndexTree tree;
  tree.norms = norms;
  tree.config = cfg;
  tree.pivots = part.pivots;
  tree.fingerprint = bounds.fingerprint;

  size_t n_users = ds.social.user_count();
  tree.leaf_of.assign(n_users, kNoNode);
  tree.pivot_of.assign(n_users, 0);

  std::vector<uint32_t> level;  // node ids at the current top level
  for (size_t i = 0; i < part.pivots.size(); ++i) {
    IndexNode leaf;
    leaf.id = static_cast<uint32_t>(tree.nodes.size());
    leaf.is_leaf = true;
    leaf.level = 0;
    leaf.users = part.partition.groups[i];
    std::sort(leaf.users.begin(), leaf.users.end());
    for (UserId u : leaf.users) {
      tree.leaf_of[u] = leaf.id;
      tree.pivot_of[u] = static_cast<uint32_t>(i);
    }
    tree.nodes.push_back(std::move(leaf));
    level.push_back(tree.nodes.back().id);
  }
  for (uint32_t id : level) recompute_leaf_aggregates(tree, bounds, id);

  Rng rng(cfg.seed + 17);
  uint32_t lv = 0;
  while (level.size() > 1) {
    ++lv;
    size_t want = (level.size() + cfg.fanout - 1) / cfg.fanout;
    NodeScoreEngine nse(tree, bounds);

    // choose the level pivot subset out of the leaf pivots
    std::vector<UserId> pool = tree.pivots;
    std::vector<UserId> chosen;
    {
      auto idx = detail::sample_distinct(rng, pool.size(), want);
      for (auto i : idx) chosen.push_back(pool[i]);
      double cost = nse.tree_cost(level, chosen, cfg.weights);
      for (int it = 0; it < cfg.tree_iterations && pool.size() > chosen.size(); ++it) {
        UserId cand = pool[rng.below(pool.size())];
        size_t slot = rng.below(chosen.size());
        if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
        std::vector<UserId> trial = chosen;
        trial[slot] = cand;
        double tc = nse.tree_cost(level, trial, cfg.weights);
        if (tc < cost) {
          chosen = std::move(trial);
          cost = tc;
        }
      }
    }
    tree.level_pivots.push_back(chosen);

    // assign each node to its best pivot (earliest max on ties)
    std::vector<std::vector<uint32_t>> groups(chosen.size());
    for (uint32_t id : level) {
      double best = 0.0;
      size_t best_i = 0;
      for (size_t i = 0; i < chosen.size(); ++i) {
        double q = nse.quality_node(id, chosen[i], cfg.weights);
        if (q > best) {
          best = q;
          best_i = i;
        }
      }
      groups[best_i].push_back(id);
    }

    std::vector<uint32_t> next;
    for (size_t i = 0; i < chosen.size(); ++i) {
      IndexNode node;
      node.id = static_cast<uint32_t>(tree.nodes.size());
      node.is_leaf = false;
      node.level = lv;
      node.children = groups[i];
      tree.nodes.push_back(node);
      for (uint32_t c : groups[i]) tree.node(c).parent = tree.nodes.back().id;
      next.push_back(tree.nodes.back().id);
    }
    for (uint32_t id : next) recompute_internal_aggregates(tree, id);
    tree.level_node_ids.push_back(next);
    level = std::move(next);
  }

  // ensure the root is an internal node even for a single leaf
  if (tree.nodes.size() == 1 || tree.node(level.front()).is_leaf) {
    IndexNode root;
    root.id = static_cast<uint32_t>(tree.nodes.size());
    root.is_leaf = false;
    root.level = tree.node(level.front()).level + 1;
    root.children = {level.front()};
    tree.nodes.push_back(root);
    tree.node(level.front()).parent = tree.nodes.back().id;
    tree.level_pivots.push_back({tree.pivots.empty() ? 0 : tree.pivots.front()});
    tree.level_node_ids.push_back({tree.nodes.back().id});
    recompute_internal_aggregates(tree, tree.nodes.back().id);
    level = {tree.nodes.back().id};
  }
  tree.root = level.front();
  return tree;
}

inline IndexTree build_index(const Dataset& ds, const OfflineBounds& bounds,
                             const IndexConfig& cfg) {
  if (bounds.fingerprint != ds.fingerprint())
    throw epoch_mismatch("offline bounds were computed for a different dataset");
  size_t n = ds.social.user_count();
  size_t s = std::max<size_t>(1, (n + cfg.leaf_capacity - 1) / cfg.leaf_capacity);
  NormConstants norms = compute_norm_constants(ds, bounds);
  ScoreEngine eng(ds, bounds, norms);
  auto part = pivot_index_refinement(eng, s, cfg.partition_iterations, cfg.cost_pair_budget,
                                     cfg.weights, cfg.seed);
  return build_tree(ds, bounds, part, norms, cfg);
}

// ---------------------------------------------------------------------------
// Index-level pruning (node counterparts of the user checks, applied in the
// same keyword / omega / pi / influence / support / social-distance order the
// traversal expects).
// ---------------------------------------------------------------------------

struct NodePruneContext {
  const PruneContext* user_ctx = nullptr;
  const IndexTree* tree = nullptr;
  // q's direct out-neighbors; a direct edge into a node switches the influence
  // bound from the product form to the max form.
  std::vector<UserId> q_out_neighbors;
};

inline PruneReason prune_node(uint32_t node_id, const NodePruneContext& nctx) {
  const auto& ctx = *nctx.user_ctx;
  const auto& tree = *nctx.tree;
  const auto& n = tree.node(node_id);
  const auto& tg = ctx.toggles;

  if (tg.keyword && !kw_intersects(n.kw, ctx.query_kws)) return PruneReason::Keyword;
  // Every community POI matches some query keyword, so a member's in-community
  // frequency sum is covered by the sum of its per-query-keyword sums.
  if (tg.omega && query_kw_sum(n.kw, ctx.query_kws) < ctx.omega_abs) return PruneReason::Omega;
  if (tg.pi && query_kw_max(n.kw, ctx.query_kws) < ctx.pi_abs) return PruneReason::Pi;

  bool q_inside = tree.subtree_contains(node_id, ctx.q);
  if (tg.influence && !q_inside) {
    bool direct_edge = false;
    for (UserId v : nctx.q_out_neighbors)
      if (tree.subtree_contains(node_id, v)) {
        direct_edge = true;
        break;
      }
    double out_q = ctx.bounds->users[ctx.q].ub_w_out;
    double bound = direct_edge ? std::max(out_q, n.ub_w_in) : out_q * n.ub_w_in;
    if (bound < ctx.theta) return PruneReason::Influence;
  }
  if (tg.support && n.ub_sup < ctx.k - 2) return PruneReason::Support;
  if (tg.social_dist &&
      lb_dist_s_node(tree, *ctx.bounds, ctx.q, node_id, q_inside) > ctx.d)
    return PruneReason::SocialDist;
  return PruneReason::None;
}

}  // namespace gsc

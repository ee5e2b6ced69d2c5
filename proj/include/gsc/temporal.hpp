#pragma once

#include <memory>
#include <set>

#include "gsc/query.hpp"

namespace gsc {

// ---------------------------------------------------------------------------
// Temporal visit logs and the sliding window.
// ---------------------------------------------------------------------------

struct TemporalVisitLog {
  // per user, append-ordered (poi, timestamp) events
  std::vector<std::vector<std::pair<PoiId, int64_t>>> events;

  void resize(size_t users) { events.resize(users); }

  void add(UserId u, PoiId p, int64_t t) {
    if (t < 0) throw validation_error("negative timestamp");
    events[u].push_back({p, t});
  }
};

/// Count of u's visits to p inside the window [t - tau + 1, t].
inline int64_t window_frequency(const TemporalVisitLog& log, UserId u, PoiId p, int64_t t,
                                int64_t tau) {
  if (tau < 1) throw validation_error("window size must be >= 1");
  int64_t lo = t - tau + 1;
  int64_t n = 0;
  for (const auto& [poi, ts] : log.events[u])
    if (poi == p && ts >= lo && ts <= t) ++n;
  return n;
}

// Windowed bipartite view: an edge exists exactly when its window count is
// positive.
inline BipartiteNetwork derive_bipartite(const TemporalVisitLog& log, size_t users, size_t pois,
                                         int64_t t, int64_t tau) {
  BipartiteNetwork b(users, pois);
  int64_t lo = t - tau + 1;
  for (UserId u = 0; u < users; ++u) {
    std::map<PoiId, int64_t> counts;
    for (const auto& [p, ts] : log.events[u])
      if (ts >= lo && ts <= t) ++counts[p];
    for (const auto& [p, c] : counts) b.set_frequency(u, p, static_cast<double>(c));
  }
  return b;
}

inline TemporalVisitLog load_temporal_checkins(const std::string& path,
                                               const SocialNetwork& social,
                                               const PoiTable& pois) {
  TemporalVisitLog log;
  log.resize(social.user_count());
  for_each_line(path, [&](size_t lineno, const std::vector<std::string>& t) {
    if (t.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 'u p t'");
    auto u = social.find_user(t[0]);
    if (!u)
      throw validation_error(path + ":" + std::to_string(lineno) + ": unknown user '" + t[0] + "'");
    auto p = pois.find_poi(t[1]);
    if (!p)
      throw validation_error(path + ":" + std::to_string(lineno) + ": unknown poi '" + t[1] + "'");
    int64_t ts = parse_int(t[2], path, lineno);
    if (ts < 0)
      throw validation_error(path + ":" + std::to_string(lineno) + ": negative timestamp");
    log.add(*u, *p, ts);
  });
  return log;
}

inline void save_temporal_checkins(const TemporalVisitLog& log, const SocialNetwork& social,
                                   const PoiTable& pois, const std::string& path) {
  std::ofstream out(path);
  for (UserId u = 0; u < log.events.size(); ++u)
    for (const auto& [p, t] : log.events[u])
      out << social.name(u) << ' ' << pois.name(p) << ' ' << t << '\n';
}

// ---------------------------------------------------------------------------
// Update batches.
// ---------------------------------------------------------------------------

enum class BatchOp : uint8_t { Insertion, Deletion };

struct UpdateEvent {
  UserId user;
  PoiId poi;
  int64_t t;
};

struct UpdateBatch {
  BatchOp op = BatchOp::Insertion;
  std::vector<UpdateEvent> events;
  int64_t t = 0;    // current time
  int64_t tau = 30; // window size
};

// ---------------------------------------------------------------------------
// Engine state: the evolving dataset plus its maintained bounds, index and
// registered community answers. Single-writer: one batch application at a
// time; readers see the pre-batch snapshot until the epoch counter bumps.
// ---------------------------------------------------------------------------

struct RegisteredQuery {
  QueryParams params;
  UserId q = 0;
  CommunityAnswer answer;
  bool removed = false;  // emptied by a deletion batch
};

struct EngineState {
  Dataset ds;
  TemporalVisitLog log;
  OfflineBounds bounds;
  IndexTree tree;
  std::vector<RegisteredQuery> queries;
  int64_t current_time = 0;
  int64_t tau = 30;
  uint64_t epoch = 0;
  int enum_limit = 18;
};

struct EngineConfig {
  PivotConfig pivot;
  IndexConfig index;
  int enum_limit = 18;
};

inline EngineState make_engine(SocialNetwork social, RoadNetwork road, PoiTable pois,
                               TemporalVisitLog log, int64_t t0, int64_t tau,
                               const EngineConfig& cfg = {}) {
  EngineState st;
  st.ds.social = std::move(social);
  st.ds.skeleton = undirected_skeleton(st.ds.social);
  st.ds.road = std::move(road);
  st.ds.pois = std::move(pois);
  st.log = std::move(log);
  st.log.resize(st.ds.social.user_count());
  st.current_time = t0;
  st.tau = tau;
  st.enum_limit = cfg.enum_limit;
  st.ds.checkins =
      derive_bipartite(st.log, st.ds.social.user_count(), st.ds.pois.poi_count(), t0, tau);
  st.bounds = build_offline_bounds(st.ds, cfg.pivot);
  st.tree = build_index(st.ds, st.bounds, cfg.index);
  return st;
}

inline size_t register_query(EngineState& st, const QueryParams& params) {
  params.validate();
  RegisteredQuery rq;
  rq.params = params;
  rq.q = st.ds.social.require_user(params.q);
  QueryOptions opts;
  opts.enum_limit = st.enum_limit;
  rq.answer = answer_query(st.ds, st.bounds, st.tree, params, opts).answer;
  st.queries.push_back(std::move(rq));
  return st.queries.size() - 1;
}

// ---------------------------------------------------------------------------
// Community maintenance (per update x registered community, in batch and
// registration order).
// ---------------------------------------------------------------------------

inline void maintain_communities(EngineState& st, const UpdateBatch& batch,
                                 std::vector<RegisteredQuery>* registry = nullptr) {
  auto& queries = registry ? *registry : st.queries;
  for (const auto& ev : batch.events) {
    for (auto& rq : queries) {
      if (rq.removed || rq.answer.empty()) continue;
      auto abs = st.bounds.thresholds(rq.params.omega, rq.params.pi);
      auto kws = intern_query_keywords(st.ds.pois, rq.params.keywords);
      bool member = std::binary_search(rq.answer.users.begin(), rq.answer.users.end(), ev.user);
      if (batch.op == BatchOp::Insertion) {
        if (member) {
          // The update is recorded with the frequencies; a first visit to a
          // community POI can still drag its average below pi, so the bullets
          // are re-checked and the community re-refined if one broke.
          auto rep = verify_community(rq.answer, st.ds, rq.params, rq.q, kws, abs);
          if (!rep.valid()) {
            rq.answer = refinement(st.ds, rq.answer.users, rq.q, kws, abs, rq.params,
                                   st.enum_limit);
            if (rq.answer.empty()) rq.removed = true;
          }
        } else {
          std::vector<UserId> extended = rq.answer.users;
          extended.insert(std::lower_bound(extended.begin(), extended.end(), ev.user), ev.user);
          auto refined = refinement(st.ds, extended, rq.q, kws, abs, rq.params, st.enum_limit);
          if (refined.users == extended) rq.answer = refined;
          // otherwise the update is discarded for this community
        }
      } else {
        if (member) {
          rq.answer =
              refinement(st.ds, rq.answer.users, rq.q, kws, abs, rq.params, st.enum_limit);
          if (rq.answer.empty()) rq.removed = true;
        }
        // expirations by non-members cannot affect the community
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Index maintenance: migrate affected users to their best pivot when the
// quality gain clears the stability margin, refresh touched leaf aggregates,
// then sweep internal levels bottom-up (refresh + remap against the parent
// pivot level).
// ---------------------------------------------------------------------------

inline void maintain_index(EngineState& st, const UpdateBatch& batch, double delta) {
  auto& tree = st.tree;
  if (tree.pivots.empty()) return;
  ScoreEngine eng(st.ds, st.bounds, tree.norms);

  std::set<UserId> affected;
  for (const auto& ev : batch.events) affected.insert(ev.user);

  std::set<uint32_t> touched_leaves;
  for (UserId u : affected) {
    touched_leaves.insert(tree.leaf_of[u]);
    uint32_t cur = tree.pivot_of[u];
    double best_q = 0.0;
    uint32_t best = 0;
    for (uint32_t i = 0; i < tree.pivots.size(); ++i) {
      double q = eng.quality(u, tree.pivots[i], tree.config.weights);
      if (q > best_q) {
        best_q = q;
        best = i;
      }
    }
    if (best != cur && best_q > eng.quality(u, tree.pivots[cur], tree.config.weights) + delta) {
      auto& src = tree.node(tree.leaf_of[u]).users;
      src.erase(std::lower_bound(src.begin(), src.end(), u));
      auto& dst = tree.node(static_cast<uint32_t>(best)).users;  // leaf ids == pivot index
      dst.insert(std::lower_bound(dst.begin(), dst.end(), u), u);
      tree.leaf_of[u] = best;
      tree.pivot_of[u] = best;
      touched_leaves.insert(best);
    }
  }
  for (uint32_t leaf : touched_leaves) recompute_leaf_aggregates(tree, st.bounds, leaf);

  // bottom-up: refresh aggregates level by level, remapping nodes below the
  // root when another parent pivot clears the margin
  uint32_t top = tree.node(tree.root).level;
  NodeScoreEngine nse(tree, st.bounds);
  for (uint32_t lv = 1; lv <= top; ++lv) {
    for (auto& n : tree.nodes)
      if (!n.is_leaf && n.level == lv) recompute_internal_aggregates(tree, n.id);
    if (lv >= top) break;
    // remap nodes at this level among the level's parent pivots
    const auto& pivots = tree.level_pivots[lv];
    const auto& parents = tree.level_node_ids[lv];
    for (auto& n : tree.nodes) {
      if (n.level != lv || n.parent == kNoNode) continue;
      uint32_t cur_parent = n.parent;
      size_t cur_idx = 0;
      for (size_t j = 0; j < parents.size(); ++j)
        if (parents[j] == cur_parent) cur_idx = j;
      double best_q = 0.0;
      size_t best = 0;
      for (size_t j = 0; j < pivots.size(); ++j) {
        double q = nse.quality_node(n.id, pivots[j], tree.config.weights);
        if (q > best_q) {
          best_q = q;
          best = j;
        }
      }
      if (best != cur_idx &&
          best_q > nse.quality_node(n.id, pivots[cur_idx], tree.config.weights) + delta) {
        auto& oldc = tree.node(cur_parent).children;
        oldc.erase(std::find(oldc.begin(), oldc.end(), n.id));
        tree.node(parents[best]).children.push_back(n.id);
        n.parent = parents[best];
      }
    }
  }
  for (uint32_t lv = 1; lv <= top; ++lv)
    for (auto& n : tree.nodes)
      if (!n.is_leaf && n.level == lv) recompute_internal_aggregates(tree, n.id);
}

// ---------------------------------------------------------------------------
// Batch application: frequencies, affected bounds, dataset scalars, then the
// community and index maintenance passes. Commits atomically from a reader's
// point of view via the epoch bump.
// ---------------------------------------------------------------------------

inline void apply_batch(EngineState& st, const UpdateBatch& batch, double delta = 0.05,
                        std::vector<RegisteredQuery>* registry = nullptr,
                        bool run_communities = true, bool run_index = true) {
  if (batch.t < st.current_time)
    throw validation_error("batch time must not move backwards");
  if (batch.tau != st.tau) throw validation_error("batch window does not match engine window");
  for (const auto& ev : batch.events) {
    if (ev.user >= st.ds.social.user_count()) throw validation_error("unknown user in batch");
    if (ev.poi >= st.ds.pois.poi_count()) throw validation_error("unknown poi in batch");
  }
  int64_t lo = batch.t - batch.tau + 1;

  std::set<UserId> affected;
  if (batch.op == BatchOp::Insertion) {
    for (const auto& ev : batch.events) {
      if (ev.t > batch.t)
        throw validation_error("insertion event timestamp is in the future");
      st.log.add(ev.user, ev.poi, ev.t);
      affected.insert(ev.user);
    }
    for (UserId u : affected) {
      // recompute the user's row from the log at the (possibly advanced) time
      std::map<PoiId, int64_t> counts;
      for (const auto& [p, ts] : st.log.events[u])
        if (ts >= lo && ts <= batch.t) ++counts[p];
      std::vector<PoiId> current;
      for (const auto& [p, f] : st.ds.checkins.checkins(u)) current.push_back(p);
      for (PoiId p : current)
        if (!counts.count(p)) st.ds.checkins.set_frequency(u, p, 0.0);
      for (const auto& [p, c] : counts)
        st.ds.checkins.set_frequency(u, p, static_cast<double>(c));
    }
  } else {
    for (const auto& ev : batch.events) {
      if (ev.t >= lo)
        throw validation_error("deletion batch lists an unexpired event");
      affected.insert(ev.user);
    }
    for (UserId u : affected) {
      auto& evs = st.log.events[u];
      evs.erase(std::remove_if(evs.begin(), evs.end(),
                               [&](const auto& e) { return e.second < lo; }),
                evs.end());
      std::map<PoiId, int64_t> counts;
      for (const auto& [p, ts] : evs)
        if (ts >= lo && ts <= batch.t) ++counts[p];
      std::vector<PoiId> current;
      for (const auto& [p, f] : st.ds.checkins.checkins(u)) current.push_back(p);
      for (PoiId p : current)
        if (!counts.count(p)) st.ds.checkins.set_frequency(u, p, 0.0);
      for (const auto& [p, c] : counts)
        st.ds.checkins.set_frequency(u, p, static_cast<double>(c));
    }
  }

  for (UserId u : affected) recompute_bipartite_bounds(st.ds, u, st.bounds.users[u]);
  refresh_dataset_scalars(st.ds, st.bounds);

  // refresh the bipartite-derived normalization constants; the social and
  // pairwise spatial constants stay frozen for the epoch (scores clamp)
  double fs = 0.0, fm = 0.0;
  for (const auto& ub : st.bounds.users)
    for (const auto& [k, agg] : ub.kw) {
      fs = std::max(fs, agg.f_sum);
      fm = std::max(fm, agg.f_max);
    }
  st.tree.norms.f_sum = fs > 0.0 ? fs : 1.0;
  st.tree.norms.f_max = fm > 0.0 ? fm : 1.0;

  st.current_time = batch.t;
  uint64_t fp = st.ds.fingerprint();
  st.bounds.fingerprint = fp;
  st.tree.fingerprint = fp;
  ++st.epoch;

  if (run_communities) maintain_communities(st, batch, registry);
  if (run_index) maintain_index(st, batch, delta);
}

}  // namespace gsc

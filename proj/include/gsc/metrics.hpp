#pragma once

#include <algorithm>
#include <deque>
#include <queue>
#include <unordered_map>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

// ---------------------------------------------------------------------------
// Influence score: maximum over directed paths of the product of edge weights.
// Weights are <= 1, so products never grow along a path extension and a
// best-first search settles vertices at their exact maximum.
// ---------------------------------------------------------------------------

inline std::vector<double> isf_from(const SocialNetwork& g, UserId src) {
  std::vector<double> best(g.user_count(), 0.0);
  std::vector<char> settled(g.user_count(), 0);
  std::priority_queue<std::pair<double, UserId>> pq;
  best[src] = 1.0;
  pq.push({1.0, src});
  while (!pq.empty()) {
    auto [score, u] = pq.top();
    pq.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    for (const auto& [v, w] : g.out_edges(u)) {
      double s = score * w;
      if (s > best[v]) {
        best[v] = s;
        pq.push({s, v});
      }
    }
  }
  return best;
}

/// ISF(u,v): 1 if u == v, 0 if v is unreachable from u.
inline double isf(const SocialNetwork& g, UserId u, UserId v) {
  if (u >= g.user_count() || v >= g.user_count()) throw validation_error("unknown user id");
  if (u == v) return 1.0;
  return isf_from(g, u)[v];
}

// ---------------------------------------------------------------------------
// Hop distances on the undirected skeleton.
// ---------------------------------------------------------------------------

inline std::vector<int32_t> bfs_hops(const Skeleton& s, UserId src) {
  std::vector<int32_t> dist(s.user_count(), kUnreachable);
  std::deque<UserId> q;
  dist[src] = 0;
  q.push_back(src);
  while (!q.empty()) {
    UserId u = q.front();
    q.pop_front();
    for (UserId v : s.neighbors(u))
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

inline int32_t hop_distance(const Skeleton& s, UserId a, UserId b) {
  if (a >= s.user_count() || b >= s.user_count()) throw validation_error("unknown user id");
  if (a == b) return 0;
  return bfs_hops(s, a)[b];
}

// ---------------------------------------------------------------------------
// Road-network shortest paths (Dijkstra over edge lengths).
// ---------------------------------------------------------------------------

inline std::vector<double> dijkstra(const RoadNetwork& r, VertexId src) {
  std::vector<double> dist(r.vertex_count(), kInfDist);
  std::priority_queue<std::pair<double, VertexId>, std::vector<std::pair<double, VertexId>>,
                      std::greater<>>
      pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (const auto& [w, len] : r.edges(v)) {
      double nd = d + len;
      if (nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    }
  }
  return dist;
}

inline double road_distance(const RoadNetwork& r, VertexId a, VertexId b) {
  if (a >= r.vertex_count() || b >= r.vertex_count()) throw validation_error("unknown road vertex");
  if (a == b) return 0.0;
  return dijkstra(r, a)[b];
}

// ---------------------------------------------------------------------------
// Average user-to-POI road distance: the mean over u's check-in locations of
// the shortest-path distance to p's location. Undefined for users with no
// check-ins.
// ---------------------------------------------------------------------------

// Variant over a precomputed distance field from p's anchor vertex.
inline double avg_dist_with(const BipartiteNetwork& b, const PoiTable& pois, UserId u,
                            const std::vector<double>& dist_from_p) {
  const auto& L = b.checkins(u);
  if (L.empty()) throw validation_error("avg_dist undefined: user has no check-ins");
  double sum = 0.0;
  for (const auto& [poi, f] : L) sum += dist_from_p[pois.anchor(poi)];
  return sum / static_cast<double>(L.size());
}

inline double avg_dist(const BipartiteNetwork& b, const RoadNetwork& r, const PoiTable& pois,
                       UserId u, PoiId p) {
  return avg_dist_with(b, pois, u, dijkstra(r, pois.anchor(p)));
}

// ---------------------------------------------------------------------------
// Edge support within an induced subgraph: for every skeleton edge with both
// endpoints in the set, the number of common neighbors inside the set.
// ---------------------------------------------------------------------------

inline uint64_t edge_key(UserId u, UserId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<uint64_t>(u) << 32) | v;
}

inline std::unordered_map<uint64_t, int> edge_support(const Skeleton& s,
                                                      const std::vector<UserId>& users) {
  std::vector<char> in(s.user_count(), 0);
  for (UserId u : users) in[u] = 1;
  std::unordered_map<uint64_t, int> sup;
  for (UserId u : users) {
    for (UserId v : s.neighbors(u)) {
      if (v <= u || !in[v]) continue;
      int count = 0;
      const auto& nu = s.neighbors(u);
      const auto& nv = s.neighbors(v);
      auto a = nu.begin();
      auto b = nv.begin();
      while (a != nu.end() && b != nv.end()) {
        if (*a < *b)
          ++a;
        else if (*b < *a)
          ++b;
        else {
          if (in[*a]) ++count;
          ++a;
          ++b;
        }
      }
      sup.emplace(edge_key(u, v), count);
    }
  }
  return sup;
}

// ---------------------------------------------------------------------------
// (k,d)-truss verification: the induced subgraph must be connected, every edge
// inside it must sit in >= k-2 triangles, and every user must be within d hops
// of q measured inside the subgraph. A singleton never qualifies for k > 2.
// ---------------------------------------------------------------------------

inline std::vector<int32_t> bfs_hops_within(const Skeleton& s, const std::vector<UserId>& users,
                                            UserId src) {
  std::vector<char> in(s.user_count(), 0);
  for (UserId u : users) in[u] = 1;
  std::vector<int32_t> dist(s.user_count(), kUnreachable);
  std::deque<UserId> q;
  dist[src] = 0;
  q.push_back(src);
  while (!q.empty()) {
    UserId u = q.front();
    q.pop_front();
    for (UserId v : s.neighbors(u))
      if (in[v] && dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

inline bool verify_kd_truss(const Skeleton& s, const std::vector<UserId>& users, UserId q, int k,
                            int d) {
  if (users.empty()) return false;
  if (std::find(users.begin(), users.end(), q) == users.end()) return false;
  if (k > 2 && users.size() < 3) return false;
  auto hops = bfs_hops_within(s, users, q);
  for (UserId u : users)
    if (hops[u] == kUnreachable || hops[u] > d) return false;
  for (const auto& [key, sup] : edge_support(s, users))
    if (sup < k - 2) return false;
  return true;
}

// ---------------------------------------------------------------------------
// (omega,pi)-keyword-core verification against absolute thresholds. The
// candidate's POIs must all match a query keyword, every user's summed visit
// frequency into the candidate POI set must reach omega_abs, every POI's
// average frequency over its candidate visitors must reach pi_abs (a POI with
// no visitors fails rather than erroring), and the bipartite subgraph must be
// connected. Maximality is not checked here.
// ---------------------------------------------------------------------------

inline bool verify_keyword_core(const BipartiteNetwork& b, const PoiTable& pois,
                                const std::vector<UserId>& users, const std::vector<PoiId>& poi_set,
                                const std::vector<KeywordId>& query, double omega_abs,
                                double pi_abs) {
  if (users.empty() || poi_set.empty()) return false;
  std::vector<char> in_u(b.user_count(), 0), in_p(b.poi_count(), 0);
  for (UserId u : users) in_u[u] = 1;
  for (PoiId p : poi_set) in_p[p] = 1;

  for (PoiId p : poi_set)
    if (!pois.matches(p, query)) return false;

  for (UserId u : users) {
    double fsum = 0.0;
    for (const auto& [p, f] : b.checkins(u))
      if (in_p[p]) fsum += f;
    if (fsum < omega_abs) return false;
  }

  for (PoiId p : poi_set) {
    double total = 0.0;
    int visitors = 0;
    for (const auto& [u, f] : b.visitors(p))
      if (in_u[u] && f != 0.0) {
        total += f;
        ++visitors;
      }
    if (visitors == 0 || total / visitors < pi_abs) return false;
  }

  // Connectivity over the bipartite subgraph: one component covering every
  // selected user and POI.
  std::deque<std::pair<bool, uint32_t>> frontier;  // (is_user, id)
  std::vector<char> seen_u(b.user_count(), 0), seen_p(b.poi_count(), 0);
  frontier.push_back({true, users.front()});
  seen_u[users.front()] = 1;
  size_t reached = 0;
  while (!frontier.empty()) {
    auto [is_user, id] = frontier.front();
    frontier.pop_front();
    ++reached;
    if (is_user) {
      for (const auto& [p, f] : b.checkins(id))
        if (in_p[p] && !seen_p[p]) {
          seen_p[p] = 1;
          frontier.push_back({false, p});
        }
    } else {
      for (const auto& [u, f] : b.visitors(id))
        if (in_u[u] && !seen_u[u]) {
          seen_u[u] = 1;
          frontier.push_back({true, u});
        }
    }
  }
  return reached == users.size() + poi_set.size();
}

// ---------------------------------------------------------------------------
// Community answers and whole-community verification.
// ---------------------------------------------------------------------------

struct CommunityAnswer {
  std::vector<UserId> users;  // sorted
  std::vector<PoiId> pois;    // sorted

  bool empty() const { return users.empty(); }
  bool operator==(const CommunityAnswer& o) const { return users == o.users && pois == o.pois; }
};

// Dataset-level conversion of the (0,1] thresholds to absolute frequencies.
// theta is used directly (ISF is already in (0,1]); sigma is raw road length.
struct AbsoluteThresholds {
  double omega_abs = 0.0;
  double pi_abs = 0.0;
};

inline AbsoluteThresholds absolute_thresholds(const BipartiteNetwork& b, double omega, double pi) {
  double max_sum = 0.0, max_single = 0.0;
  for (UserId u = 0; u < b.user_count(); ++u) {
    max_sum = std::max(max_sum, b.sum_frequency(u));
    max_single = std::max(max_single, b.max_frequency(u));
  }
  return {omega * max_sum, pi * max_single};
}

struct VerifyReport {
  bool membership = false;     // q in V_s'
  bool truss = false;          // (k,d)-truss
  bool influence = false;      // ISF(q,u) >= theta for all users
  bool spatial = false;        // avg_dist(u,p) <= sigma for all pairs
  bool keyword_core = false;   // (omega,pi)-keyword-core
  bool maximal = true;         // single-element extension check (small instances)
  bool checked_maximality = false;

  bool valid() const { return membership && truss && influence && spatial && keyword_core; }
};

inline VerifyReport verify_community(const CommunityAnswer& answer, const Dataset& ds,
                                     const QueryParams& params, UserId q,
                                     const std::vector<KeywordId>& query_kws,
                                     const AbsoluteThresholds& abs) {
  VerifyReport rep;
  if (answer.empty()) return rep;
  rep.membership = std::binary_search(answer.users.begin(), answer.users.end(), q);
  rep.truss = verify_kd_truss(ds.skeleton, answer.users, q, params.k, params.d);

  auto scores = isf_from(ds.social, q);
  rep.influence = true;
  for (UserId u : answer.users) {
    double s = (u == q) ? 1.0 : scores[u];
    if (s < params.theta) {
      rep.influence = false;
      break;
    }
  }

  rep.spatial = true;
  for (PoiId p : answer.pois) {
    auto dist = dijkstra(ds.road, ds.pois.anchor(p));
    for (UserId u : answer.users) {
      if (ds.checkins.checkins(u).empty() ||
          avg_dist_with(ds.checkins, ds.pois, u, dist) > params.sigma) {
        rep.spatial = false;
        break;
      }
    }
    if (!rep.spatial) break;
  }

  rep.keyword_core = verify_keyword_core(ds.checkins, ds.pois, answer.users, answer.pois,
                                         query_kws, abs.omega_abs, abs.pi_abs);
  return rep;
}

// Single-element extension probe for the maximality bullet. Small instances
// only: each candidate extension re-runs the full bullet suite.
inline bool probe_maximality(const CommunityAnswer& answer, const Dataset& ds,
                             const QueryParams& params, UserId q,
                             const std::vector<KeywordId>& query_kws,
                             const AbsoluteThresholds& abs, size_t user_limit = 64) {
  if (ds.social.user_count() > user_limit) return true;
  auto passes = [&](const CommunityAnswer& a) {
    return verify_community(a, ds, params, q, query_kws, abs).valid();
  };
  for (UserId u = 0; u < ds.social.user_count(); ++u) {
    if (std::binary_search(answer.users.begin(), answer.users.end(), u)) continue;
    CommunityAnswer ext = answer;
    ext.users.insert(std::lower_bound(ext.users.begin(), ext.users.end(), u), u);
    if (passes(ext)) return false;
  }
  for (PoiId p = 0; p < ds.pois.poi_count(); ++p) {
    if (std::binary_search(answer.pois.begin(), answer.pois.end(), p)) continue;
    CommunityAnswer ext = answer;
    ext.pois.insert(std::lower_bound(ext.pois.begin(), ext.pois.end(), p), p);
    if (passes(ext)) return false;
  }
  return true;
}

}  // namespace gsc

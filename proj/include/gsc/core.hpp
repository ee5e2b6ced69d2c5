#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsc/common.hpp"

namespace gsc {

using UserId = uint32_t;
using VertexId = uint32_t;
using PoiId = uint32_t;
using KeywordId = uint32_t;

// ---------------------------------------------------------------------------
// Social network: directed influence graph. Weights are in (0,1], at most one
// edge per ordered pair, no self-loops. Immutable after load.
// ---------------------------------------------------------------------------

class SocialNetwork {
 public:
  UserId add_user(const std::string& name) {
    auto it = user_index_.find(name);
    if (it != user_index_.end()) return it->second;
    UserId id = static_cast<UserId>(names_.size());
    user_index_.emplace(name, id);
    names_.push_back(name);
    out_.emplace_back();
    in_.emplace_back();
    return id;
  }

  void add_edge(UserId u, UserId v, double w) {
    if (u == v) throw validation_error("self-loop on user '" + names_[u] + "'");
    if (w <= 0.0 || w > 1.0)
      throw validation_error("edge weight outside (0,1]: " + std::to_string(w));
    auto& row = out_[u];
    auto pos = std::lower_bound(row.begin(), row.end(), v,
                                [](const auto& e, UserId x) { return e.first < x; });
    if (pos != row.end() && pos->first == v)
      throw validation_error("duplicate directed edge " + names_[u] + " -> " + names_[v]);
    row.insert(pos, {v, w});
    auto& irow = in_[v];
    auto ipos = std::lower_bound(irow.begin(), irow.end(), u,
                                 [](const auto& e, UserId x) { return e.first < x; });
    in_[v].insert(ipos, {u, w});
    ++edge_count_;
  }

  size_t user_count() const { return names_.size(); }
  size_t edge_count() const { return edge_count_; }
  const std::string& name(UserId u) const { return names_[u]; }

  std::optional<UserId> find_user(const std::string& name) const {
    auto it = user_index_.find(name);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }

  UserId require_user(const std::string& name) const {
    auto u = find_user(name);
    if (!u) throw validation_error("unknown user id: '" + name + "'");
    return *u;
  }

  const std::vector<std::pair<UserId, double>>& out_edges(UserId u) const { return out_[u]; }
  const std::vector<std::pair<UserId, double>>& in_edges(UserId u) const { return in_[u]; }

  bool has_edge(UserId u, UserId v) const {
    const auto& row = out_[u];
    auto pos = std::lower_bound(row.begin(), row.end(), v,
                                [](const auto& e, UserId x) { return e.first < x; });
    return pos != row.end() && pos->first == v;
  }

  double edge_weight(UserId u, UserId v) const {
    const auto& row = out_[u];
    auto pos = std::lower_bound(row.begin(), row.end(), v,
                                [](const auto& e, UserId x) { return e.first < x; });
    return (pos != row.end() && pos->first == v) ? pos->second : 0.0;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, UserId> user_index_;
  std::vector<std::vector<std::pair<UserId, double>>> out_;
  std::vector<std::vector<std::pair<UserId, double>>> in_;
  size_t edge_count_ = 0;
};

// Undirected collapse of the social network. Triangle counts, edge support and
// hop distances are defined on this view; influence stays on the directed graph.
class Skeleton {
 public:
  Skeleton() = default;

  explicit Skeleton(const SocialNetwork& g) : adj_(g.user_count()) {
    for (UserId u = 0; u < g.user_count(); ++u)
      for (const auto& [v, w] : g.out_edges(u)) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
      }
    for (auto& row : adj_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  }

  size_t user_count() const { return adj_.size(); }
  const std::vector<UserId>& neighbors(UserId u) const { return adj_[u]; }

  bool adjacent(UserId u, UserId v) const {
    const auto& row = adj_[u];
    return std::binary_search(row.begin(), row.end(), v);
  }

  size_t edge_count() const {
    size_t m = 0;
    for (const auto& row : adj_) m += row.size();
    return m / 2;
  }

 private:
  std::vector<std::vector<UserId>> adj_;
};

inline Skeleton undirected_skeleton(const SocialNetwork& g) { return Skeleton(g); }

// ---------------------------------------------------------------------------
// Road network: undirected planar graph with 2D vertex coordinates. Edge
// length defaults to the Euclidean distance between endpoints. The loader
// enforces a single connected component.
// ---------------------------------------------------------------------------

class RoadNetwork {
 public:
  VertexId add_vertex(const std::string& name, double x, double y) {
    auto it = vertex_index_.find(name);
    if (it != vertex_index_.end())
      throw validation_error("duplicate road vertex id: '" + name + "'");
    VertexId id = static_cast<VertexId>(names_.size());
    vertex_index_.emplace(name, id);
    names_.push_back(name);
    xs_.push_back(x);
    ys_.push_back(y);
    adj_.emplace_back();
    return id;
  }

  void add_edge(VertexId a, VertexId b, std::optional<double> length = std::nullopt) {
    double len = length ? *length : euclid(a, b);
    if (len < 0.0) throw validation_error("negative road edge length");
    adj_[a].push_back({b, len});
    adj_[b].push_back({a, len});
    ++edge_count_;
  }

  double euclid(VertexId a, VertexId b) const {
    return std::hypot(xs_[a] - xs_[b], ys_[a] - ys_[b]);
  }

  size_t vertex_count() const { return names_.size(); }
  size_t edge_count() const { return edge_count_; }
  const std::string& name(VertexId v) const { return names_[v]; }
  double x(VertexId v) const { return xs_[v]; }
  double y(VertexId v) const { return ys_[v]; }
  const std::vector<std::pair<VertexId, double>>& edges(VertexId v) const { return adj_[v]; }

  std::optional<VertexId> find_vertex(const std::string& name) const {
    auto it = vertex_index_.find(name);
    if (it == vertex_index_.end()) return std::nullopt;
    return it->second;
  }

  VertexId require_vertex(const std::string& name) const {
    auto v = find_vertex(name);
    if (!v) throw validation_error("unknown road vertex: '" + name + "'");
    return *v;
  }

  bool connected() const {
    if (names_.empty()) return true;
    std::vector<char> seen(names_.size(), 0);
    std::vector<VertexId> stack{0};
    seen[0] = 1;
    size_t n = 1;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : adj_[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++n;
          stack.push_back(w);
        }
    }
    return n == names_.size();
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> vertex_index_;
  std::vector<double> xs_, ys_;
  std::vector<std::vector<std::pair<VertexId, double>>> adj_;
  size_t edge_count_ = 0;
};

// ---------------------------------------------------------------------------
// POI table. POIs are anchored to road vertices and carry a nonempty keyword
// set. Keyword tokens are interned; matching is case-sensitive exact.
// ---------------------------------------------------------------------------

class PoiTable {
 public:
  KeywordId intern_keyword(const std::string& kw) {
    auto it = kw_index_.find(kw);
    if (it != kw_index_.end()) return it->second;
    KeywordId id = static_cast<KeywordId>(keywords_.size());
    kw_index_.emplace(kw, id);
    keywords_.push_back(kw);
    return id;
  }

  std::optional<KeywordId> find_keyword(const std::string& kw) const {
    auto it = kw_index_.find(kw);
    if (it == kw_index_.end()) return std::nullopt;
    return it->second;
  }

  PoiId add_poi(const std::string& name, VertexId anchor, std::vector<KeywordId> kws) {
    if (poi_index_.count(name)) throw validation_error("duplicate poi id: '" + name + "'");
    if (kws.empty()) throw validation_error("poi '" + name + "' has empty keyword set");
    std::sort(kws.begin(), kws.end());
    kws.erase(std::unique(kws.begin(), kws.end()), kws.end());
    PoiId id = static_cast<PoiId>(names_.size());
    poi_index_.emplace(name, id);
    names_.push_back(name);
    anchors_.push_back(anchor);
    kw_sets_.push_back(std::move(kws));
    return id;
  }

  size_t poi_count() const { return names_.size(); }
  size_t keyword_count() const { return keywords_.size(); }
  const std::string& name(PoiId p) const { return names_[p]; }
  const std::string& keyword(KeywordId k) const { return keywords_[k]; }
  VertexId anchor(PoiId p) const { return anchors_[p]; }
  const std::vector<KeywordId>& keyword_set(PoiId p) const { return kw_sets_[p]; }

  std::optional<PoiId> find_poi(const std::string& name) const {
    auto it = poi_index_.find(name);
    if (it == poi_index_.end()) return std::nullopt;
    return it->second;
  }

  PoiId require_poi(const std::string& name) const {
    auto p = find_poi(name);
    if (!p) throw validation_error("unknown poi id: '" + name + "'");
    return *p;
  }

  // True iff p's keyword set intersects the (sorted) query keyword set.
  bool matches(PoiId p, const std::vector<KeywordId>& query) const {
    const auto& ks = kw_sets_[p];
    auto a = ks.begin();
    auto b = query.begin();
    while (a != ks.end() && b != query.end()) {
      if (*a < *b)
        ++a;
      else if (*b < *a)
        ++b;
      else
        return true;
    }
    return false;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, PoiId> poi_index_;
  std::vector<VertexId> anchors_;
  std::vector<std::vector<KeywordId>> kw_sets_;
  std::vector<std::string> keywords_;
  std::unordered_map<std::string, KeywordId> kw_index_;
};

// ---------------------------------------------------------------------------
// Bipartite check-in network: user -> POI edges with positive frequency.
// Zero-frequency edges are deleted, so u.L is exactly the set of POIs with a
// stored edge from u. Mutable only through set_frequency (temporal module).
// ---------------------------------------------------------------------------

class BipartiteNetwork {
 public:
  BipartiteNetwork() = default;
  BipartiteNetwork(size_t users, size_t pois) : by_user_(users), by_poi_(pois) {}

  void resize(size_t users, size_t pois) {
    by_user_.resize(users);
    by_poi_.resize(pois);
  }

  size_t user_count() const { return by_user_.size(); }
  size_t poi_count() const { return by_poi_.size(); }

  double frequency(UserId u, PoiId p) const {
    const auto& row = by_user_[u];
    auto pos = std::lower_bound(row.begin(), row.end(), p,
                                [](const auto& e, PoiId x) { return e.first < x; });
    return (pos != row.end() && pos->first == p) ? pos->second : 0.0;
  }

  // Sets f(u,p); f == 0 removes the edge on both sides.
  void set_frequency(UserId u, PoiId p, double f) {
    if (f < 0.0) throw validation_error("negative check-in frequency");
    upsert(by_user_[u], p, f);
    upsert(by_poi_[p], u, f);
  }

  void add_edge(UserId u, PoiId p, double f) {
    if (f <= 0.0) throw validation_error("nonpositive check-in frequency");
    if (frequency(u, p) != 0.0) throw validation_error("duplicate check-in edge");
    set_frequency(u, p, f);
  }

  // u.L: the POIs u has visited, ascending by poi id.
  const std::vector<std::pair<PoiId, double>>& checkins(UserId u) const { return by_user_[u]; }
  const std::vector<std::pair<UserId, double>>& visitors(PoiId p) const { return by_poi_[p]; }

  size_t edge_count() const {
    size_t m = 0;
    for (const auto& row : by_user_) m += row.size();
    return m;
  }

  double sum_frequency(UserId u) const {
    double s = 0.0;
    for (const auto& [p, f] : by_user_[u]) s += f;
    return s;
  }

  double max_frequency(UserId u) const {
    double m = 0.0;
    for (const auto& [p, f] : by_user_[u]) m = std::max(m, f);
    return m;
  }

  bool operator==(const BipartiteNetwork& other) const { return by_user_ == other.by_user_; }

 private:
  template <typename K>
  static void upsert(std::vector<std::pair<K, double>>& row, K key, double f) {
    auto pos = std::lower_bound(row.begin(), row.end(), key,
                                [](const auto& e, K x) { return e.first < x; });
    if (pos != row.end() && pos->first == key) {
      if (f == 0.0)
        row.erase(pos);
      else
        pos->second = f;
    } else if (f != 0.0) {
      row.insert(pos, {key, f});
    }
  }

  std::vector<std::vector<std::pair<PoiId, double>>> by_user_;
  std::vector<std::vector<std::pair<UserId, double>>> by_poi_;
};

// ---------------------------------------------------------------------------
// Query parameters.
// ---------------------------------------------------------------------------

struct QueryParams {
  std::string q;                       // query user id
  std::vector<std::string> keywords;   // query keyword set Q
  int k = 3;
  int d = 3;
  double omega = 0.4;
  double pi = 0.4;
  double theta = 0.4;
  double sigma = 5.0;

  void validate() const {
    if (k <= 2) throw validation_error("k must be > 2");
    if (d <= 0) throw validation_error("d must be positive");
    if (omega <= 0.0 || omega > 1.0) throw validation_error("omega must be in (0,1]");
    if (pi <= 0.0 || pi > 1.0) throw validation_error("pi must be in (0,1]");
    if (theta <= 0.0 || theta > 1.0) throw validation_error("theta must be in (0,1]");
    if (sigma < 0.0) throw validation_error("sigma must be nonnegative");
    if (keywords.empty()) throw validation_error("query keyword set must be nonempty");
  }
};

// ---------------------------------------------------------------------------
// Loaders. Load order is social -> road -> pois -> checkins; cross references
// are validated as each file is read.
// ---------------------------------------------------------------------------

inline SocialNetwork load_social(const std::string& path) {
  SocialNetwork g;
  // two passes: declare users first so ids are ordered by first appearance
  std::vector<std::tuple<std::string, std::string, double, size_t>> edges;
  for_each_line(path, [&](size_t lineno, const std::vector<std::string>& t) {
    if (t.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 'u v w'");
    double w = parse_real(t[2], path, lineno);
    g.add_user(t[0]);
    g.add_user(t[1]);
    edges.emplace_back(t[0], t[1], w, lineno);
  });
  for (const auto& [a, b, w, lineno] : edges) {
    try {
      g.add_edge(*g.find_user(a), *g.find_user(b), w);
    } catch (const validation_error& e) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

// Road files mix vertex lines ('r x y') and edge lines ('r1 r2 [length]').
// Vertices must precede the edges that use them: a 3-token line whose first
// two tokens are both already-declared vertices is an edge, otherwise it is a
// vertex declaration.
inline RoadNetwork load_road(const std::string& path) {
  RoadNetwork r;
  for_each_line(path, [&](size_t lineno, const std::vector<std::string>& t) {
    if (t.size() == 2) {
      r.add_edge(r.require_vertex(t[0]), r.require_vertex(t[1]));
      return;
    }
    if (t.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected vertex or edge line");
    auto a = r.find_vertex(t[0]);
    auto b = r.find_vertex(t[1]);
    if (a && b) {
      r.add_edge(*a, *b, parse_real(t[2], path, lineno));
    } else {
      double x = parse_real(t[1], path, lineno);
      double y = parse_real(t[2], path, lineno);
      r.add_vertex(t[0], x, y);
    }
  });
  if (!r.connected()) throw validation_error(path + ": road network is not connected");
  return r;
}

inline PoiTable load_pois(const std::string& path, const RoadNetwork& road) {
  PoiTable pois;
  for_each_line(path, [&](size_t lineno, const std::vector<std::string>& t) {
    if (t.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 'p r kw1,kw2,...'");
    auto anchor = road.find_vertex(t[1]);
    if (!anchor)
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": poi references missing road vertex '" + t[1] + "'");
    std::vector<KeywordId> kws;
    std::string kw;
    std::istringstream ss(t[2]);
    while (std::getline(ss, kw, ','))
      if (!kw.empty()) kws.push_back(pois.intern_keyword(kw));
    if (kws.empty())
      throw validation_error(path + ":" + std::to_string(lineno) + ": empty keyword set");
    pois.add_poi(t[0], *anchor, std::move(kws));
  });
  return pois;
}

inline BipartiteNetwork load_checkins(const std::string& path, const SocialNetwork& social,
                                      const PoiTable& pois) {
  BipartiteNetwork b(social.user_count(), pois.poi_count());
  for_each_line(path, [&](size_t lineno, const std::vector<std::string>& t) {
    if (t.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 'u p f'");
    auto u = social.find_user(t[0]);
    if (!u)
      throw validation_error(path + ":" + std::to_string(lineno) + ": unknown user '" + t[0] + "'");
    auto p = pois.find_poi(t[1]);
    if (!p)
      throw validation_error(path + ":" + std::to_string(lineno) + ": unknown poi '" + t[1] + "'");
    double f = parse_real(t[2], path, lineno);
    if (f <= 0.0)
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": nonpositive check-in frequency");
    try {
      b.add_edge(*u, *p, f);
    } catch (const validation_error& e) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return b;
}

// ---------------------------------------------------------------------------
// Serializers (round-trip with the loaders above).
// ---------------------------------------------------------------------------

inline void save_social(const SocialNetwork& g, const std::string& path) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (UserId u = 0; u < g.user_count(); ++u)
    for (const auto& [v, w] : g.out_edges(u)) out << g.name(u) << ' ' << g.name(v) << ' ' << w << '\n';
}

inline void save_road(const RoadNetwork& r, const std::string& path) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (VertexId v = 0; v < r.vertex_count(); ++v)
    out << r.name(v) << ' ' << r.x(v) << ' ' << r.y(v) << '\n';
  for (VertexId v = 0; v < r.vertex_count(); ++v)
    for (const auto& [w, len] : r.edges(v))
      if (v < w) out << r.name(v) << ' ' << r.name(w) << ' ' << len << '\n';
}

inline void save_pois(const PoiTable& pois, const RoadNetwork& road, const std::string& path) {
  std::ofstream out(path);
  for (PoiId p = 0; p < pois.poi_count(); ++p) {
    out << pois.name(p) << ' ' << road.name(pois.anchor(p)) << ' ';
    const auto& ks = pois.keyword_set(p);
    for (size_t i = 0; i < ks.size(); ++i) out << (i ? "," : "") << pois.keyword(ks[i]);
    out << '\n';
  }
}

inline void save_checkins(const BipartiteNetwork& b, const SocialNetwork& social,
                          const PoiTable& pois, const std::string& path) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (UserId u = 0; u < b.user_count(); ++u)
    for (const auto& [p, f] : b.checkins(u))
      out << social.name(u) << ' ' << pois.name(p) << ' ' << f << '\n';
}

// ---------------------------------------------------------------------------
// Dataset bundle + fingerprint used for snapshot epoch checks.
// ---------------------------------------------------------------------------

struct Dataset {
  SocialNetwork social;
  Skeleton skeleton;
  RoadNetwork road;
  PoiTable pois;
  BipartiteNetwork checkins;

  // Content-based and id-order independent (ids permute when a serialized
  // dataset is reloaded), so records combine commutatively.
  uint64_t fingerprint() const {
    auto rec = [](std::initializer_list<std::string> parts) {
      uint64_t h = 0xcbf29ce484222325ull;
      for (const auto& p : parts) {
        h = fnv1a_str(p, h);
        h = fnv1a("|", 1, h);
      }
      return h;
    };
    auto num = [](double v) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      return std::to_string(bits);
    };
    uint64_t total = 0;
    for (UserId u = 0; u < social.user_count(); ++u) {
      total += rec({"user", social.name(u)});
      for (const auto& [v, w] : social.out_edges(u))
        total += rec({"sedge", social.name(u), social.name(v), num(w)});
    }
    for (VertexId v = 0; v < road.vertex_count(); ++v) {
      total += rec({"rv", road.name(v), num(road.x(v)), num(road.y(v))});
      for (const auto& [w, len] : road.edges(v))
        if (v <= w) total += rec({"redge", road.name(v), road.name(w), num(len)});
    }
    for (PoiId p = 0; p < pois.poi_count(); ++p) {
      uint64_t ph = rec({"poi", pois.name(p), road.name(pois.anchor(p))});
      for (KeywordId k : pois.keyword_set(p)) ph += fnv1a_str(pois.keyword(k));
      total += ph;
    }
    for (UserId u = 0; u < checkins.user_count(); ++u)
      for (const auto& [p, f] : checkins.checkins(u))
        total += rec({"checkin", social.name(u), pois.name(p), num(f)});
    return total;
  }
};

inline Dataset load_dataset(const std::string& social_path, const std::string& road_path,
                            const std::string& pois_path, const std::string& checkins_path) {
  Dataset ds;
  ds.social = load_social(social_path);
  ds.skeleton = undirected_skeleton(ds.social);
  ds.road = load_road(road_path);
  ds.pois = load_pois(pois_path, ds.road);
  ds.checkins = load_checkins(checkins_path, ds.social, ds.pois);
  return ds;
}

inline Dataset load_dataset_dir(const std::string& dir) {
  return load_dataset(dir + "/social.txt", dir + "/road.txt", dir + "/pois.txt",
                      dir + "/checkins.txt");
}

// Maps query keyword strings to a sorted id vector; unknown keywords match nothing.
inline std::vector<KeywordId> intern_query_keywords(const PoiTable& pois,
                                                    const std::vector<std::string>& kws) {
  std::vector<KeywordId> out;
  for (const auto& kw : kws)
    if (auto id = pois.find_keyword(kw)) out.push_back(*id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace gsc

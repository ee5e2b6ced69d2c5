#pragma once

#include <boost/polygon/voronoi.hpp>

#include "gsc/temporal.hpp"

namespace gsc {

// ---------------------------------------------------------------------------
// Seeded synthetic generation of the full network family. Everything is
// driven by one Rng in a fixed stage order, so a fixed seed reproduces the
// files byte for byte.
// ---------------------------------------------------------------------------

struct GenConfig {
  uint64_t seed = 1;
  size_t users = 1000;
  int deg_min = 8;
  int deg_max = 40;
  std::string weight_dist = "gaussian";  // uniform | gaussian | skew
  double gauss_mean = 0.5;
  double gauss_stddev = 0.15;
  double zipf_s = 0.8;
  size_t road_vertices = 2000;
  size_t poi_count = 500;
  size_t dictionary = 50;
  int poi_kw_min = 1;
  int poi_kw_max = 8;
  int checkins_min = 1;
  int checkins_max = 10;
  int freq_min = 1;
  int freq_max = 10;
  // Check-in locality scale: POIs are drawn around a per-user home point with
  // weight exp(-distance / locality). Keeps the sigma thresholds meaningful
  // on the [0,100]^2 canvas; <= 0 selects uniformly.
  double locality = 5.0;
  int64_t horizon = 0;  // > 0 also emits a temporal log over [1, horizon]
  int64_t tau = 30;

  void validate() const {
    if (users == 0) throw validation_error("users must be positive");
    if (deg_min < 1 || deg_max < deg_min) throw validation_error("bad degree range");
    if (weight_dist != "uniform" && weight_dist != "gaussian" && weight_dist != "skew")
      throw validation_error("weight_dist must be uniform|gaussian|skew");
    if (road_vertices < 2) throw validation_error("road_vertices must be >= 2");
    if (poi_count == 0) throw validation_error("poi_count must be positive");
    if (dictionary == 0) throw validation_error("dictionary must be positive");
    if (poi_kw_min < 1 || poi_kw_max < poi_kw_min) throw validation_error("bad keyword range");
    if (checkins_min < 1 || checkins_max < checkins_min)
      throw validation_error("bad check-in range");
    if (freq_min < 1 || freq_max < freq_min) throw validation_error("bad frequency range");
    if (horizon < 0 || tau < 1) throw validation_error("bad temporal settings");
  }
};

// ---------------------------------------------------------------------------
// Gabriel graph: (a,b) is an edge iff no third point lies strictly inside the
// disk with diameter ab. Small inputs take the literal O(n^3) rule; larger
// ones take Delaunay candidates (Gabriel edges are Delaunay edges) and verify
// each candidate with an exact grid-accelerated disk test.
// ---------------------------------------------------------------------------

namespace gen_detail {

struct P2 {
  double x, y;
};

inline bool disk_empty(const std::vector<P2>& pts, size_t a, size_t b,
                       const std::vector<std::vector<uint32_t>>& grid, size_t gdim, double cell,
                       double minx, double miny) {
  double mx = (pts[a].x + pts[b].x) / 2, my = (pts[a].y + pts[b].y) / 2;
  double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
  double r2 = (dx * dx + dy * dy) / 4.0;
  double r = std::sqrt(r2);
  auto cell_of = [&](double v, double base) {
    return std::clamp(static_cast<long>((v - base) / cell), 0L, static_cast<long>(gdim) - 1);
  };
  long cx0 = cell_of(mx - r, minx), cx1 = cell_of(mx + r, minx);
  long cy0 = cell_of(my - r, miny), cy1 = cell_of(my + r, miny);
  for (long cy = cy0; cy <= cy1; ++cy)
    for (long cx = cx0; cx <= cx1; ++cx)
      for (uint32_t idx : grid[cy * gdim + cx]) {
        if (idx == a || idx == b) continue;
        double ex = pts[idx].x - mx, ey = pts[idx].y - my;
        if (ex * ex + ey * ey < r2) return false;
      }
  return true;
}

inline std::vector<std::pair<uint32_t, uint32_t>> gabriel_brute(const std::vector<P2>& pts) {
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  size_t n = pts.size();
  for (size_t a = 0; a < n; ++a)
    for (size_t b = a + 1; b < n; ++b) {
      double mx = (pts[a].x + pts[b].x) / 2, my = (pts[a].y + pts[b].y) / 2;
      double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
      double r2 = (dx * dx + dy * dy) / 4.0;
      bool empty = true;
      for (size_t c = 0; c < n && empty; ++c) {
        if (c == a || c == b) continue;
        double ex = pts[c].x - mx, ey = pts[c].y - my;
        if (ex * ex + ey * ey < r2) empty = false;
      }
      if (empty) edges.push_back({static_cast<uint32_t>(a), static_cast<uint32_t>(b)});
    }
  return edges;
}

}  // namespace gen_detail

inline std::vector<std::pair<uint32_t, uint32_t>> gabriel_edges(
    const std::vector<std::pair<double, double>>& points) {
  std::vector<gen_detail::P2> pts;
  pts.reserve(points.size());
  for (const auto& [x, y] : points) pts.push_back({x, y});
  size_t n = pts.size();
  if (n < 2) return {};
  if (n <= 256) return gen_detail::gabriel_brute(pts);

  // Delaunay candidates via Boost.Polygon voronoi (integer-scaled input)
  const double scale = 1e4;
  std::vector<boost::polygon::point_data<int>> ipts;
  ipts.reserve(n);
  for (const auto& p : pts)
    ipts.emplace_back(static_cast<int>(std::llround(p.x * scale)),
                      static_cast<int>(std::llround(p.y * scale)));
  boost::polygon::voronoi_diagram<double> vd;
  boost::polygon::construct_voronoi(ipts.begin(), ipts.end(), &vd);
  std::vector<std::pair<uint32_t, uint32_t>> cands;
  for (const auto& edge : vd.edges()) {
    if (!edge.is_primary()) continue;
    uint32_t i = static_cast<uint32_t>(edge.cell()->source_index());
    uint32_t j = static_cast<uint32_t>(edge.twin()->cell()->source_index());
    if (i < j) cands.push_back({i, j});
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  double minx = pts[0].x, maxx = pts[0].x, miny = pts[0].y, maxy = pts[0].y;
  for (const auto& p : pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  size_t gdim = std::max<size_t>(1, static_cast<size_t>(std::sqrt(static_cast<double>(n))));
  double cell = std::max({(maxx - minx) / gdim, (maxy - miny) / gdim, 1e-9});
  std::vector<std::vector<uint32_t>> grid(gdim * gdim);
  for (uint32_t i = 0; i < n; ++i) {
    size_t cx = std::clamp<size_t>(static_cast<size_t>((pts[i].x - minx) / cell), 0, gdim - 1);
    size_t cy = std::clamp<size_t>(static_cast<size_t>((pts[i].y - miny) / cell), 0, gdim - 1);
    grid[cy * gdim + cx].push_back(i);
  }

  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (const auto& [a, b] : cands)
    if (gen_detail::disk_empty(pts, a, b, grid, gdim, cell, minx, miny)) edges.push_back({a, b});
  return edges;
}

// ---------------------------------------------------------------------------
// Network generators.
// ---------------------------------------------------------------------------

inline SocialNetwork gen_social(const GenConfig& cfg, Rng& rng) {
  SocialNetwork g;
  size_t n = cfg.users;
  for (size_t i = 0; i < n; ++i) g.add_user("u" + std::to_string(i));

  auto draw_weight = [&]() {
    if (cfg.weight_dist == "uniform") return rng.real_pos();
    return std::clamp(rng.gaussian(cfg.gauss_mean, cfg.gauss_stddev), 1e-3, 1.0);
  };

  // degree targets; skewed datasets draw them zipf-weighted over the range
  int hi_cap = static_cast<int>(std::min<size_t>(cfg.deg_max, n - 1));
  int lo_cap = std::min(cfg.deg_min, hi_cap);
  std::vector<int> target(n);
  std::vector<double> degw;
  if (cfg.weight_dist == "skew" && hi_cap >= lo_cap)
    degw = zipf_weights(static_cast<size_t>(hi_cap - lo_cap + 1), cfg.zipf_s);
  for (size_t i = 0; i < n; ++i) {
    if (!degw.empty())
      target[i] = lo_cap + static_cast<int>(rng.weighted(degw));
    else
      target[i] = hi_cap >= lo_cap ? static_cast<int>(rng.range(lo_cap, hi_cap)) : 0;
  }

  std::vector<std::set<UserId>> out(n);
  std::vector<std::tuple<UserId, UserId, double>> edges;
  // weak-connectivity spine: each user after the first links to an earlier one
  for (size_t i = 1; i < n; ++i) {
    UserId j = static_cast<UserId>(rng.below(i));
    out[i].insert(j);
    edges.emplace_back(static_cast<UserId>(i), j, draw_weight());
  }
  for (size_t i = 0; i < n && n > 1; ++i) {
    int attempts = 0;
    while (static_cast<int>(out[i].size()) < target[i] && attempts < 20 * target[i] + 40) {
      ++attempts;
      UserId v = static_cast<UserId>(rng.below(n - 1));
      if (v >= i) ++v;
      if (out[i].count(v)) continue;
      out[i].insert(v);
      edges.emplace_back(static_cast<UserId>(i), v, draw_weight());
    }
  }
  for (const auto& [u, v, w] : edges) g.add_edge(u, v, w);
  return g;
}

inline RoadNetwork gen_road(const GenConfig& cfg, Rng& rng) {
  size_t n = cfg.road_vertices;
  std::vector<std::pair<double, double>> pts;
  std::set<std::pair<long, long>> used;  // dedupe on the integer-scaled grid
  while (pts.size() < n) {
    double x = rng.uniform(0.0, 100.0);
    double y = rng.uniform(0.0, 100.0);
    auto key = std::make_pair(std::lround(x * 1e4), std::lround(y * 1e4));
    if (!used.insert(key).second) continue;
    pts.push_back({x, y});
  }
  RoadNetwork r;
  for (size_t i = 0; i < n; ++i) r.add_vertex("r" + std::to_string(i), pts[i].first, pts[i].second);
  for (const auto& [a, b] : gabriel_edges(pts)) r.add_edge(a, b);
  if (!r.connected()) throw validation_error("generated road network is not connected");
  return r;
}

inline PoiTable gen_pois(const GenConfig& cfg, Rng& rng, const RoadNetwork& road) {
  PoiTable pois;
  std::vector<KeywordId> dict;
  for (size_t i = 0; i < cfg.dictionary; ++i)
    dict.push_back(pois.intern_keyword("kw" + std::to_string(i)));
  std::vector<double> kww;
  if (cfg.weight_dist == "skew") kww = zipf_weights(cfg.dictionary, cfg.zipf_s);

  for (size_t i = 0; i < cfg.poi_count; ++i) {
    VertexId anchor = static_cast<VertexId>(rng.below(road.vertex_count()));
    int want = static_cast<int>(
        rng.range(cfg.poi_kw_min, std::min<int>(cfg.poi_kw_max, cfg.dictionary)));
    std::set<KeywordId> kws;
    int attempts = 0;
    while (static_cast<int>(kws.size()) < want && attempts < 50 * want + 100) {
      ++attempts;
      size_t k = kww.empty() ? rng.below(cfg.dictionary) : rng.weighted(kww);
      kws.insert(dict[k]);
    }
    pois.add_poi("p" + std::to_string(i), anchor,
                 std::vector<KeywordId>(kws.begin(), kws.end()));
  }
  return pois;
}

inline BipartiteNetwork gen_bipartite(const GenConfig& cfg, Rng& rng, const SocialNetwork& social,
                                      const RoadNetwork& road, const PoiTable& pois) {
  BipartiteNetwork b(social.user_count(), pois.poi_count());
  size_t np = pois.poi_count();
  for (UserId u = 0; u < social.user_count(); ++u) {
    double hx = rng.uniform(0.0, 100.0), hy = rng.uniform(0.0, 100.0);
    int want = static_cast<int>(
        rng.range(cfg.checkins_min, std::min<int>(cfg.checkins_max, np)));
    std::set<PoiId> chosen;
    if (cfg.locality > 0.0) {
      std::vector<double> w(np);
      for (PoiId p = 0; p < np; ++p) {
        VertexId a = pois.anchor(p);
        double d = std::hypot(road.x(a) - hx, road.y(a) - hy);
        w[p] = std::exp(-d / cfg.locality) + 1e-12;
      }
      int attempts = 0;
      while (static_cast<int>(chosen.size()) < want && attempts < 60 * want + 200) {
        ++attempts;
        chosen.insert(static_cast<PoiId>(rng.weighted(w)));
      }
    }
    while (static_cast<int>(chosen.size()) < want)
      chosen.insert(static_cast<PoiId>(rng.below(np)));
    for (PoiId p : chosen)
      b.add_edge(u, p, static_cast<double>(rng.range(cfg.freq_min, cfg.freq_max)));
  }
  return b;
}

// Expands each static frequency into that many timestamped visits uniform
// over [1, horizon]; window_frequency at t = horizon with tau = horizon then
// reproduces the static view.
inline TemporalVisitLog gen_temporal(const GenConfig& cfg, Rng& rng, const BipartiteNetwork& b) {
  TemporalVisitLog log;
  log.resize(b.user_count());
  int64_t horizon = std::max<int64_t>(1, cfg.horizon);
  for (UserId u = 0; u < b.user_count(); ++u)
    for (const auto& [p, f] : b.checkins(u))
      for (int64_t i = 0; i < static_cast<int64_t>(f); ++i)
        log.add(u, p, rng.range(1, horizon));
  return log;
}

struct Generated {
  Dataset ds;
  TemporalVisitLog log;  // empty unless cfg.horizon > 0
};

inline Generated generate(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Generated out;
  out.ds.social = gen_social(cfg, rng);
  out.ds.skeleton = undirected_skeleton(out.ds.social);
  out.ds.road = gen_road(cfg, rng);
  out.ds.pois = gen_pois(cfg, rng, out.ds.road);
  out.ds.checkins = gen_bipartite(cfg, rng, out.ds.social, out.ds.road, out.ds.pois);
  if (cfg.horizon > 0) out.log = gen_temporal(cfg, rng, out.ds.checkins);
  return out;
}

}  // namespace gsc

#include <catch2/catch_amalgamated.hpp>

#include "gsc/bounds.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace gsc;
using testutil::random_dataset;
using testutil::random_social;
using testutil::social_from_edges;

namespace {

OfflineBounds full_bounds(const Dataset& ds, uint64_t seed = 5, size_t pivots = 4) {
  PivotConfig cfg;
  cfg.social_pivots = pivots;
  cfg.road_pivots = pivots;
  cfg.iterations = 30;
  cfg.sample_pairs = 120;
  cfg.seed = seed;
  return build_offline_bounds(ds, cfg);
}

}  // namespace

TEST_CASE("compute_user_bounds fills the frequency bounds exactly") {
  Dataset ds;
  ds.social = social_from_edges(3, {{0, 1, 0.9}, {1, 0, 0.4}});
  ds.skeleton = undirected_skeleton(ds.social);
  ds.road.add_vertex("r0", 0, 0);
  ds.road.add_vertex("r1", 1, 1);
  ds.road.add_edge(0, 1);
  auto food = ds.pois.intern_keyword("food");
  auto gas = ds.pois.intern_keyword("gas");
  ds.pois.add_poi("p1", 0, {food});
  ds.pois.add_poi("p2", 1, {food, gas});
  ds.checkins.resize(3, 2);
  ds.checkins.add_edge(0, 0, 3.0);
  ds.checkins.add_edge(0, 1, 4.0);

  OfflineBounds b;
  compute_user_bounds(ds, b);

  // u0 visits {p1: 3, p2: 4}
  CHECK(b.users[0].ub_f_sum == 7.0);
  CHECK(b.users[0].ub_f_avg == 4.0);
  const KwAgg* food_agg = kw_find(b.users[0].kw, food);
  REQUIRE(food_agg != nullptr);
  CHECK(food_agg->f_sum == 7.0);  // both pois carry 'food'
  CHECK(food_agg->f_max == 4.0);
  const KwAgg* gas_agg = kw_find(b.users[0].kw, gas);
  REQUIRE(gas_agg != nullptr);
  CHECK(gas_agg->f_sum == 4.0);

  // influence bounds
  CHECK(b.users[0].ub_w_out == 0.9);
  CHECK(b.users[0].ub_w_in == 0.4);

  // isolated user: everything zero
  CHECK(b.users[2].ub_f_sum == 0.0);
  CHECK(b.users[2].ub_f_avg == 0.0);
  CHECK(b.users[2].ub_w_in == 0.0);
  CHECK(b.users[2].ub_w_out == 0.0);
  CHECK(b.users[2].ub_sup == 0);

  // dataset scalars
  CHECK(b.max_f_sum == 7.0);
  CHECK(b.max_f_single == 4.0);
}

TEST_CASE("ub_sup dominates the support of every incident edge") {
  Rng rng(201);
  for (int trial = 0; trial < 30; ++trial) {
    auto ds = random_dataset(rng, 10, 5, 8, 0.4);
    OfflineBounds b;
    compute_user_bounds(ds, b);
    auto sup = edge_support(ds.skeleton, testutil::all_users(ds));
    for (UserId u = 0; u < 10; ++u)
      for (UserId v : ds.skeleton.neighbors(u))
        REQUIRE(b.users[u].ub_sup >= sup.at(edge_key(u, v)));
  }
}

TEST_CASE("ub_isf branch structure") {
  Dataset ds;
  ds.social = social_from_edges(3, {{0, 1, 0.9}, {2, 1, 0.7}});
  ds.skeleton = undirected_skeleton(ds.social);
  OfflineBounds b;
  b.users.resize(3);
  b.users[0].ub_w_out = 0.9;
  b.users[1].ub_w_in = 0.7;
  SECTION("direct edge takes the max") { CHECK(ub_isf(b, ds.social, 0, 1) == 0.9); }
  SECTION("no edge takes the product") {
    b.users[2].ub_w_out = 0.9;
    CHECK(ub_isf(b, ds.social, 2, 0) == Catch::Approx(0.9 * 0.0));
    b.users[0].ub_w_in = 0.7;
    CHECK(ub_isf(b, ds.social, 2, 0) == Catch::Approx(0.63));
  }
}

TEST_CASE("ub_isf dominates exact isf on random graphs") {
  Rng rng(202);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 3 + static_cast<int>(rng.below(8));
    Dataset ds;
    ds.social = random_social(rng, n, 0.3);
    ds.skeleton = undirected_skeleton(ds.social);
    OfflineBounds b;
    b.users.resize(n);
    for (UserId u = 0; u < static_cast<UserId>(n); ++u) {
      for (const auto& [v, w] : ds.social.out_edges(u))
        b.users[u].ub_w_out = std::max(b.users[u].ub_w_out, w);
      for (const auto& [v, w] : ds.social.in_edges(u))
        b.users[u].ub_w_in = std::max(b.users[u].ub_w_in, w);
    }
    for (UserId u = 0; u < static_cast<UserId>(n); ++u) {
      auto exact = isf_from(ds.social, u);
      for (UserId v = 0; v < static_cast<UserId>(n); ++v)
        if (u != v) REQUIRE(ub_isf(b, ds.social, u, v) >= exact[v] - 1e-12);
    }
  }
}

TEST_CASE("social pivot selection") {
  SECTION("iters = 0 returns the seeded initial set unchanged") {
    Rng rng(203);
    auto ds = random_dataset(rng, 12, 4, 8);
    auto p0 = select_social_pivots(ds.skeleton, 3, 0, 100, 77);
    auto p1 = select_social_pivots(ds.skeleton, 3, 0, 100, 77);
    CHECK(p0 == p1);
    CHECK(p0.size() == 3);
  }
  SECTION("saturated set covers all users") {
    Rng rng(204);
    auto ds = random_dataset(rng, 6, 4, 8);
    auto p = select_social_pivots(ds.skeleton, 6, 50, 100, 3);
    std::sort(p.begin(), p.end());
    CHECK(p == std::vector<UserId>{0, 1, 2, 3, 4, 5});
  }
  SECTION("path graph with one pivot lands on an endpoint") {
    // a-b-c-d-e: exhaustive evaluation shows an endpoint maximizes the summed
    // |hop difference| objective for every pair sample
    auto g = social_from_edges(5, {{0, 1, .5}, {1, 2, .5}, {2, 3, .5}, {3, 4, .5}});
    Skeleton s(g);
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      auto p = select_social_pivots(s, 1, 300, 200, seed);
      REQUIRE(p.size() == 1);
      CHECK((p[0] == 0 || p[0] == 4));
    }
  }
  SECTION("refinement never worsens its own objective") {
    Rng rng(205);
    for (int trial = 0; trial < 10; ++trial) {
      auto ds = random_dataset(rng, 15, 4, 8);
      PivotSelectionStats stats;
      select_social_pivots(ds.skeleton, 3, 60, 80, 1000 + trial, true, &stats);
      REQUIRE(stats.final_objective >= stats.initial_objective);
    }
  }
}

TEST_CASE("road pivot selection") {
  Rng rng(206);
  auto ds = random_dataset(rng, 8, 6, 12);
  SECTION("iters = 0 identity") {
    auto p0 = select_road_pivots(ds.road, ds.checkins, ds.pois, 3, 0, 50, 9);
    auto p1 = select_road_pivots(ds.road, ds.checkins, ds.pois, 3, 0, 50, 9);
    CHECK(p0 == p1);
  }
  SECTION("saturated set") {
    auto p = select_road_pivots(ds.road, ds.checkins, ds.pois, 12, 20, 50, 9);
    CHECK(p.size() == 12);
  }
  SECTION("objective never worsens") {
    for (int trial = 0; trial < 8; ++trial) {
      PivotSelectionStats stats;
      select_road_pivots(ds.road, ds.checkins, ds.pois, 3, 40, 60, 2000 + trial, true, &stats);
      REQUIRE(stats.final_objective >= stats.initial_objective);
    }
  }
}

TEST_CASE("lb_dist_s") {
  SECTION("identical users give zero") {
    Rng rng(207);
    auto ds = random_dataset(rng, 10, 4, 8);
    auto b = full_bounds(ds);
    for (UserId u = 0; u < 10; ++u) CHECK(lb_dist_s(b, u, u) == 0);
  }
  SECTION("single-pivot arithmetic") {
    // path 0-1-2-3-4; pivot at 0: dist(1)=1, dist(4)=4 -> lb >= 3
    auto g = social_from_edges(5, {{0, 1, .5}, {1, 2, .5}, {2, 3, .5}, {3, 4, .5}});
    Dataset ds;
    ds.social = std::move(g);
    ds.skeleton = undirected_skeleton(ds.social);
    OfflineBounds b;
    b.users.resize(5);
    auto hops = bfs_hops(ds.skeleton, 0);
    for (UserId u = 0; u < 5; ++u) b.users[u].pivot_hops = {hops[u]};
    CHECK(lb_dist_s(b, 1, 4) == 3);
  }
  SECTION("lower-bounds the exact hop distance; unreachable pivots skipped") {
    Rng rng(208);
    for (int trial = 0; trial < 25; ++trial) {
      auto ds = random_dataset(rng, 12, 4, 8, 0.18);
      auto b = full_bounds(ds, 300 + trial);
      for (UserId u = 0; u < 12; ++u)
        for (UserId v = 0; v < 12; ++v) {
          int32_t exact = hop_distance(ds.skeleton, u, v);
          int32_t lb = lb_dist_s(b, u, v);
          if (exact != kUnreachable) REQUIRE(lb <= exact);
        }
    }
  }
}

TEST_CASE("lb_avg_dist_r") {
  SECTION("user whose only check-in is the target poi") {
    Rng rng(209);
    auto ds = random_dataset(rng, 6, 5, 8);
    auto b = full_bounds(ds);
    for (UserId u = 0; u < 6; ++u) {
      const auto& L = ds.checkins.checkins(u);
      if (L.size() == 1) CHECK(lb_avg_dist_r(b, ds.checkins, u, L[0].first) == 0.0);
    }
  }
  SECTION("one check-in, one pivot: |5 - 2| = 3") {
    Dataset ds;
    ds.social = social_from_edges(1, {});
    ds.skeleton = undirected_skeleton(ds.social);
    ds.road.add_vertex("r0", 0, 0);
    ds.road.add_vertex("r1", 5, 0);
    ds.road.add_vertex("r2", 2, 0);
    ds.road.add_edge(0, 1, 5.0);
    ds.road.add_edge(0, 2, 2.0);
    auto kw = ds.pois.intern_keyword("x");
    ds.pois.add_poi("pa", 1, {kw});  // dist to pivot r0: 5
    ds.pois.add_poi("pb", 2, {kw});  // dist to pivot r0: 2
    ds.checkins.resize(1, 2);
    ds.checkins.add_edge(0, 0, 1.0);
    OfflineBounds b;
    b.users.resize(1);
    b.pivots.road = {0};
    compute_pivot_tables(ds, b);
    CHECK(lb_avg_dist_r(b, ds.checkins, 0, 1) == Catch::Approx(3.0));
  }
  SECTION("no check-ins is an error") {
    Rng rng(210);
    auto ds = random_dataset(rng, 4, 4, 8);
    auto b = full_bounds(ds);
    BipartiteNetwork empty(4, 4);
    CHECK_THROWS_AS(lb_avg_dist_r(b, empty, 0, 0), validation_error);
  }
  SECTION("lower-bounds the exact average distance") {
    Rng rng(211);
    for (int trial = 0; trial < 20; ++trial) {
      auto ds = random_dataset(rng, 8, 6, 10);
      auto b = full_bounds(ds, 400 + trial);
      for (UserId u = 0; u < 8; ++u) {
        if (ds.checkins.checkins(u).empty()) continue;
        for (PoiId p = 0; p < 6; ++p) {
          double exact = avg_dist(ds.checkins, ds.road, ds.pois, u, p);
          REQUIRE(lb_avg_dist_r(b, ds.checkins, u, p) <= exact + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("prune_user") {
  Rng rng(212);
  auto ds = random_dataset(rng, 12, 6, 10, 0.4);
  auto bounds = full_bounds(ds);

  PruneContext ctx;
  ctx.ds = &ds;
  ctx.bounds = &bounds;
  ctx.q = 0;
  ctx.k = 3;
  ctx.d = 2;
  ctx.theta = 0.3;
  ctx.sigma = 50.0;
  ctx.omega_abs = 1.0;
  ctx.pi_abs = 1.0;

  SECTION("keyword-less user is pruned with reason Keyword") {
    // query keywords that no poi carries
    ctx.query_kws = {static_cast<KeywordId>(999)};
    auto out = prune_user(5, ctx);
    CHECK(out.reason == PruneReason::Keyword);
  }
  SECTION("query user with satisfied bounds is kept") {
    // pick q's own keywords and generous thresholds
    UserId q = 0;
    while (ds.checkins.checkins(q).empty()) ++q;
    ctx.q = q;
    auto first_poi = ds.checkins.checkins(q)[0].first;
    ctx.query_kws = ds.pois.keyword_set(first_poi);
    ctx.poi_q = compute_poi_q(ds, q, ctx.query_kws);
    ctx.omega_abs = 0.5;
    ctx.pi_abs = 0.5;
    ctx.theta = 0.9;  // irrelevant for q itself
    ctx.k = 3;
    if (bounds.users[q].ub_sup >= 1) {
      auto out = prune_user(q, ctx);
      CHECK(out.kept());
    }
  }
  SECTION("disabled checks never fire") {
    ctx.query_kws = {static_cast<KeywordId>(999)};
    ctx.toggles.keyword = false;
    ctx.omega_abs = 1e9;
    ctx.toggles.omega = false;
    ctx.pi_abs = 1e9;
    ctx.toggles.pi = false;
    ctx.k = 100;
    ctx.toggles.support = false;
    ctx.d = -1;
    ctx.toggles.social_dist = false;
    ctx.theta = 2.0;
    ctx.toggles.influence = false;
    ctx.sigma = -1.0;
    ctx.toggles.spatial_dist = false;
    auto out = prune_user(3, ctx);
    CHECK(out.kept());
  }
  SECTION("check order fires the cheapest reason first") {
    // a user failing everything reports Keyword (the first check)
    ctx.query_kws = {static_cast<KeywordId>(999)};
    ctx.omega_abs = 1e9;
    ctx.pi_abs = 1e9;
    ctx.k = 100;
    auto out = prune_user(7, ctx);
    CHECK(out.reason == PruneReason::Keyword);
  }
  SECTION("spatial check skipped when omega_abs is zero") {
    UserId q = 0;
    while (ds.checkins.checkins(q).empty()) ++q;
    ctx.q = q;
    auto first_poi = ds.checkins.checkins(q)[0].first;
    ctx.query_kws = ds.pois.keyword_set(first_poi);
    ctx.poi_q = compute_poi_q(ds, q, ctx.query_kws);
    ctx.omega_abs = 0.0;
    ctx.pi_abs = 0.0;
    ctx.theta = 0.0;
    ctx.k = 2;  // support check passes trivially at k-2 = 0
    ctx.sigma = -1.0;  // would otherwise prune everyone with the lb > sigma rule
    for (UserId u = 0; u < 12; ++u) {
      if (ds.checkins.checkins(u).empty()) continue;
      if (!kw_intersects(bounds.users[u].kw, ctx.query_kws)) continue;
      auto out = prune_user(u, ctx);
      CHECK(out.reason != PruneReason::SpatialDist);
    }
  }
}

TEST_CASE("poi_q computation") {
  Rng rng(213);
  auto ds = random_dataset(rng, 6, 6, 8);
  UserId q = 0;
  while (ds.checkins.checkins(q).empty()) ++q;
  auto any_poi = ds.checkins.checkins(q)[0].first;
  auto kws = ds.pois.keyword_set(any_poi);
  auto poi_q = compute_poi_q(ds, q, kws);
  CHECK(std::find(poi_q.begin(), poi_q.end(), any_poi) != poi_q.end());
  for (PoiId p : poi_q) {
    CHECK(ds.checkins.frequency(q, p) > 0.0);
    CHECK(ds.pois.matches(p, kws));
  }
  CHECK(compute_poi_q(ds, q, {static_cast<KeywordId>(999)}).empty());
}

TEST_CASE("pivot tables round out the offline bounds") {
  Rng rng(214);
  auto ds = random_dataset(rng, 10, 6, 12);
  auto b = full_bounds(ds);
  REQUIRE(b.pivots.social.size() == 4);
  REQUIRE(b.pivots.road.size() == 4);
  for (UserId u = 0; u < 10; ++u) REQUIRE(b.users[u].pivot_hops.size() == 4);
  REQUIRE(b.poi_pivot_dist.size() == 6);
  // table rows agree with fresh Dijkstra runs
  for (size_t i = 0; i < b.pivots.road.size(); ++i) {
    auto dist = dijkstra(ds.road, b.pivots.road[i]);
    for (PoiId p = 0; p < 6; ++p)
      REQUIRE(b.poi_pivot_dist[p][i] == Catch::Approx(dist[ds.pois.anchor(p)]));
  }
  CHECK(b.fingerprint == ds.fingerprint());
}

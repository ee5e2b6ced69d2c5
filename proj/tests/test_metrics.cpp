#include <catch2/catch_amalgamated.hpp>

#include "gsc/metrics.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace gsc;
using testutil::all_users;
using testutil::random_dataset;
using testutil::random_social;
using testutil::social_from_edges;

TEST_CASE("isf basics") {
  SECTION("single edge, no other path") {
    auto g = social_from_edges(2, {{0, 1, 0.5}});
    CHECK(isf(g, 0, 1) == 0.5);
    CHECK(isf(g, 1, 0) == 0.0);  // unreachable
  }
  SECTION("u == v is the multiplicative identity") {
    auto g = social_from_edges(2, {{0, 1, 0.5}});
    CHECK(isf(g, 0, 0) == 1.0);
  }
  SECTION("diamond takes the best product path") {
    // u ->a(0.9)-> v (0.9) vs u ->b(0.5)-> v (0.99): 0.81 beats 0.495
    auto g = social_from_edges(4, {{0, 1, 0.9}, {1, 3, 0.9}, {0, 2, 0.5}, {2, 3, 0.99}});
    CHECK(isf(g, 0, 3) == Catch::Approx(0.81).margin(1e-12));
    CHECK(oracles::isf_simple_paths(g, 0, 3) == Catch::Approx(0.81).margin(1e-12));
  }
  SECTION("unknown user throws") {
    auto g = social_from_edges(2, {{0, 1, 0.5}});
    CHECK_THROWS_AS(isf(g, 0, 7), validation_error);
  }
}

TEST_CASE("isf equals simple-path brute force on small random graphs") {
  Rng rng(101);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 2 + static_cast<int>(rng.below(7));  // up to 8 users
    auto g = random_social(rng, n, 0.35);
    UserId u = static_cast<UserId>(rng.below(n));
    UserId v = static_cast<UserId>(rng.below(n));
    CAPTURE(trial, n, u, v);
    REQUIRE(isf(g, u, v) == Catch::Approx(oracles::isf_simple_paths(g, u, v)).margin(1e-12));
  }
}

TEST_CASE("isf never decreases when an edge is added") {
  Rng rng(102);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 3 + static_cast<int>(rng.below(6));
    auto g = random_social(rng, n, 0.25);
    // pick a missing ordered pair
    UserId a = 0, b = 0;
    bool found = false;
    for (int tries = 0; tries < 50 && !found; ++tries) {
      a = static_cast<UserId>(rng.below(n));
      b = static_cast<UserId>(rng.below(n));
      found = a != b && !g.has_edge(a, b);
    }
    if (!found) continue;
    std::vector<std::vector<double>> before(n, std::vector<double>(n));
    for (int u = 0; u < n; ++u) {
      auto row = isf_from(g, u);
      for (int v = 0; v < n; ++v) before[u][v] = row[v];
    }
    g.add_edge(a, b, rng.real_pos());
    for (int u = 0; u < n; ++u) {
      auto row = isf_from(g, u);
      for (int v = 0; v < n; ++v) REQUIRE(row[v] >= before[u][v] - 1e-15);
    }
  }
}

TEST_CASE("hop distance on the skeleton") {
  auto g = social_from_edges(4, {{0, 1, 0.5}, {1, 2, 0.5}});
  Skeleton s(g);
  CHECK(hop_distance(s, 0, 0) == 0);
  CHECK(hop_distance(s, 0, 2) == 2);
  CHECK(hop_distance(s, 0, 3) == kUnreachable);
}

TEST_CASE("road distance") {
  SECTION("path sums lengths") {
    RoadNetwork r;
    r.add_vertex("a", 0, 0);
    r.add_vertex("b", 1, 0);
    r.add_vertex("c", 3, 0);
    r.add_edge(0, 1, 1.0);
    r.add_edge(1, 2, 2.0);
    CHECK(road_distance(r, 0, 0) == 0.0);
    CHECK(road_distance(r, 0, 2) == Catch::Approx(3.0));
  }
  SECTION("grid with shortcut matches exhaustive enumeration") {
    Rng rng(103);
    for (int trial = 0; trial < 40; ++trial) {
      auto r = testutil::random_road(rng, 6, 10.0, 4);
      for (VertexId a = 0; a < 6; ++a)
        for (VertexId b = 0; b < 6; ++b)
          REQUIRE(road_distance(r, a, b) ==
                  Catch::Approx(oracles::road_all_paths(r, a, b)).margin(1e-9));
    }
  }
}

TEST_CASE("avg_dist") {
  RoadNetwork r;
  r.add_vertex("a", 0, 0);
  r.add_vertex("b", 2, 0);
  r.add_vertex("c", 6, 0);
  r.add_edge(0, 1, 2.0);
  r.add_edge(1, 2, 4.0);
  PoiTable pois;
  auto kw = pois.intern_keyword("x");
  pois.add_poi("pa", 0, {kw});
  pois.add_poi("pb", 1, {kw});
  pois.add_poi("pc", 2, {kw});

  SECTION("single check-in at the same vertex") {
    BipartiteNetwork b(1, 3);
    b.add_edge(0, 1, 1.0);
    CHECK(avg_dist(b, r, pois, 0, 1) == 0.0);
  }
  SECTION("mean of distances 2 and 4") {
    BipartiteNetwork b(1, 3);
    b.add_edge(0, 0, 1.0);  // at distance 2 from pb
    b.add_edge(0, 2, 1.0);  // at distance 4 from pb
    CHECK(avg_dist(b, r, pois, 0, 1) == Catch::Approx(3.0));
  }
  SECTION("no check-ins is an error") {
    BipartiteNetwork b(1, 3);
    CHECK_THROWS_AS(avg_dist(b, r, pois, 0, 0), validation_error);
  }
  SECTION("matches direct per-checkin summation on a random instance") {
    Rng rng(104);
    auto ds = random_dataset(rng, 6, 8, 10);
    for (UserId u = 0; u < 6; ++u) {
      if (ds.checkins.checkins(u).empty()) continue;
      for (PoiId p = 0; p < 8; ++p) {
        double direct = 0.0;
        for (const auto& [lp, f] : ds.checkins.checkins(u))
          direct += road_distance(ds.road, ds.pois.anchor(lp), ds.pois.anchor(p));
        direct /= static_cast<double>(ds.checkins.checkins(u).size());
        REQUIRE(avg_dist(ds.checkins, ds.road, ds.pois, u, p) ==
                Catch::Approx(direct).margin(1e-9));
      }
    }
  }
  SECTION("invariant under check-in insertion order") {
    BipartiteNetwork b1(1, 3), b2(1, 3);
    b1.add_edge(0, 0, 1.0);
    b1.add_edge(0, 2, 5.0);
    b2.add_edge(0, 2, 5.0);
    b2.add_edge(0, 0, 1.0);
    CHECK(avg_dist(b1, r, pois, 0, 1) == avg_dist(b2, r, pois, 0, 1));
  }
}

TEST_CASE("edge support") {
  SECTION("triangle: every edge support 1") {
    auto g = social_from_edges(3, {{0, 1, .5}, {1, 2, .5}, {2, 0, .5}});
    Skeleton s(g);
    auto sup = edge_support(s, {0, 1, 2});
    REQUIRE(sup.size() == 3);
    for (const auto& [k, v] : sup) CHECK(v == 1);
  }
  SECTION("4-clique: every edge support 2") {
    std::vector<std::tuple<int, int, double>> edges;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) edges.push_back({a, b, 0.5});
    auto g = social_from_edges(4, edges);
    Skeleton s(g);
    auto sup = edge_support(s, {0, 1, 2, 3});
    REQUIRE(sup.size() == 6);
    for (const auto& [k, v] : sup) CHECK(v == 2);
  }
  SECTION("random G(12, 0.4) matches naive triple enumeration") {
    Rng rng(105);
    for (int trial = 0; trial < 25; ++trial) {
      auto g = random_social(rng, 12, 0.4);
      Skeleton s(g);
      std::vector<UserId> users;
      for (UserId u = 0; u < 12; ++u)
        if (rng.real() < 0.8) users.push_back(u);
      auto fast = edge_support(s, users);
      auto slow = oracles::support_triples(s, users);
      REQUIRE(fast.size() == slow.size());
      for (const auto& [edge, v] : slow)
        REQUIRE(fast.at(edge_key(edge.first, edge.second)) == v);
    }
  }
}

TEST_CASE("verify_kd_truss") {
  auto triangle = social_from_edges(4, {{0, 1, .5}, {1, 2, .5}, {2, 0, .5}, {2, 3, .5}});
  Skeleton s(triangle);
  SECTION("triangle containing q, k=3, d=1") { CHECK(verify_kd_truss(s, {0, 1, 2}, 0, 3, 1)); }
  SECTION("triangle fails k=4 (support 1 < 2)") { CHECK(!verify_kd_truss(s, {0, 1, 2}, 0, 4, 1)); }
  SECTION("singleton never qualifies for k > 2") { CHECK(!verify_kd_truss(s, {0}, 0, 3, 1)); }
  SECTION("q outside the set") { CHECK(!verify_kd_truss(s, {1, 2, 3}, 0, 3, 2)); }
  SECTION("d measured inside the subgraph") {
    // 0-1-2 is a path inside the set even though 0-3-2 shortcuts outside it
    auto g = social_from_edges(4, {{0, 1, .5}, {1, 2, .5}, {0, 3, .5}, {3, 2, .5}});
    Skeleton sk(g);
    CHECK(!verify_kd_truss(sk, {0, 1, 2}, 0, 2, 1));
  }
  SECTION("agrees with the definition-literal checker on random instances") {
    Rng rng(106);
    for (int trial = 0; trial < 120; ++trial) {
      auto g = random_social(rng, 9, 0.35);
      Skeleton sk(g);
      std::vector<UserId> users{0};
      for (UserId u = 1; u < 9; ++u)
        if (rng.real() < 0.6) users.push_back(u);
      int k = 3 + static_cast<int>(rng.below(3));
      int d = 1 + static_cast<int>(rng.below(3));
      CAPTURE(trial, k, d);
      REQUIRE(verify_kd_truss(sk, users, 0, k, d) ==
              oracles::kd_truss_literal(sk, users, 0, k, d));
    }
  }
  SECTION("truss at (k,d) implies truss at (k-1,d) and (k,d+1)") {
    Rng rng(107);
    int hits = 0;
    for (int trial = 0; trial < 300 && hits < 30; ++trial) {
      auto g = random_social(rng, 8, 0.5);
      Skeleton sk(g);
      std::vector<UserId> users{0};
      for (UserId u = 1; u < 8; ++u)
        if (rng.real() < 0.7) users.push_back(u);
      int k = 4, d = 2;
      if (verify_kd_truss(sk, users, 0, k, d)) {
        ++hits;
        CHECK(verify_kd_truss(sk, users, 0, k - 1, d));
        CHECK(verify_kd_truss(sk, users, 0, k, d + 1));
      }
    }
    CHECK(hits > 0);
  }
}

TEST_CASE("verify_keyword_core") {
  RoadNetwork r;
  r.add_vertex("a", 0, 0);
  PoiTable pois;
  auto food = pois.intern_keyword("food");
  auto gas = pois.intern_keyword("gas");
  pois.add_poi("p0", 0, {food});
  pois.add_poi("p1", 0, {gas});

  SECTION("one user, one matching poi, f=5, omega_abs=pi_abs=3") {
    BipartiteNetwork b(1, 2);
    b.add_edge(0, 0, 5.0);
    CHECK(verify_keyword_core(b, pois, {0}, {0}, {food}, 3.0, 3.0));
    CHECK(!verify_keyword_core(b, pois, {0}, {0}, {food}, 6.0, 3.0));  // omega too high
    CHECK(!verify_keyword_core(b, pois, {0}, {1}, {food}, 3.0, 3.0));  // keyword mismatch
  }
  SECTION("poi with zero visitors fails rather than erroring") {
    BipartiteNetwork b(2, 2);
    b.add_edge(0, 0, 5.0);
    CHECK(!verify_keyword_core(b, pois, {0}, {0, 1}, {food, gas}, 1.0, 1.0));
  }
  SECTION("disconnected bipartite subgraph fails") {
    PoiTable pois2;
    auto kw = pois2.intern_keyword("food");
    pois2.add_poi("pa", 0, {kw});
    pois2.add_poi("pb", 0, {kw});
    BipartiteNetwork b(2, 2);
    b.add_edge(0, 0, 5.0);
    b.add_edge(1, 1, 5.0);
    CHECK(!verify_keyword_core(b, pois2, {0, 1}, {0, 1}, {kw}, 1.0, 1.0));
  }
  SECTION("agrees with the literal checker on random instances") {
    Rng rng(108);
    for (int trial = 0; trial < 120; ++trial) {
      auto ds = random_dataset(rng, 6, 6, 8);
      std::vector<UserId> users;
      std::vector<PoiId> poi_set;
      for (UserId u = 0; u < 6; ++u)
        if (rng.real() < 0.6) users.push_back(u);
      for (PoiId p = 0; p < 6; ++p)
        if (rng.real() < 0.6) poi_set.push_back(p);
      if (users.empty() || poi_set.empty()) continue;
      std::vector<KeywordId> query{static_cast<KeywordId>(rng.below(6))};
      double omega_abs = rng.uniform(0, 15);
      double pi_abs = rng.uniform(0, 8);
      CAPTURE(trial);
      REQUIRE(verify_keyword_core(ds.checkins, ds.pois, users, poi_set, query, omega_abs,
                                  pi_abs) ==
              oracles::keyword_core_literal(ds.checkins, ds.pois, users, poi_set, query,
                                            omega_abs, pi_abs));
    }
  }
}

TEST_CASE("verify_community flags individual bullets") {
  // triangle of users sharing one poi, generous thresholds
  Dataset ds;
  ds.social = social_from_edges(4, {{0, 1, .9}, {1, 0, .9}, {1, 2, .9}, {2, 1, .9}, {0, 2, .9},
                                    {2, 0, .9}, {0, 3, .9}});
  ds.skeleton = undirected_skeleton(ds.social);
  ds.road.add_vertex("r0", 0, 0);
  ds.road.add_vertex("r1", 1, 0);
  ds.road.add_edge(0, 1);
  auto kw = ds.pois.intern_keyword("food");
  ds.pois.add_poi("p0", 0, {kw});
  ds.checkins.resize(4, 1);
  ds.checkins.add_edge(0, 0, 5.0);
  ds.checkins.add_edge(1, 0, 5.0);
  ds.checkins.add_edge(2, 0, 5.0);

  QueryParams params;
  params.q = "u0";
  params.keywords = {"food"};
  params.k = 3;
  params.d = 1;
  params.theta = 0.5;
  params.sigma = 2.0;
  AbsoluteThresholds abs{3.0, 3.0};

  CommunityAnswer good{{0, 1, 2}, {0}};
  auto rep = verify_community(good, ds, params, 0, {kw}, abs);
  CHECK(rep.valid());

  SECTION("missing q flags membership") {
    CommunityAnswer bad{{1, 2}, {0}};
    auto r2 = verify_community(bad, ds, params, 0, {kw}, abs);
    CHECK(!r2.membership);
  }
  SECTION("low influence flags the influence bullet") {
    QueryParams p2 = params;
    p2.theta = 0.95;
    auto r3 = verify_community(good, ds, p2, 0, {kw}, abs);
    CHECK(!r3.influence);
    CHECK(r3.membership);
  }
  SECTION("sigma violation flags spatial") {
    QueryParams p2 = params;
    p2.sigma = -0.5;  // impossible bound
    auto r2 = verify_community(good, ds, p2, 0, {kw}, abs);
    CHECK(!r2.spatial);
  }
  SECTION("maximality probe accepts the full triangle") {
    CHECK(probe_maximality(good, ds, params, 0, {kw}, abs));
  }
}

TEST_CASE("absolute threshold conversion") {
  BipartiteNetwork b(2, 2);
  b.add_edge(0, 0, 3.0);
  b.add_edge(0, 1, 4.0);
  b.add_edge(1, 0, 10.0);
  auto abs = absolute_thresholds(b, 0.5, 0.2);
  CHECK(abs.omega_abs == Catch::Approx(0.5 * 10.0));  // max f_sum = max(7, 10)
  CHECK(abs.pi_abs == Catch::Approx(0.2 * 10.0));     // max single frequency
}

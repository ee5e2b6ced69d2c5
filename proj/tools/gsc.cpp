// gsc: community search over bipartite spatial-social networks.
//
// Subcommands: gen, precompute, build-index, query, oracle, stream, bench.
// Exit codes: 0 ok, 2 validation/parse error, 3 snapshot epoch mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "gsc/datagen.hpp"
#include "gsc/query.hpp"
#include "gsc/snapshot.hpp"
#include "gsc/temporal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gsc;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(s);
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

Dataset load_dataset_cli(const std::string& dir) { return load_dataset_dir(dir); }

struct QueryFlags {
  std::string q;
  std::string keywords;
  int k = 3;
  int d = 3;
  double omega = 0.4;
  double pi = 0.4;
  double theta = 0.4;
  double sigma = 5.0;

  QueryParams params() const {
    QueryParams p;
    p.q = q;
    p.keywords = split_csv(keywords);
    p.k = k;
    p.d = d;
    p.omega = omega;
    p.pi = pi;
    p.theta = theta;
    p.sigma = sigma;
    return p;
  }
};

void add_query_flags(CLI::App* cmd, QueryFlags& f) {
  cmd->add_option("--q", f.q, "query user id")->required();
  cmd->add_option("--keywords", f.keywords, "comma-separated query keyword set")->required();
  cmd->add_option("--k", f.k, "truss parameter k (> 2)");
  cmd->add_option("--d", f.d, "social hop threshold d");
  cmd->add_option("--omega", f.omega, "summed-frequency threshold in (0,1]");
  cmd->add_option("--pi", f.pi, "average-frequency threshold in (0,1]");
  cmd->add_option("--theta", f.theta, "influence threshold in (0,1]");
  cmd->add_option("--sigma", f.sigma, "spatial distance threshold");
}

json answer_to_json(const Dataset& ds, const QueryResult& res) {
  json users = json::array(), pois = json::array();
  for (UserId u : res.answer.users) users.push_back(ds.social.name(u));
  for (PoiId p : res.answer.pois) pois.push_back(ds.pois.name(p));
  json counters_user, counters_node;
  for (int i = 1; i <= 7; ++i) {
    counters_user[prune_reason_name(static_cast<PruneReason>(i))] = res.counters.user[i];
    if (i != static_cast<int>(PruneReason::SpatialDist))
      counters_node[prune_reason_name(static_cast<PruneReason>(i))] = res.counters.node[i];
  }
  return json{{"answer", {{"users", users}, {"pois", pois}}},
              {"report",
               {{"membership", res.report.membership},
                {"truss", res.report.truss},
                {"influence", res.report.influence},
                {"spatial", res.report.spatial},
                {"keyword_core", res.report.keyword_core},
                {"valid", res.report.valid()}}},
              {"candidates", res.candidate_count},
              {"nodes_visited", res.nodes_visited},
              {"prune_counters", {{"user", counters_user}, {"node", counters_node}}},
              {"timings_ms", {{"filter", res.filter_ms}, {"refine", res.refine_ms}}}};
}

void write_or_print(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
}

// seeded query mixes for bench/stream: users with check-ins, keywords drawn
// from their own visited POIs topped up with random dictionary words
std::vector<QueryParams> sample_queries(const Dataset& ds, size_t count, size_t kw_count,
                                        uint64_t seed, const QueryParams& defaults) {
  Rng rng(seed);
  std::vector<UserId> active;
  for (UserId u = 0; u < ds.social.user_count(); ++u)
    if (!ds.checkins.checkins(u).empty()) active.push_back(u);
  std::vector<QueryParams> out;
  if (active.empty()) return out;
  for (size_t i = 0; i < count; ++i) {
    UserId q = active[rng.below(active.size())];
    std::set<std::string> kws;
    std::vector<KeywordId> own;
    for (const auto& [p, f] : ds.checkins.checkins(q))
      for (KeywordId k : ds.pois.keyword_set(p)) own.push_back(k);
    while (kws.size() < kw_count && !own.empty() && kws.size() < own.size())
      kws.insert(ds.pois.keyword(own[rng.below(own.size())]));
    while (kws.size() < kw_count && ds.pois.keyword_count() > kws.size())
      kws.insert(ds.pois.keyword(static_cast<KeywordId>(rng.below(ds.pois.keyword_count()))));
    QueryParams p = defaults;
    p.q = ds.social.name(q);
    p.keywords.assign(kws.begin(), kws.end());
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen(const GenConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto gen = generate(cfg);
  save_social(gen.ds.social, out_dir + "/social.txt");
  save_road(gen.ds.road, out_dir + "/road.txt");
  save_pois(gen.ds.pois, gen.ds.road, out_dir + "/pois.txt");
  save_checkins(gen.ds.checkins, gen.ds.social, gen.ds.pois, out_dir + "/checkins.txt");
  if (cfg.horizon > 0)
    save_temporal_checkins(gen.log, gen.ds.social, gen.ds.pois,
                           out_dir + "/checkins_temporal.txt");
  json manifest{{"seed", cfg.seed},
                {"users", cfg.users},
                {"deg_min", cfg.deg_min},
                {"deg_max", cfg.deg_max},
                {"weight_dist", cfg.weight_dist},
                {"road_vertices", cfg.road_vertices},
                {"poi_count", cfg.poi_count},
                {"dictionary", cfg.dictionary},
                {"poi_kw_min", cfg.poi_kw_min},
                {"poi_kw_max", cfg.poi_kw_max},
                {"checkins_min", cfg.checkins_min},
                {"checkins_max", cfg.checkins_max},
                {"freq_min", cfg.freq_min},
                {"freq_max", cfg.freq_max},
                {"locality", cfg.locality},
                {"horizon", cfg.horizon},
                {"tau", cfg.tau},
                {"counts",
                 {{"users", gen.ds.social.user_count()},
                  {"social_edges", gen.ds.social.edge_count()},
                  {"road_vertices", gen.ds.road.vertex_count()},
                  {"road_edges", gen.ds.road.edge_count()},
                  {"pois", gen.ds.pois.poi_count()},
                  {"checkin_edges", gen.ds.checkins.edge_count()}}},
                {"fingerprint", gen.ds.fingerprint()}};
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote dataset to " << out_dir << "\n";
  return 0;
}

int cmd_stream(const std::string& dataset_dir, const std::string& temporal_path, int batch_size,
               int64_t tau, const std::string& ops, int64_t start, size_t register_random,
               uint64_t seed, double delta, const QueryParams& defaults,
               const std::string& out_csv) {
  auto social = load_social(dataset_dir + "/social.txt");
  auto road = load_road(dataset_dir + "/road.txt");
  auto pois = load_pois(dataset_dir + "/pois.txt", road);
  auto full_log = load_temporal_checkins(temporal_path, social, pois);

  // order events by timestamp; the initial window is everything up to start
  std::vector<UpdateEvent> events;
  for (UserId u = 0; u < full_log.events.size(); ++u)
    for (const auto& [p, t] : full_log.events[u]) events.push_back({u, p, t});
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.t < b.t; });
  if (events.empty()) throw validation_error("temporal file has no events");
  if (start <= 0) start = events.front().t + tau - 1;

  TemporalVisitLog init;
  init.resize(social.user_count());
  std::vector<UpdateEvent> pending;
  for (const auto& ev : events) {
    if (ev.t <= start)
      init.add(ev.user, ev.poi, ev.t);
    else
      pending.push_back(ev);
  }

  EngineConfig ecfg;
  EngineState st = make_engine(std::move(social), std::move(road), std::move(pois),
                               std::move(init), start, tau, ecfg);
  for (const auto& qp : sample_queries(st.ds, register_random, 7, seed, defaults)) {
    try {
      register_query(st, qp);
    } catch (const validation_error&) {
      // sampled query may reference a user filtered by parameters; skip
    }
  }

  std::ofstream csv(out_csv);
  csv << "batch,op,size,t,data_b_ms,comm_1_ms,comm_b_ms,tree_b_ms,active_communities\n";
  size_t batch_no = 0;

  auto run_batch = [&](const UpdateBatch& batch) {
    double t0 = now_ms();
    apply_batch(st, batch, delta, nullptr, false, false);
    double t1 = now_ms();
    // Comm_1: per-event singleton maintenance measured on a registry clone
    auto clone = st.queries;
    for (const auto& ev : batch.events) {
      UpdateBatch single{batch.op, {ev}, batch.t, batch.tau};
      maintain_communities(st, single, &clone);
    }
    double t2 = now_ms();
    maintain_communities(st, batch);
    double t3 = now_ms();
    maintain_index(st, batch, delta);
    double t4 = now_ms();
    size_t active = 0;
    for (const auto& rq : st.queries)
      if (!rq.removed && !rq.answer.empty()) ++active;
    csv << batch_no++ << ',' << (batch.op == BatchOp::Insertion ? "insert" : "delete") << ','
        << batch.events.size() << ',' << batch.t << ',' << (t1 - t0) << ',' << (t2 - t1) << ','
        << (t3 - t2) << ',' << (t4 - t3) << ',' << active << "\n";
  };

  size_t i = 0;
  while (i < pending.size()) {
    UpdateBatch ins{BatchOp::Insertion, {}, 0, tau};
    while (i < pending.size() && static_cast<int>(ins.events.size()) < batch_size)
      ins.events.push_back(pending[i++]);
    ins.t = ins.events.back().t;
    if (ops != "delete") run_batch(ins);
    else {
      // delete-only runs still need the insertions applied for expiry to matter
      apply_batch(st, ins, delta, nullptr, false, false);
      maintain_index(st, ins, delta);
    }
    if (ops != "insert") {
      // expire everything that fell out of the advanced window
      UpdateBatch del{BatchOp::Deletion, {}, ins.t, tau};
      int64_t lo = ins.t - tau + 1;
      for (UserId u = 0; u < st.log.events.size(); ++u)
        for (const auto& [p, t] : st.log.events[u])
          if (t < lo) del.events.push_back({u, p, t});
      if (!del.events.empty()) run_batch(del);
    }
  }
  std::cout << "stream complete: " << batch_no << " batches, csv at " << out_csv << "\n";
  return 0;
}

int cmd_bench(const std::string& dataset_dir, const std::string& bounds_path,
              const std::string& index_path, const std::string& sweep,
              const std::string& values_csv, int reps, size_t n_queries, uint64_t seed,
              bool sound_only, const QueryParams& defaults, const std::string& out_csv,
              const std::string& staging_csv) {
  auto ds = load_dataset_cli(dataset_dir);
  auto bounds = load_bounds(bounds_path);
  auto tree = load_index(index_path);

  auto values = split_csv(values_csv);
  if (values.empty()) throw validation_error("sweep values must be nonempty");
  auto queries = sample_queries(ds, n_queries, defaults.keywords.empty() ? 7 : defaults.keywords.size(),
                                seed, defaults);
  if (queries.empty()) throw validation_error("no queryable users in dataset");

  std::ofstream csv(out_csv);
  csv << "sweep,value,rep,query,q,candidates,users,pois,filter_ms,refine_ms";
  for (int i = 1; i <= 7; ++i) csv << ",prune_" << prune_reason_name(static_cast<PruneReason>(i));
  csv << "\n";

  QueryOptions opts;
  opts.sound_only = sound_only;
  for (const auto& value : values) {
    for (int rep = 0; rep < reps; ++rep) {
      for (size_t qi = 0; qi < queries.size(); ++qi) {
        QueryParams p = queries[qi];
        if (sweep == "omega") p.omega = std::stod(value);
        else if (sweep == "pi") p.pi = std::stod(value);
        else if (sweep == "theta") p.theta = std::stod(value);
        else if (sweep == "sigma") p.sigma = std::stod(value);
        else if (sweep == "k") p.k = std::stoi(value);
        else if (sweep == "d") p.d = std::stoi(value);
        else throw validation_error("unknown sweep parameter: " + sweep);
        auto res = answer_query(ds, bounds, tree, p, opts);
        csv << sweep << ',' << value << ',' << rep << ',' << qi << ',' << p.q << ','
            << res.candidate_count << ',' << res.answer.users.size() << ','
            << res.answer.pois.size() << ',' << res.filter_ms << ',' << res.refine_ms;
        for (int i = 1; i <= 7; ++i) csv << ',' << res.counters.user[i];
        csv << "\n";
      }
    }
  }

  if (!staging_csv.empty()) {
    std::ofstream sc(staging_csv);
    sc << "query,q,stage,stage_name,survivors\n";
    for (size_t qi = 0; qi < queries.size(); ++qi) {
      auto counts = stage_survivor_counts(ds, bounds, queries[qi]);
      for (int s = 0; s < 8; ++s)
        sc << qi << ',' << queries[qi].q << ',' << s << ',' << stage_names()[s] << ','
           << counts[s] << "\n";
    }
  }
  std::cout << "bench complete, csv at " << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"community search over bipartite spatial-social networks"};
  app.require_subcommand(1);

  // --- gen ---
  GenConfig gcfg;
  std::string gen_out = "dataset";
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gcfg.seed);
  gen->add_option("--users", gcfg.users);
  gen->add_option("--deg-min", gcfg.deg_min);
  gen->add_option("--deg-max", gcfg.deg_max);
  gen->add_option("--weight-dist", gcfg.weight_dist, "uniform | gaussian | skew");
  gen->add_option("--road-vertices", gcfg.road_vertices);
  gen->add_option("--pois", gcfg.poi_count);
  gen->add_option("--dict", gcfg.dictionary);
  gen->add_option("--poi-kw-min", gcfg.poi_kw_min);
  gen->add_option("--poi-kw-max", gcfg.poi_kw_max);
  gen->add_option("--checkins-min", gcfg.checkins_min);
  gen->add_option("--checkins-max", gcfg.checkins_max);
  gen->add_option("--freq-min", gcfg.freq_min);
  gen->add_option("--freq-max", gcfg.freq_max);
  gen->add_option("--locality", gcfg.locality);
  gen->add_option("--horizon", gcfg.horizon, "also emit a temporal log over [1, horizon]");
  gen->add_option("--tau", gcfg.tau);

  // --- precompute ---
  std::string pc_dataset, pc_out = "bounds.snap";
  PivotConfig pcfg;
  bool pc_minimize = false;
  auto* pre = app.add_subcommand("precompute", "compute offline bounds and pivots");
  pre->add_option("--dataset", pc_dataset)->required();
  pre->add_option("--out", pc_out);
  pre->add_option("--social-pivots", pcfg.social_pivots);
  pre->add_option("--road-pivots", pcfg.road_pivots);
  pre->add_option("--iters", pcfg.iterations);
  pre->add_option("--sample-pairs", pcfg.sample_pairs);
  pre->add_option("--seed", pcfg.seed);
  pre->add_flag("--minimize", pc_minimize,
                "minimize the pivot cost objective (the literal direction)");

  // --- build-index ---
  std::string bi_dataset, bi_bounds = "bounds.snap", bi_out = "index.snap";
  IndexConfig icfg;
  auto* bi = app.add_subcommand("build-index", "build the index tree");
  bi->add_option("--dataset", bi_dataset)->required();
  bi->add_option("--bounds", bi_bounds);
  bi->add_option("--out", bi_out);
  bi->add_option("--fanout", icfg.fanout);
  bi->add_option("--leaf-capacity", icfg.leaf_capacity);
  bi->add_option("--w-bs", icfg.weights.bs);
  bi->add_option("--w-ss", icfg.weights.ss);
  bi->add_option("--w-rs", icfg.weights.rs);
  bi->add_option("--partition-iters", icfg.partition_iterations);
  bi->add_option("--tree-iters", icfg.tree_iterations);
  bi->add_option("--pair-budget", icfg.cost_pair_budget);
  bi->add_option("--seed", icfg.seed);

  // --- query ---
  std::string q_dataset, q_bounds = "bounds.snap", q_index = "index.snap", q_out;
  QueryFlags qf;
  bool q_sound = false;
  int q_enum_limit = 18;
  std::string q_disable;
  auto* qc = app.add_subcommand("query", "answer a community query");
  qc->add_option("--dataset", q_dataset)->required();
  qc->add_option("--bounds", q_bounds);
  qc->add_option("--index", q_index);
  add_query_flags(qc, qf);
  qc->add_flag("--sound-only", q_sound, "disable pi-based pruning for oracle-exact answers");
  qc->add_option("--disable", q_disable,
                 "comma list of pruning rules to disable "
                 "(keyword,omega,pi,support,social_dist,influence,spatial_dist)");
  qc->add_option("--enum-limit", q_enum_limit);
  qc->add_option("--out", q_out, "write the JSON result here instead of stdout");

  // --- oracle ---
  std::string o_dataset, o_out;
  QueryFlags of;
  size_t o_guard = 25;
  auto* oc = app.add_subcommand("oracle", "run the brute-force oracle");
  oc->add_option("--dataset", o_dataset)->required();
  add_query_flags(oc, of);
  oc->add_option("--guard", o_guard, "refuse instances with more d-ball users than this");
  oc->add_option("--out", o_out);

  // --- stream ---
  std::string s_dataset, s_temporal, s_ops = "mixed", s_out = "stream.csv";
  int s_batch = 25;
  int64_t s_tau = 30, s_start = 0;
  size_t s_register = 5;
  uint64_t s_seed = 1;
  double s_delta = 0.05;
  QueryFlags sf;
  sf.q = "-";
  sf.keywords = "-";
  auto* sc = app.add_subcommand("stream", "apply temporal batches and emit timings");
  sc->add_option("--dataset", s_dataset)->required();
  sc->add_option("--temporal", s_temporal, "temporal check-in file (u p t)")->required();
  sc->add_option("--batch-size", s_batch);
  sc->add_option("--tau", s_tau);
  sc->add_option("--ops", s_ops, "mixed | insert | delete");
  sc->add_option("--start", s_start, "initial window end (default: first event + tau - 1)");
  sc->add_option("--register-random", s_register, "number of registered random queries");
  sc->add_option("--seed", s_seed);
  sc->add_option("--delta", s_delta, "index stability margin");
  sc->add_option("--k", sf.k);
  sc->add_option("--d", sf.d);
  sc->add_option("--omega", sf.omega);
  sc->add_option("--pi", sf.pi);
  sc->add_option("--theta", sf.theta);
  sc->add_option("--sigma", sf.sigma);
  sc->add_option("--out", s_out);

  // --- bench ---
  std::string b_dataset, b_bounds = "bounds.snap", b_index = "index.snap";
  std::string b_sweep = "omega", b_values = "0.2,0.4,0.6,0.7,0.9";
  std::string b_out = "bench.csv", b_staging;
  int b_reps = 1;
  size_t b_queries = 5;
  uint64_t b_seed = 1;
  bool b_sound = false;
  QueryFlags bf;
  bf.q = "-";
  bf.keywords = "-";
  auto* bc = app.add_subcommand("bench", "parameter sweeps with prune counters");
  bc->add_option("--dataset", b_dataset)->required();
  bc->add_option("--bounds", b_bounds);
  bc->add_option("--index", b_index);
  bc->add_option("--sweep", b_sweep, "omega | pi | theta | sigma | k | d");
  bc->add_option("--values", b_values);
  bc->add_option("--reps", b_reps);
  bc->add_option("--queries", b_queries, "sampled query count per value");
  bc->add_option("--seed", b_seed);
  bc->add_flag("--sound-only", b_sound);
  bc->add_option("--k", bf.k);
  bc->add_option("--d", bf.d);
  bc->add_option("--omega", bf.omega);
  bc->add_option("--pi", bf.pi);
  bc->add_option("--theta", bf.theta);
  bc->add_option("--sigma", bf.sigma);
  bc->add_option("--out", b_out);
  bc->add_option("--staging-out", b_staging, "also write the pruning-power staging table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gcfg, gen_out);

    if (pre->parsed()) {
      pcfg.maximize = !pc_minimize;
      auto ds = load_dataset_cli(pc_dataset);
      auto bounds = build_offline_bounds(ds, pcfg);
      save_bounds(bounds, pc_out);
      std::cout << "bounds written to " << pc_out << " (users=" << bounds.users.size()
                << ", social pivots=" << bounds.pivots.social.size()
                << ", road pivots=" << bounds.pivots.road.size() << ")\n";
      return 0;
    }

    if (bi->parsed()) {
      auto ds = load_dataset_cli(bi_dataset);
      auto bounds = load_bounds(bi_bounds);
      auto tree = build_index(ds, bounds, icfg);
      save_index(tree, bi_out);
      std::cout << "index written to " << bi_out << " (nodes=" << tree.nodes.size()
                << ", leaves=" << tree.pivots.size() << ")\n";
      return 0;
    }

    if (qc->parsed()) {
      auto ds = load_dataset_cli(q_dataset);
      auto bounds = load_bounds(q_bounds);
      auto tree = load_index(q_index);
      QueryOptions opts;
      opts.sound_only = q_sound;
      opts.enum_limit = q_enum_limit;
      for (const auto& name : split_csv(q_disable)) {
        if (name == "keyword") opts.toggles.keyword = false;
        else if (name == "omega") opts.toggles.omega = false;
        else if (name == "pi") opts.toggles.pi = false;
        else if (name == "support") opts.toggles.support = false;
        else if (name == "social_dist") opts.toggles.social_dist = false;
        else if (name == "influence") opts.toggles.influence = false;
        else if (name == "spatial_dist") opts.toggles.spatial_dist = false;
        else throw validation_error("unknown pruning rule: " + name);
      }
      auto res = answer_query(ds, bounds, tree, qf.params(), opts);
      write_or_print(answer_to_json(ds, res), q_out);
      return 0;
    }

    if (oc->parsed()) {
      auto ds = load_dataset_cli(o_dataset);
      auto ans = brute_force_oracle(ds, of.params(), o_guard);
      json users = json::array(), pois = json::array();
      for (UserId u : ans.users) users.push_back(ds.social.name(u));
      for (PoiId p : ans.pois) pois.push_back(ds.pois.name(p));
      write_or_print(json{{"answer", {{"users", users}, {"pois", pois}}}}, o_out);
      return 0;
    }

    if (sc->parsed()) {
      QueryParams defaults = sf.params();
      defaults.q.clear();
      defaults.keywords.clear();
      return cmd_stream(s_dataset, s_temporal, s_batch, s_tau, s_ops, s_start, s_register,
                        s_seed, s_delta, defaults, s_out);
    }

    if (bc->parsed()) {
      QueryParams defaults = bf.params();
      defaults.q.clear();
      defaults.keywords.clear();
      return cmd_bench(b_dataset, b_bounds, b_index, b_sweep, b_values, b_reps, b_queries,
                       b_seed, b_sound, defaults, b_out, b_staging);
    }
  } catch (const epoch_mismatch& e) {
    std::cerr << "epoch mismatch: " << e.what() << "\n";
    return 3;
  } catch (const parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "causnet/engine.hpp"
#include "support/fixtures.hpp"

using namespace causnet;
using namespace causnet::engine;
using scoring::LocalScoreTable;
using doctest::Approx;

namespace {

// Random local scores for every admissible key; `grain` > 0 rounds scores to
// multiples of it so that ties occur.
LocalScoreTable random_table(const ParentConstraints& c, std::mt19937_64& rng, double grain = 0) {
  std::uniform_real_distribution<double> u(-100, 0);
  LocalScoreTable t(c.size());
  for (int v : c.feas_set)
    for (const auto& k : scoring::subsets_up_to(c.pp[static_cast<std::size_t>(v)], c.indegree)) {
      double s = u(rng);
      if (grain > 0) s = std::round(s / grain) * grain;
      t.insert(v, k, s);
    }
  return t;
}

// Handcrafted scores over the lattice example whose unique optimum is the
// chain 3 -> 2 -> 1 -> 4 (one-based).
LocalScoreTable chain_table(const ParentConstraints& c) {
  LocalScoreTable t(4);
  for (int v = 0; v < 4; ++v)
    for (const auto& k : scoring::subsets_up_to(c.pp[static_cast<std::size_t>(v)], 2))
      t.insert(v, k, k.empty() ? -5.0 : -10.0);
  t.insert(2, NodeSubset(4), 0);
  t.insert(1, NodeSubset(4, {2}), 0);
  t.insert(0, NodeSubset(4, {1}), 0);
  t.insert(3, NodeSubset(4, {0}), 0);
  return t;
}

void check_network(const Network& net, const LocalScoreTable& table, const ParentConstraints& c) {
  CHECK(validate_dag(net.parents).acyclic);
  double total = 0;
  NodeSubset seen(c.size());
  for (int v : net.ordering) {
    const auto uv = static_cast<std::size_t>(v);
    CHECK(net.parents[uv].is_subset_of(seen));
    CHECK(net.parents[uv].is_subset_of(c.pp[uv]));
    CHECK(net.parents[uv].count() <= static_cast<std::size_t>(c.indegree));
    // Decomposability: the node's reported score is its table entry.
    CHECK(net.local_scores[uv] == table.at(v, net.parents[uv]));
    total += net.local_scores[uv];
    seen.set(v);
  }
  CHECK(seen == c.feas_set);
  CHECK(net.total_score == Approx(total).epsilon(1e-12));
}

using Key = std::vector<std::string>;

Key key(const std::vector<NodeSubset>& parents) {
  Key k;
  for (const auto& s : parents) k.push_back(s.to_string());
  return k;
}

}  // namespace

TEST_CASE("tie rule") {
  CHECK(ties(1.0, 1.0 + 1e-12));
  CHECK_FALSE(ties(1.0, 1.001));
  CHECK(ties(scoring::kNegInf, scoring::kNegInf));
  CHECK_FALSE(ties(scoring::kNegInf, -1e300));
  CHECK(ties(-1000.0, -1000.0000001));
}

TEST_CASE("best parents agree with brute force") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const int p = 2 + static_cast<int>(rng() % 7);
    auto c = ParentConstraints::from_pp(testing::random_pp(p, 0.6, rng), 1 + static_cast<int>(rng() % 3));
    auto table = random_table(c, rng, rep % 2 ? 5.0 : 0.0);
    BestParentsTable bpt(table, c);
    for (int v : c.feas_set) {
      const auto& pp = c.pp[static_cast<std::size_t>(v)];
      for (const auto& pool : scoring::subsets_up_to(pp, p)) {
        double best = scoring::kNegInf;
        for (std::size_t k = 0; k < table.node(v).keys.size(); ++k)
          if (table.node(v).keys[k].is_subset_of(pool)) best = std::max(best, table.node(v).scores[k]);
        CHECK(bpt.best_score(v, pool) == best);
        CHECK(table.at(v, bpt.best_subset(v, pool)) == best);
        CHECK(bpt.best_subset(v, pool).is_subset_of(pool));
        for (const auto& s : bpt.best_subsets(v, pool)) CHECK(ties(table.at(v, s), best));
        // Pools outside pp give the same answer as their pp part.
        CHECK(bpt.best_score(v, NodeSubset::full(static_cast<std::size_t>(p)).without(v)) >= best);
      }
    }
  }
}

TEST_CASE("best parents on a wide possible-parent set") {
  std::mt19937_64 rng(2);
  const std::size_t p = 24;
  std::vector<NodeSubset> pp(p, NodeSubset(p));
  pp[0] = NodeSubset::full(p).without(0);  // beyond the dense limit
  pp[1] = NodeSubset(p, {0, 2});
  auto c = ParentConstraints::from_pp(pp, 2);
  auto table = random_table(c, rng);
  BestParentsTable bpt(table, c);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    NodeSubset pool(p);
    for (int j = 1; j < static_cast<int>(p); ++j)
      if (coin(rng)) pool.set(j);
    double best = scoring::kNegInf;
    for (std::size_t k = 0; k < table.node(0).keys.size(); ++k)
      if (table.node(0).keys[k].is_subset_of(pool)) best = std::max(best, table.node(0).scores[k]);
    CHECK(bpt.best_score(0, pool) == best);
  }
  // Monotone in the pool.
  NodeSubset small(p, {1, 2}), large(p, {1, 2, 3, 4});
  CHECK(bpt.best_score(0, small) <= bpt.best_score(0, large));
}

TEST_CASE("generational expansion of the lattice example") {
  auto c = ParentConstraints::from_pp(testing::lattice_example_pp(), 2);
  auto levels = generational_expansion(c);
  REQUIRE(levels.size() == 4);
  auto as_set = [](const std::vector<NodeSubset>& level) {
    std::set<std::string> s;
    for (const auto& w : level) s.insert(w.to_string());
    return s;
  };
  CHECK(levels[0].size() == 4);
  // Zero-based: {1,2},{1,4},{2,3} one-based.
  CHECK(as_set(levels[1]) == std::set<std::string>{"{0,1}", "{0,3}", "{1,2}"});
  CHECK(as_set(levels[2]) == std::set<std::string>{"{0,1,2}", "{0,1,3}"});
  CHECK(as_set(levels[3]) == std::set<std::string>{"{0,1,2,3}"});
}

TEST_CASE("generational expansion emits each subset once") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + static_cast<int>(rng() % 8);
    auto c = ParentConstraints::from_pp(testing::random_pp(p, 0.3, rng), 2);
    auto levels = generational_expansion(c);
    std::set<std::string> seen;
    for (std::size_t k = 0; k < levels.size(); ++k)
      for (const auto& w : levels[k]) {
        CHECK(w.count() == k + 1);
        CHECK(seen.insert(w.to_string()).second);
        CHECK(w.is_subset_of(c.feas_set));
      }
  }
  auto complete = generational_expansion(ParentConstraints::complete(5, 2));
  std::size_t total = 0;
  for (const auto& l : complete) total += l.size();
  CHECK(total == 31);
}

TEST_CASE("best sinks on the lattice example") {
  auto c = ParentConstraints::from_pp(testing::lattice_example_pp(), 2);
  auto table = chain_table(c);
  BestParentsTable bpt(table, c);
  auto bst = best_sinks(bpt, c);
  CHECK(bst.size() == 4 + 3 + 2 + 1);
  CHECK(bst.level_sizes() == std::vector<std::size_t>{4, 3, 2, 1});
  CHECK_FALSE(bst.contains(testing::labels(4, {1, 3})));
  CHECK_FALSE(bst.contains(testing::labels(4, {3, 4})));
  CHECK_FALSE(bst.contains(testing::labels(4, {1, 3, 4})));
  CHECK_FALSE(bst.contains(testing::labels(4, {2, 4})));
  // Singletons score their empty parent set.
  for (int v = 0; v < 4; ++v) {
    auto e = bst.find(NodeSubset(4, {v}));
    REQUIRE(e.has_value());
    CHECK(e->sink == v);
    CHECK(e->score == table.at(v, NodeSubset(4)));
  }
  auto full = bst.find(NodeSubset::full(4));
  REQUIRE(full.has_value());
  CHECK(full->score == 0.0);
  CHECK(full->sink == 3);
  CHECK(best_sinks_of(NodeSubset::full(4), bst, bpt, c) == std::vector<int>{3});

  auto rec = recover_networks(bst, bpt, c);
  REQUIRE(rec.networks.size() == 1);
  CHECK(rec.full_set_reachable);
  const auto& net = rec.networks.front();
  CHECK(net.ordering == std::vector<int>{2, 1, 0, 3});
  CHECK(net.parents == std::vector<NodeSubset>{NodeSubset(4, {1}), NodeSubset(4, {2}), NodeSubset(4), NodeSubset(4, {0})});
  check_network(net, table, c);

  auto ex = exhaustive_search(table, c);
  CHECK(ex.best_score == 0.0);
  REQUIRE(ex.maximizers.size() == 1);
  CHECK(ex.maximizers.front() == net.parents);
}

TEST_CASE("combination counts without constraints") {
  std::mt19937_64 rng(4);
  for (auto [p, expect] : {std::pair{3, 48ull}, std::pair{4, 1536ull}, std::pair{2, 4ull}}) {
    auto c = ParentConstraints::complete(static_cast<std::size_t>(p), p - 1);
    auto table = random_table(c, rng);
    BestParentsTable bpt(table, c);
    SweepOptions o;
    o.count_combinations = true;
    auto bst = best_sinks(bpt, c, o);
    CHECK(bst.combinations(NodeSubset::full(static_cast<std::size_t>(p))) == expect);
  }
  auto c = ParentConstraints::complete(3, 2);
  auto table = random_table(c, rng);
  BestParentsTable bpt(table, c);
  CHECK_FALSE(best_sinks(bpt, c).combinations(NodeSubset::full(3)).has_value());
}

TEST_CASE("exhaustive enumeration counts DAGs") {
  std::mt19937_64 rng(5);
  auto c = ParentConstraints::complete(3, 2);
  auto table = random_table(c, rng);
  ExhaustiveOptions all;
  all.generational = false;
  CHECK(exhaustive_search(table, c, all).dags_enumerated == 25);
  CHECK(exhaustive_search(table, c).dags_enumerated == 25);
  auto c4 = ParentConstraints::complete(4, 3);
  CHECK(exhaustive_search(random_table(c4, rng), c4, all).dags_enumerated == 543);
  auto c7 = ParentConstraints::complete(7, 1);
  CHECK_THROWS_AS(exhaustive_search(random_table(c7, rng), c7), DomainError);
}

TEST_CASE("search matches the exhaustive oracle on random instances") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 150; ++rep) {
    const int p = 2 + static_cast<int>(rng() % 4);
    auto c = ParentConstraints::from_pp(testing::random_pp(p, 0.5, rng), 1 + static_cast<int>(rng() % 3));
    if (c.feas_set.empty()) continue;
    auto table = random_table(c, rng, rep % 3 == 0 ? 10.0 : 0.0);
    auto sr = search(table, c);
    auto ex = exhaustive_search(table, c);
    REQUIRE_FALSE(sr.networks.empty());
    CHECK(ties(sr.networks.front().total_score, ex.best_score));
    std::set<Key> oracle, found;
    for (const auto& m : ex.maximizers) oracle.insert(key(m));
    for (const auto& net : sr.networks) {
      check_network(net, table, c);
      CHECK(ties(net.total_score, ex.best_score));
      CHECK(oracle.count(key(net.parents)) == 1);
      found.insert(key(net.parents));
    }
    // Every optimum is recovered unless the cap truncated the list.
    if (!sr.report.truncated) CHECK(found == oracle);
  }
}

TEST_CASE("recovered orderings telescope through the sink table") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    auto c = ParentConstraints::complete(5, 2);
    auto table = random_table(c, rng);
    auto sr = search(table, c);
    for (const auto& net : sr.networks) {
      NodeSubset prefix(5);
      double running = 0;
      for (int v : net.ordering) {
        prefix.set(v);
        running += net.local_scores[static_cast<std::size_t>(v)];
        auto e = sr.sinks.find(prefix);
        REQUIRE(e.has_value());
        CHECK(e->score == Approx(running).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("disconnected possible-parent components are recovered block by block") {
  std::mt19937_64 rng(8);
  // {1,2} and {3,4} never meet, so the full set is unreachable.
  std::vector<NodeSubset> pp{NodeSubset(5, {1}), NodeSubset(5, {0}), NodeSubset(5, {3}), NodeSubset(5, {2}), NodeSubset(5)};
  auto c = ParentConstraints::from_pp(pp, 2);
  for (int rep = 0; rep < 10; ++rep) {
    auto table = random_table(c, rng);
    auto sr = search(table, c);
    CHECK_FALSE(sr.report.full_set_reachable);
    CHECK(sr.report.blocks == 2);
    auto ex = exhaustive_search(table, c);
    for (const auto& net : sr.networks) {
      check_network(net, table, c);
      CHECK(ties(net.total_score, ex.best_score));
    }
  }
}

TEST_CASE("tied optima are all returned") {
  std::mt19937_64 rng(9);
  // Score-equivalent X1 -> X2 and X2 -> X1 on correlated columns.
  Eigen::MatrixXd m = testing::gaussian_matrix(300, 2, rng);
  m.col(1) += m.col(0);
  LearnOptions o;
  auto r = learn(testing::continuous_dataset(m), o);
  REQUIRE(r.networks.size() == 2);
  std::set<std::pair<int, int>> edges;
  for (const auto& n : r.networks) {
    CHECK(n.size() == 2);
    CHECK(Dag{{"a", "b"}, n.parents}.edge_count() == 1);
    edges.insert(Dag{{"a", "b"}, n.parents}.edges().front());
  }
  CHECK(edges == std::set<std::pair<int, int>>{{0, 1}, {1, 0}});

  // The cap truncates.
  o.search.recover.max_networks = 1;
  auto capped = learn(testing::continuous_dataset(m), o);
  CHECK(capped.networks.size() == 1);
  CHECK(capped.report.truncated);
}

TEST_CASE("learn recovers a chain skeleton") {
  std::mt19937_64 rng(10);
  int hits = 0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd m = testing::gaussian_matrix(500, 3, rng);
    m.col(1) += m.col(0);
    m.col(2) += m.col(1);
    auto r = learn(testing::continuous_dataset(m), LearnOptions{});
    const auto full = r.networks.front().parents;
    hits += skeleton(full) == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}};
  }
  CHECK(hits >= 18);
}

TEST_CASE("learn equals the data oracle without constraints") {
  std::mt19937_64 rng(11);
  for (auto family : {scoring::ScoreFamily::bic, scoring::ScoreFamily::bge}) {
    for (int rep = 0; rep < 5; ++rep) {
      Dataset d = testing::continuous_dataset(testing::random_network_data(150, 5, 0.4, rng));
      LearnOptions o;
      o.screen.corr_cutoff = 0.0;
      o.score.family = family;
      o.indegree = 2;
      auto r = learn(d, o);
      auto ex = exhaustive_search(d, o.score, 2, std::nullopt);
      CHECK(ties(r.networks.front().total_score, ex.best_score));
    }
  }
}

TEST_CASE("learn reports stages and errors") {
  std::mt19937_64 rng(12);
  Dataset noise = testing::continuous_dataset(testing::gaussian_matrix(200, 4, rng));
  LearnOptions strict;
  strict.screen.alpha = 1e-6;
  try {
    learn(noise, strict);
    FAIL("expected an empty feasible set");
  } catch (const EmptyFeasSetError& e) {
    CHECK(std::string(e.what()).rfind("screen: ", 0) == 0);
  }

  Dataset d = testing::continuous_dataset(testing::random_network_data(100, 12, 0.5, rng));
  LearnOptions tight;
  tight.screen.corr_cutoff = 0.0;
  tight.search.sweep.max_subsets = 100;
  CHECK_THROWS_AS(learn(d, tight), SearchLimitError);

  LearnOptions ok;
  ok.screen.corr_cutoff = 0.0;
  auto r = learn(testing::continuous_dataset(testing::random_network_data(100, 4, 0.5, rng)), ok);
  std::vector<std::string> stages;
  for (const auto& [name, ms] : r.report.stage_ms) stages.push_back(name);
  CHECK(stages == std::vector<std::string>{"screen", "local_scores", "best_parents", "best_sinks", "recover"});
  CHECK(r.report.n_rows == 100);
  CHECK(r.report.feas_set_size == 4);
  CHECK(r.report.reachable_subsets == 15);
}

TEST_CASE("wide universes match the compact search") {
  std::mt19937_64 rng(13);
  const std::size_t wide = 70;
  auto small = ParentConstraints::complete(5, 2);
  auto small_table = random_table(small, rng);
  std::vector<NodeSubset> pp(wide, NodeSubset(wide));
  // Place the five nodes at spread-out indices of the wide universe.
  const std::vector<int> at{3, 20, 64, 65, 69};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) pp[static_cast<std::size_t>(at[static_cast<std::size_t>(i)])].set(at[static_cast<std::size_t>(j)]);
  auto big = ParentConstraints::from_pp(pp, 2);
  LocalScoreTable big_table(wide);
  for (int v = 0; v < 5; ++v) {
    const auto& ns = small_table.node(v);
    for (std::size_t k = 0; k < ns.keys.size(); ++k) {
      NodeSubset key(wide);
      for (int m : ns.keys[k]) key.set(at[static_cast<std::size_t>(m)]);
      big_table.insert(at[static_cast<std::size_t>(v)], key, ns.scores[k]);
    }
  }
  auto a = search(small_table, small), b = search(big_table, big);
  CHECK(a.networks.front().total_score == b.networks.front().total_score);
  CHECK(a.networks.size() == b.networks.size());
  CHECK(a.report.reachable_subsets == b.report.reachable_subsets);
  for (int v = 0; v < 5; ++v) {
    const auto& sp = a.networks.front().parents[static_cast<std::size_t>(v)];
    const auto& bp = b.networks.front().parents[static_cast<std::size_t>(at[static_cast<std::size_t>(v)])];
    CHECK(sp.count() == bp.count());
    for (int m : sp) CHECK(bp.test(at[static_cast<std::size_t>(m)]));
  }
}

TEST_CASE("search is deterministic") {
  std::mt19937_64 rng(14);
  auto c = ParentConstraints::from_pp(testing::random_pp(8, 0.4, rng), 2);
  auto table = random_table(c, rng, 5.0);
  auto a = search(table, c), b = search(table, c);
  REQUIRE(a.networks.size() == b.networks.size());
  for (std::size_t k = 0; k < a.networks.size(); ++k) {
    CHECK(a.networks[k].parents == b.networks[k].parents);
    CHECK(a.networks[k].ordering == b.networks[k].ordering);
  }
}

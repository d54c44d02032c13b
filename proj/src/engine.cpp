#include "causnet/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

namespace causnet::engine {

bool ties(double a, double b, double rel) noexcept {
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return false;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

constexpr std::uint32_t kNoEntry = std::numeric_limits<std::uint32_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  return __builtin_add_overflow(a, b, &r) ? std::numeric_limits<std::uint64_t>::max() : r;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  return __builtin_mul_overflow(a, b, &r) ? std::numeric_limits<std::uint64_t>::max() : r;
}

// Number of parent subsets of a pool of size m with at most d members.
std::uint64_t parent_combinations(int m, int d) {
  std::uint64_t total = 0, binom = 1;
  for (int c = 0; c <= std::min(m, d); ++c) {
    total = sat_add(total, binom);
    binom = sat_mul(binom, static_cast<std::uint64_t>(m - c)) / static_cast<std::uint64_t>(c + 1);
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Best parents

BestParentsTable::BestParentsTable(const scoring::LocalScoreTable& local, const ParentConstraints& constraints)
    : local_(&local), constraints_(&constraints), nodes_(constraints.size()) {
  const std::size_t p = constraints.size();
  if (local.universe() != p) throw StructuralError("best_parents: score table and constraints disagree on node count");
  for (std::size_t i = 0; i < p; ++i) {
    NodeTable& nt = nodes_[i];
    nt.members = constraints.pp[i].members();
    const auto& ns = local.node(static_cast<int>(i));
    if (ns.keys.empty() || nt.members.size() > kDenseLimit) continue;

    nt.dense = true;
    nt.local_of.assign(p, -1);
    for (std::size_t k = 0; k < nt.members.size(); ++k) nt.local_of[static_cast<std::size_t>(nt.members[k])] = static_cast<int>(k);
    const std::size_t masks = std::size_t{1} << nt.members.size();
    nt.table.assign(masks, Best{scoring::kNegInf, kNoEntry});
    for (std::size_t e = 0; e < ns.keys.size(); ++e) {
      std::size_t mask = 0;
      for (int j : ns.keys[e]) {
        const int li = nt.local_of[static_cast<std::size_t>(j)];
        if (li < 0) throw StructuralError("best_parents: local score key outside pp of node " + std::to_string(i));
        mask |= std::size_t{1} << li;
      }
      nt.table[mask] = Best{ns.scores[e], static_cast<std::uint32_t>(e)};
    }
    auto better = [](const Best& a, const Best& b) {
      if (a.entry == kNoEntry) return false;
      if (b.entry == kNoEntry) return true;
      return a.score > b.score || (a.score == b.score && a.entry < b.entry);
    };
    // Each pool inherits the best of the pools one element smaller.
    for (std::size_t mask = 1; mask < masks; ++mask) {
      for (std::size_t bits = mask; bits; bits &= bits - 1) {
        const Best& cand = nt.table[mask & ~(bits & (~bits + 1))];
        if (better(cand, nt.table[mask])) nt.table[mask] = cand;
      }
    }
  }
}

BestParentsTable::Best BestParentsTable::scan(int node, const NodeSubset& pool) const {
  const auto& ns = local_->node(node);
  Best best{scoring::kNegInf, kNoEntry};
  for (std::size_t e = 0; e < ns.keys.size(); ++e) {
    if (!ns.keys[e].is_subset_of(pool)) continue;
    if (best.entry == kNoEntry || ns.scores[e] > best.score) best = Best{ns.scores[e], static_cast<std::uint32_t>(e)};
  }
  return best;
}

BestParentsTable::Best BestParentsTable::lookup(int node, const NodeSubset& pool) const {
  if (node < 0 || static_cast<std::size_t>(node) >= nodes_.size()) throw StructuralError("best_parents: node out of range");
  const NodeTable& nt = nodes_[static_cast<std::size_t>(node)];
  if (local_->node(node).keys.empty()) throw StructuralError("best_parents: node " + std::to_string(node) + " has no local scores");
  Best b;
  if (nt.dense) {
    std::size_t mask = 0;
    for (int j : pool) {
      const int li = nt.local_of[static_cast<std::size_t>(j)];
      if (li >= 0) mask |= std::size_t{1} << li;
    }
    b = nt.table[mask];
  } else {
    const NodeSubset key = pool & constraints_->pp[static_cast<std::size_t>(node)];
    auto it = nt.memo.find(key);
    if (it != nt.memo.end()) return it->second;
    b = scan(node, key);
    nt.memo.emplace(key, b);
  }
  if (b.entry == kNoEntry)
    throw StructuralError("best_parents: no local score for any subset of pool " + pool.to_string() + " of node " + std::to_string(node));
  return b;
}

double BestParentsTable::best_score(int node, const NodeSubset& pool) const { return lookup(node, pool).score; }

NodeSubset BestParentsTable::best_subset(int node, const NodeSubset& pool) const {
  return local_->node(node).keys[lookup(node, pool).entry];
}

std::vector<NodeSubset> BestParentsTable::best_subsets(int node, const NodeSubset& pool, double rel) const {
  const Best b = lookup(node, pool);
  const auto& ns = local_->node(node);
  std::vector<NodeSubset> out;
  for (std::size_t e = 0; e < ns.keys.size(); ++e)
    if (ns.keys[e].is_subset_of(pool) && ties(ns.scores[e], b.score, rel)) out.push_back(ns.keys[e]);
  return out;
}

double BestParentsTable::best_score_bits(int node, std::uint64_t pool) const {
  const NodeTable& nt = nodes_[static_cast<std::size_t>(node)];
  if (nt.dense) {
    std::size_t mask = 0;
    for (std::uint64_t bits = pool; bits; bits &= bits - 1) {
      const int li = nt.local_of[static_cast<std::size_t>(std::countr_zero(bits))];
      if (li >= 0) mask |= std::size_t{1} << li;
    }
    const Best& b = nt.table[mask];
    if (b.entry == kNoEntry) throw StructuralError("best_parents: missing local score for node " + std::to_string(node));
    return b.score;
  }
  NodeSubset s(nodes_.size());
  for (std::uint64_t bits = pool; bits; bits &= bits - 1) s.set(std::countr_zero(bits));
  return lookup(node, s).score;
}

std::size_t BestParentsTable::size() const {
  std::size_t n = 0;
  for (const auto& nt : nodes_) n += nt.dense ? nt.table.size() : nt.memo.size();
  return n;
}

// ---------------------------------------------------------------------------
// Generational expansion

std::vector<std::vector<NodeSubset>> generational_expansion(const ParentConstraints& constraints) {
  constraints.validate();
  const std::size_t p = constraints.size();
  std::vector<std::vector<NodeSubset>> levels;
  std::vector<NodeSubset> cur;
  for (int v : constraints.feas_set) cur.push_back(NodeSubset(p).set(v));
  while (!cur.empty()) {
    std::vector<NodeSubset> next;
    std::unordered_set<NodeSubset, NodeSubsetHash> seen;
    for (const NodeSubset& w : cur) {
      NodeSubset cand(p);
      for (int u : w) cand |= constraints.po[static_cast<std::size_t>(u)];
      cand &= constraints.feas_set;
      cand -= w;
      for (int v : cand) {
        NodeSubset grown = w.with(v);
        if (seen.insert(grown).second) next.push_back(std::move(grown));
      }
    }
    levels.push_back(std::move(cur));
    cur = std::move(next);
  }
  return levels;
}

// ---------------------------------------------------------------------------
// Best sinks

namespace {

struct NarrowOps {
  using Key = std::uint64_t;
  std::size_t p;

  Key single(int v) const { return Key{1} << v; }
  Key with(Key k, int v) const { return k | (Key{1} << v); }
  Key meet(Key a, Key b) const { return a & b; }
  Key minus(Key a, Key b) const { return a & ~b; }
  Key empty() const { return 0; }
  void add(Key& a, Key b) const { a |= b; }
  int count(Key k) const { return std::popcount(k); }
  template <typename F>
  void each(Key k, F&& f) const {
    for (; k; k &= k - 1) f(std::countr_zero(k));
  }
  Key from(const NodeSubset& s) const { return s.word_size() ? s.word(0) : 0; }
  NodeSubset to(Key k) const {
    NodeSubset s(p);
    each(k, [&](int v) { s.set(v); });
    return s;
  }
  double best(const BestParentsTable& b, int v, Key pool) const { return b.best_score_bits(v, pool); }
};

struct WideOps {
  using Key = NodeSubset;
  std::size_t p;

  Key single(int v) const { return NodeSubset(p).set(v); }
  Key with(const Key& k, int v) const { return k.with(v); }
  Key meet(const Key& a, const Key& b) const { return a & b; }
  Key minus(const Key& a, const Key& b) const { return a - b; }
  Key empty() const { return NodeSubset(p); }
  void add(Key& a, const Key& b) const { a |= b; }
  int count(const Key& k) const { return static_cast<int>(k.count()); }
  template <typename F>
  void each(const Key& k, F&& f) const {
    for (int v : k) f(v);
  }
  Key from(const NodeSubset& s) const { return s; }
  NodeSubset to(const Key& k) const { return k; }
  double best(const BestParentsTable& b, int v, const Key& pool) const { return b.best_score(v, pool); }
};

template <typename Ops>
void sweep(const Ops& ops, BestSinkTable::Store<typename Ops::Key>& st, std::vector<std::size_t>& level_sizes,
           const BestParentsTable& bpt, const ParentConstraints& c, const SweepOptions& opts) {
  using Key = typename Ops::Key;
  const std::size_t p = c.size();
  std::vector<Key> pp(p, ops.empty()), po(p, ops.empty());
  for (std::size_t i = 0; i < p; ++i) {
    pp[i] = ops.from(c.pp[i] & c.feas_set);
    po[i] = ops.from(c.po[i] & c.feas_set);
  }
  const NodeSubset empty(p);

  std::vector<Key> cur;
  for (int v : c.feas_set) {
    const Key k = ops.single(v);
    st.entries.emplace(k, SinkEntry{bpt.best_score(v, empty), v});
    if (opts.count_combinations) st.counts.emplace(k, 1);
    st.order.push_back(k);
    cur.push_back(k);
  }
  while (!cur.empty()) {
    level_sizes.push_back(cur.size());
    std::vector<Key> next;
    for (const Key& w : cur) {
      const double base = st.entries.find(w)->second.score;
      const std::uint64_t base_count = opts.count_combinations ? st.counts.find(w)->second : 0;
      Key cand = ops.empty();
      ops.each(w, [&](int u) { ops.add(cand, po[static_cast<std::size_t>(u)]); });
      cand = ops.minus(cand, w);
      ops.each(cand, [&](int v) {
        const Key pool = ops.meet(w, pp[static_cast<std::size_t>(v)]);
        const double s = base + ops.best(bpt, v, pool);
        Key grown = ops.with(w, v);
        auto [it, fresh] = st.entries.try_emplace(grown, SinkEntry{s, v});
        if (fresh) {
          if (st.entries.size() > opts.max_subsets)
            throw SearchLimitError("reachable subsets exceed the limit of " + std::to_string(opts.max_subsets) +
                                   "; tighten the screening cutoff or cap possible parents");
          next.push_back(grown);
        } else if (s > it->second.score) {
          it->second = SinkEntry{s, v};
        }
        if (opts.count_combinations) {
          auto& cnt = st.counts[grown];
          cnt = sat_add(cnt, sat_mul(base_count, parent_combinations(ops.count(pool), c.indegree)));
        }
      });
    }
    st.order.insert(st.order.end(), next.begin(), next.end());
    cur = std::move(next);
  }
}

}  // namespace

BestSinkTable best_sinks(const BestParentsTable& bpt, const ParentConstraints& constraints, const SweepOptions& opts) {
  constraints.validate();
  BestSinkTable t;
  t.universe_ = constraints.size();
  if (t.universe_ <= 64) {
    BestSinkTable::Store<std::uint64_t> st;
    sweep(NarrowOps{t.universe_}, st, t.level_sizes_, bpt, constraints, opts);
    t.store_ = std::move(st);
  } else {
    BestSinkTable::Store<NodeSubset> st;
    sweep(WideOps{t.universe_}, st, t.level_sizes_, bpt, constraints, opts);
    t.store_ = std::move(st);
  }
  return t;
}

std::size_t BestSinkTable::size() const {
  return std::visit([](const auto& st) { return st.entries.size(); }, store_);
}

std::optional<SinkEntry> BestSinkTable::find(const NodeSubset& w) const {
  if (w.universe() != universe_) return std::nullopt;
  return std::visit(
      [&](const auto& st) -> std::optional<SinkEntry> {
        using Key = typename std::decay_t<decltype(st.order)>::value_type;
        if constexpr (std::is_same_v<Key, std::uint64_t>) {
          auto it = st.entries.find(NarrowOps{universe_}.from(w));
          if (it == st.entries.end()) return std::nullopt;
          return it->second;
        } else {
          auto it = st.entries.find(w);
          if (it == st.entries.end()) return std::nullopt;
          return it->second;
        }
      },
      store_);
}

std::optional<std::uint64_t> BestSinkTable::combinations(const NodeSubset& w) const {
  if (w.universe() != universe_) return std::nullopt;
  return std::visit(
      [&](const auto& st) -> std::optional<std::uint64_t> {
        using Key = typename std::decay_t<decltype(st.order)>::value_type;
        if constexpr (std::is_same_v<Key, std::uint64_t>) {
          auto it = st.counts.find(NarrowOps{universe_}.from(w));
          if (it == st.counts.end()) return std::nullopt;
          return it->second;
        } else {
          auto it = st.counts.find(w);
          if (it == st.counts.end()) return std::nullopt;
          return it->second;
        }
      },
      store_);
}

void BestSinkTable::for_each(const std::function<void(const NodeSubset&, const SinkEntry&)>& f) const {
  std::visit(
      [&](const auto& st) {
        using Key = typename std::decay_t<decltype(st.order)>::value_type;
        for (const Key& k : st.order) {
          if constexpr (std::is_same_v<Key, std::uint64_t>) {
            f(NarrowOps{universe_}.to(k), st.entries.find(k)->second);
          } else {
            f(k, st.entries.find(k)->second);
          }
        }
      },
      store_);
}

std::vector<int> best_sinks_of(const NodeSubset& w, const BestSinkTable& bst, const BestParentsTable& bpt,
                               const ParentConstraints& constraints, double rel) {
  const auto entry = bst.find(w);
  if (!entry) throw StructuralError("best sinks: subset " + w.to_string() + " is not reachable");
  std::vector<int> out;
  if (w.count() == 1) {
    out.push_back(w.first());
    return out;
  }
  for (int s : w) {
    const NodeSubset rest = w.without(s);
    const NodeSubset pool = rest & constraints.pp[static_cast<std::size_t>(s)];
    if (pool.empty()) continue;
    const auto prev = bst.find(rest);
    if (!prev) continue;
    if (ties(prev->score + bpt.best_score(s, pool), entry->score, rel)) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recovery

namespace {

std::string parents_key(const std::vector<NodeSubset>& parents) {
  std::string k;
  for (const auto& s : parents) k += s.to_string();
  return k;
}

class BlockRecovery {
 public:
  BlockRecovery(const BestSinkTable& bst, const BestParentsTable& bpt, const ParentConstraints& c, const RecoverOptions& opts)
      : bst_(bst), bpt_(bpt), c_(c), opts_(opts) {}

  std::vector<Network> run(const NodeSubset& block, bool& truncated) {
    std::vector<int> removed;
    peel(block, removed);
    truncated |= truncated_;
    return std::move(networks_);
  }

 private:
  void peel(const NodeSubset& w, std::vector<int>& removed) {
    if (stop_) return;
    if (w.count() == 1) {
      std::vector<int> ordering{w.first()};
      ordering.insert(ordering.end(), removed.rbegin(), removed.rend());
      emit(ordering);
      if (++leaves_ >= opts_.max_orderings) {
        truncated_ = true;
        stop_ = true;
      }
      return;
    }
    for (int s : best_sinks_of(w, bst_, bpt_, c_)) {
      removed.push_back(s);
      peel(w.without(s), removed);
      removed.pop_back();
      if (stop_) return;
    }
  }

  void emit(const std::vector<int>& ordering) {
    const std::size_t p = c_.size();
    std::vector<std::vector<NodeSubset>> options;
    NodeSubset prefix(p);
    for (int v : ordering) {
      options.push_back(bpt_.best_subsets(v, prefix & c_.pp[static_cast<std::size_t>(v)]));
      prefix.set(v);
    }
    std::vector<std::size_t> pick(ordering.size(), 0);
    while (true) {
      Network net;
      net.parents.assign(p, NodeSubset(p));
      net.local_scores.assign(p, 0.0);
      net.ordering = ordering;
      for (std::size_t k = 0; k < ordering.size(); ++k) {
        const int v = ordering[k];
        net.parents[static_cast<std::size_t>(v)] = options[k][pick[k]];
        const double s = bpt_.local().at(v, options[k][pick[k]]);
        net.local_scores[static_cast<std::size_t>(v)] = s;
        net.total_score += s;
      }
      if (seen_.insert(parents_key(net.parents)).second) {
        if (networks_.size() >= opts_.max_networks) {
          truncated_ = true;
          stop_ = true;
          return;
        }
        networks_.push_back(std::move(net));
      }
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == options[k].size()) pick[k++] = 0;
      if (k == pick.size()) return;
    }
  }

  const BestSinkTable& bst_;
  const BestParentsTable& bpt_;
  const ParentConstraints& c_;
  const RecoverOptions& opts_;
  std::vector<Network> networks_;
  std::set<std::string> seen_;
  std::size_t leaves_ = 0;
  bool truncated_ = false;
  bool stop_ = false;
};

}  // namespace

Recovery recover_networks(const BestSinkTable& bst, const BestParentsTable& bpt, const ParentConstraints& constraints,
                          const RecoverOptions& opts) {
  const std::size_t p = constraints.size();
  Recovery rec;
  NodeSubset remaining = constraints.feas_set;
  std::vector<std::vector<Network>> parts;
  while (!remaining.empty()) {
    std::optional<NodeSubset> best;
    double best_score = 0;
    bst.for_each([&](const NodeSubset& w, const SinkEntry& e) {
      if (!w.is_subset_of(remaining)) return;
      if (!best) {
        best = w;
        best_score = e.score;
        return;
      }
      const std::size_t cw = w.count(), cb = best->count();
      if (cw != cb) {
        if (cw > cb) best = w, best_score = e.score;
        return;
      }
      if (ties(e.score, best_score)) {
        if (lex_less(w, *best)) best = w, best_score = std::max(best_score, e.score);
      } else if (e.score > best_score) {
        best = w, best_score = e.score;
      }
    });
    if (!best) throw StructuralError("recovery: no reachable subset covers the remaining nodes " + remaining.to_string());
    if (rec.blocks.empty()) rec.full_set_reachable = (*best == constraints.feas_set);
    rec.blocks.push_back(*best);
    BlockRecovery br(bst, bpt, constraints, opts);
    parts.push_back(br.run(*best, rec.truncated));
    remaining -= *best;
  }

  // Join the blocks: every combination of per-block optima, up to the cap.
  std::vector<Network> joined(1);
  joined[0].parents.assign(p, NodeSubset(p));
  joined[0].local_scores.assign(p, 0.0);
  for (const auto& part : parts) {
    std::vector<Network> next;
    for (const auto& base : joined) {
      for (const auto& piece : part) {
        if (next.size() >= opts.max_networks) {
          rec.truncated = true;
          break;
        }
        Network n = base;
        for (int v : rec.blocks[static_cast<std::size_t>(&part - parts.data())]) {
          n.parents[static_cast<std::size_t>(v)] = piece.parents[static_cast<std::size_t>(v)];
          n.local_scores[static_cast<std::size_t>(v)] = piece.local_scores[static_cast<std::size_t>(v)];
        }
        n.ordering.insert(n.ordering.end(), piece.ordering.begin(), piece.ordering.end());
        n.total_score += piece.total_score;
        next.push_back(std::move(n));
      }
    }
    joined = std::move(next);
  }
  rec.networks = std::move(joined);
  for (const auto& n : rec.networks)
    if (!validate_dag(n.parents).acyclic) throw StructuralError("recovery produced a cyclic network");
  return rec;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  const std::string prefix = std::string(name) + ": ";
  try {
    return f();
  } catch (const EmptyFeasSetError& e) {
    throw EmptyFeasSetError(prefix + e.what());
  } catch (const SearchLimitError& e) {
    throw SearchLimitError(prefix + e.what());
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const StructuralError& e) {
    throw StructuralError(prefix + e.what());
  }
}

}  // namespace

SearchResult search(const scoring::LocalScoreTable& local, const ParentConstraints& constraints, const SearchOptions& opts) {
  SearchResult out;
  RunReport& r = out.report;
  r.feas_set_size = constraints.feas_set.count();
  r.local_scores = local.size();

  auto t0 = Clock::now();
  BestParentsTable bpt = run_stage("best_parents", [&] { return BestParentsTable(local, constraints); });
  r.stage_ms.emplace_back("best_parents", ms_since(t0));

  t0 = Clock::now();
  out.sinks = run_stage("best_sinks", [&] { return best_sinks(bpt, constraints, opts.sweep); });
  r.stage_ms.emplace_back("best_sinks", ms_since(t0));
  r.reachable_subsets = out.sinks.size();
  r.level_sizes = out.sinks.level_sizes();

  t0 = Clock::now();
  Recovery rec = run_stage("recover", [&] { return recover_networks(out.sinks, bpt, constraints, opts.recover); });
  r.stage_ms.emplace_back("recover", ms_since(t0));
  r.best_parent_entries = bpt.size();
  r.blocks = rec.blocks.size();
  r.full_set_reachable = rec.full_set_reachable;
  r.truncated = rec.truncated;
  out.networks = std::move(rec.networks);
  return out;
}

LearnResult learn(const Dataset& data, const LearnOptions& opts) {
  LearnResult out;
  auto t0 = Clock::now();
  out.screen = run_stage("screen", [&] { return assoc::build_constraints(data, opts.screen, opts.indegree); });
  const double screen_ms = ms_since(t0);

  std::vector<std::string> warnings = out.screen.warnings;
  t0 = Clock::now();
  out.local = run_stage("local_scores", [&] {
    return scoring::compute_local_scores(out.screen.data, out.screen.constraints, opts.score, &warnings);
  });
  const double local_ms = ms_since(t0);

  SearchResult sr = search(out.local, out.screen.constraints, opts.search);
  out.networks = std::move(sr.networks);
  out.sinks = std::move(sr.sinks);
  out.report = std::move(sr.report);
  out.report.n_rows = static_cast<std::size_t>(data.n_rows());
  out.report.n_variables = static_cast<std::size_t>(data.n_cols());
  out.report.stage_ms.insert(out.report.stage_ms.begin(), {{"screen", screen_ms}, {"local_scores", local_ms}});
  out.report.warnings = std::move(warnings);
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

namespace {

class Enumerator {
 public:
  Enumerator(const scoring::LocalScoreTable& local, const ParentConstraints& c, const ExhaustiveOptions& opts)
      : local_(local), c_(c), opts_(opts) {}

  struct Best {
    double score = scoring::kNegInf;
    std::vector<std::vector<NodeSubset>> maximizers;
    std::vector<double> scores;
    bool any = false;
  };

  // Every DAG over `nodes` whose parent sets are table keys inside `nodes`.
  Best run(const NodeSubset& nodes, std::size_t& enumerated) {
    nodes_ = nodes.members();
    options_.clear();
    for (int v : nodes_) {
      std::vector<std::pair<NodeSubset, double>> opts;
      const auto& ns = local_.node(v);
      for (std::size_t e = 0; e < ns.keys.size(); ++e)
        if (ns.keys[e].is_subset_of(nodes)) opts.emplace_back(ns.keys[e], ns.scores[e]);
      options_.push_back(std::move(opts));
    }
    block_ = nodes;
    parents_.assign(c_.size(), NodeSubset(c_.size()));
    assigned_ = NodeSubset(c_.size());
    best_ = Best{};
    count_ = 0;
    assign(0, 0.0);
    enumerated += count_;
    return std::move(best_);
  }

 private:
  void assign(std::size_t k, double partial) {
    if (k == nodes_.size()) {
      ++count_;
      consider(partial);
      return;
    }
    const int v = nodes_[k];
    assigned_.set(v);
    for (const auto& [pa, s] : options_[k]) {
      parents_[static_cast<std::size_t>(v)] = pa;
      if (closes_cycle(v)) continue;
      assign(k + 1, partial + s);
    }
    parents_[static_cast<std::size_t>(v)] = NodeSubset(c_.size());
    assigned_.reset(v);
  }

  // A new cycle must pass through v: is v an ancestor of one of its parents?
  bool closes_cycle(int v) const {
    std::vector<int> stack(parents_[static_cast<std::size_t>(v)].begin(), parents_[static_cast<std::size_t>(v)].end());
    NodeSubset seen(c_.size());
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (u == v) return true;
      if (seen.test(u) || !assigned_.test(u)) continue;
      seen.set(u);
      for (int g : parents_[static_cast<std::size_t>(u)]) stack.push_back(g);
    }
    return false;
  }

  void consider(double score) {
    if (best_.any && !(score > best_.score) && !ties(score, best_.score, opts_.rel_tolerance)) return;
    if (opts_.generational && !has_generational_ordering(block_, &parents_)) return;
    if (!best_.any || !ties(score, best_.score, opts_.rel_tolerance)) {
      best_.maximizers.clear();
      best_.scores.clear();
      best_.score = score;
    } else if (score > best_.score) {
      best_.score = score;
      // Drop earlier maximizers that no longer tie the improved best.
      for (std::size_t k = best_.scores.size(); k-- > 0;) {
        if (ties(best_.scores[k], score, opts_.rel_tolerance)) continue;
        best_.scores.erase(best_.scores.begin() + static_cast<std::ptrdiff_t>(k));
        best_.maximizers.erase(best_.maximizers.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
    best_.any = true;
    if (best_.maximizers.size() < opts_.max_maximizers) {
      best_.maximizers.push_back(parents_);
      best_.scores.push_back(score);
    }
  }

 public:
  // Depth-first search over prefixes: the next node needs all its DAG parents
  // in the prefix and, unless it comes first, a possible parent there too.
  bool has_generational_ordering(const NodeSubset& nodes, const std::vector<NodeSubset>* dag) const {
    std::unordered_set<NodeSubset, NodeSubsetHash> visited;
    std::vector<NodeSubset> stack{NodeSubset(c_.size())};
    while (!stack.empty()) {
      NodeSubset prefix = std::move(stack.back());
      stack.pop_back();
      if (prefix == nodes) return true;
      if (!visited.insert(prefix).second) continue;
      for (int v : nodes) {
        if (prefix.test(v)) continue;
        if (dag && !(*dag)[static_cast<std::size_t>(v)].is_subset_of(prefix)) continue;
        if (!prefix.empty() && !c_.pp[static_cast<std::size_t>(v)].intersects(prefix)) continue;
        stack.push_back(prefix.with(v));
      }
    }
    return false;
  }

 private:
  const scoring::LocalScoreTable& local_;
  const ParentConstraints& c_;
  const ExhaustiveOptions& opts_;
  std::vector<int> nodes_;
  std::vector<std::vector<std::pair<NodeSubset, double>>> options_;
  NodeSubset block_;
  std::vector<NodeSubset> parents_;
  NodeSubset assigned_;
  Best best_;
  std::size_t count_ = 0;
};

}  // namespace

ExhaustiveResult exhaustive_search(const scoring::LocalScoreTable& local, const ParentConstraints& constraints,
                                   const ExhaustiveOptions& opts) {
  constraints.validate();
  const std::size_t p = constraints.size();
  if (local.universe() != p) throw StructuralError("exhaustive search: score table and constraints disagree on node count");
  const std::vector<int> nodes = constraints.feas_set.members();
  if (nodes.size() > kExhaustiveLimit)
    throw DomainError("exhaustive search refuses " + std::to_string(nodes.size()) + " nodes (limit " +
                      std::to_string(kExhaustiveLimit) + ")");

  Enumerator en(local, constraints, opts);
  ExhaustiveResult out;
  if (!opts.generational) {
    auto b = en.run(constraints.feas_set, out.dags_enumerated);
    out.best_score = b.score;
    out.maximizers = std::move(b.maximizers);
    return out;
  }

  // Same block policy as recovery: largest reachable subset of what remains,
  // then the best score, then the lexicographically smallest.
  NodeSubset remaining = constraints.feas_set;
  std::vector<std::vector<std::vector<NodeSubset>>> parts;
  std::vector<NodeSubset> blocks;
  out.best_score = 0;
  while (!remaining.empty()) {
    const std::vector<int> rem = remaining.members();
    std::vector<NodeSubset> reachable;
    std::size_t widest = 0;
    for (std::uint32_t mask = 1; mask < (1U << rem.size()); ++mask) {
      NodeSubset w(p);
      for (std::size_t k = 0; k < rem.size(); ++k)
        if (mask & (1U << k)) w.set(rem[k]);
      if (!en.has_generational_ordering(w, nullptr)) continue;
      widest = std::max(widest, w.count());
      reachable.push_back(std::move(w));
    }
    std::optional<NodeSubset> chosen;
    Enumerator::Best chosen_best;
    for (const NodeSubset& w : reachable) {
      if (w.count() != widest) continue;
      auto b = en.run(w, out.dags_enumerated);
      bool take = false;
      if (!chosen) take = true;
      else if (ties(b.score, chosen_best.score, opts.rel_tolerance)) take = lex_less(w, *chosen);
      else take = b.score > chosen_best.score;
      if (take) {
        chosen = w;
        chosen_best = std::move(b);
      }
    }
    blocks.push_back(*chosen);
    out.best_score += chosen_best.score;
    parts.push_back(std::move(chosen_best.maximizers));
    remaining -= *chosen;
  }

  std::vector<std::vector<NodeSubset>> joined{std::vector<NodeSubset>(p, NodeSubset(p))};
  for (std::size_t b = 0; b < parts.size(); ++b) {
    std::vector<std::vector<NodeSubset>> next;
    for (const auto& base : joined)
      for (const auto& piece : parts[b]) {
        if (next.size() >= opts.max_maximizers) break;
        auto g = base;
        for (int v : blocks[b]) g[static_cast<std::size_t>(v)] = piece[static_cast<std::size_t>(v)];
        next.push_back(std::move(g));
      }
    joined = std::move(next);
  }
  out.maximizers = std::move(joined);
  return out;
}

ExhaustiveResult exhaustive_search(const Dataset& data, const scoring::ScoreConfig& cfg, int indegree,
                                   const std::optional<ParentConstraints>& constraints, const ExhaustiveOptions& opts) {
  const std::size_t p = static_cast<std::size_t>(data.n_cols());
  if (p > kExhaustiveLimit)
    throw DomainError("exhaustive search refuses " + std::to_string(p) + " nodes (limit " + std::to_string(kExhaustiveLimit) + ")");
  ParentConstraints c = constraints ? *constraints : ParentConstraints::complete(p, indegree);
  c.indegree = indegree;
  const auto local = scoring::compute_local_scores(data, c, cfg);
  return exhaustive_search(local, c, opts);
}

}  // namespace causnet::engine

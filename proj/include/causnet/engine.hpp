#pragma once

// Exact structure search over generational orderings.
//
// The search runs in three passes over a local score table:
//   1. BestParentsTable: for each node and each pool of candidate parents,
//      the best-scoring parent subset of at most `indegree` members.
//   2. best_sinks: a sweep over the reachable node subsets in order of size.
//      A subset W u {v} is reachable from W when v has a possible parent in W.
//      Each reachable subset stores the best network score over its nodes and
//      the sink that attains it.
//   3. recover_networks: peel best sinks off the largest reachable subset to
//      obtain orderings, then give every node its best parents among its
//      predecessors.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <variant>
#include <vector>

#include "causnet/assoc.hpp"
#include "causnet/core.hpp"
#include "causnet/scoring.hpp"

namespace causnet::engine {

inline constexpr double kTieTolerance = 1e-9;

/// Relative tie test; two -inf values tie.
bool ties(double a, double b, double rel = kTieTolerance) noexcept;

/// Best parent subset of each node within each pool of candidate parents.
///
/// Nodes with at most kDenseLimit possible parents get a dense table over all
/// pools, filled incrementally from the pools one element smaller. Larger
/// possible-parent sets are answered on demand and memoized, which makes
/// queries non-thread-safe.
class BestParentsTable {
 public:
  static constexpr std::size_t kDenseLimit = 16;

  BestParentsTable(const scoring::LocalScoreTable& local, const ParentConstraints& constraints);

  /// Highest local score over subsets of `pool` in the table.
  double best_score(int node, const NodeSubset& pool) const;
  /// First subset (size-then-lexicographic) attaining the highest score.
  NodeSubset best_subset(int node, const NodeSubset& pool) const;
  /// Every subset of `pool` whose score ties the best.
  std::vector<NodeSubset> best_subsets(int node, const NodeSubset& pool, double rel = kTieTolerance) const;

  /// best_score for a pool given as bits over a universe of at most 64 nodes.
  double best_score_bits(int node, std::uint64_t pool) const;

  std::size_t size() const;  ///< dense entries plus memoized entries
  const scoring::LocalScoreTable& local() const noexcept { return *local_; }
  const ParentConstraints& constraints() const noexcept { return *constraints_; }

 private:
  struct Best {
    double score;
    std::uint32_t entry;
  };
  struct NodeTable {
    bool dense = false;
    std::vector<int> members;
    std::vector<int> local_of;  // global index -> position in members, or -1
    std::vector<Best> table;    // dense, indexed by local mask
    mutable std::unordered_map<NodeSubset, Best> memo;
  };

  Best lookup(int node, const NodeSubset& pool) const;
  Best scan(int node, const NodeSubset& pool) const;

  const scoring::LocalScoreTable* local_;
  const ParentConstraints* constraints_;
  std::vector<NodeTable> nodes_;
};

/// Reachable subsets, level by level: level 1 holds every feasible singleton,
/// level k every W u {v} with W at level k-1, v outside W and pp(v) meeting W.
std::vector<std::vector<NodeSubset>> generational_expansion(const ParentConstraints& constraints);

struct SinkEntry {
  double score = 0;
  int sink = -1;  ///< a sink attaining `score`; -1 never occurs in a filled table
};

struct SweepOptions {
  std::size_t max_subsets = 10'000'000;  ///< SearchLimitError beyond this many reachable subsets
  bool count_combinations = false;       ///< record (ordering, parent set) combination counts
};

/// Reachable subsets with their best network score and a best sink.
class BestSinkTable {
 public:
  BestSinkTable() = default;

  std::size_t universe() const noexcept { return universe_; }
  std::size_t size() const;
  const std::vector<std::size_t>& level_sizes() const noexcept { return level_sizes_; }

  std::optional<SinkEntry> find(const NodeSubset& w) const;
  bool contains(const NodeSubset& w) const { return find(w).has_value(); }

  /// Number of (ordering, parent set) combinations reaching `w`; requires
  /// count_combinations. Saturates at UINT64_MAX.
  std::optional<std::uint64_t> combinations(const NodeSubset& w) const;

  /// Visits every entry in sweep order.
  void for_each(const std::function<void(const NodeSubset&, const SinkEntry&)>& f) const;

  template <typename Key>
  struct Store {
    std::unordered_map<Key, SinkEntry, std::conditional_t<std::is_same_v<Key, NodeSubset>, NodeSubsetHash, std::hash<Key>>> entries;
    std::vector<Key> order;  // sweep order: by level, then insertion
    std::unordered_map<Key, std::uint64_t, std::conditional_t<std::is_same_v<Key, NodeSubset>, NodeSubsetHash, std::hash<Key>>> counts;
  };

 private:
  friend BestSinkTable best_sinks(const BestParentsTable&, const ParentConstraints&, const SweepOptions&);
  std::size_t universe_ = 0;
  std::vector<std::size_t> level_sizes_;
  std::variant<Store<std::uint64_t>, Store<NodeSubset>> store_;
};

/// Fills the best-sink table over the reachable subsets.
BestSinkTable best_sinks(const BestParentsTable& bpt, const ParentConstraints& constraints, const SweepOptions& opts = {});

/// All sinks of `w` attaining its best score within the tie tolerance.
std::vector<int> best_sinks_of(const NodeSubset& w, const BestSinkTable& bst, const BestParentsTable& bpt,
                               const ParentConstraints& constraints, double rel = kTieTolerance);

struct RecoverOptions {
  std::size_t max_networks = 32;
  std::size_t max_orderings = 100'000;  ///< ordering leaves explored before truncating
};

struct Recovery {
  std::vector<Network> networks;
  bool truncated = false;
  bool full_set_reachable = false;
  std::vector<NodeSubset> blocks;  ///< node sets recovered one after another
};

/// Optimal networks from the filled tables. When the feasible set is not
/// reachable as a whole, the largest (then best-scoring) reachable subset of
/// the remaining nodes is recovered repeatedly and the pieces are joined.
Recovery recover_networks(const BestSinkTable& bst, const BestParentsTable& bpt, const ParentConstraints& constraints,
                          const RecoverOptions& opts = {});

struct RunReport {
  std::size_t n_rows = 0;
  std::size_t n_variables = 0;
  std::size_t feas_set_size = 0;
  std::size_t local_scores = 0;
  std::size_t best_parent_entries = 0;
  std::size_t reachable_subsets = 0;
  std::vector<std::size_t> level_sizes;
  std::size_t blocks = 0;
  bool full_set_reachable = false;
  bool truncated = false;
  std::vector<std::pair<std::string, double>> stage_ms;
  std::vector<std::string> warnings;
};

struct SearchOptions {
  SweepOptions sweep;
  RecoverOptions recover;
};

struct SearchResult {
  std::vector<Network> networks;
  BestSinkTable sinks;
  RunReport report;
};

/// best_parents -> best_sinks -> recover_networks on a prepared score table.
SearchResult search(const scoring::LocalScoreTable& local, const ParentConstraints& constraints,
                    const SearchOptions& opts = {});

struct LearnOptions {
  assoc::ScreenOptions screen;
  scoring::ScoreConfig score;
  int indegree = 2;
  SearchOptions search;
};

struct LearnResult {
  assoc::ScreenResult screen;
  scoring::LocalScoreTable local;
  std::vector<Network> networks;  ///< over screen.data column indices
  BestSinkTable sinks;
  RunReport report;
};

/// Screening, local scores, and search, end to end. Stage failures are
/// rethrown with the stage name prefixed.
LearnResult learn(const Dataset& data, const LearnOptions& opts);

struct ExhaustiveOptions {
  /// Keep only DAGs that follow a complete generational ordering (per block
  /// when the feasible set is not reachable as a whole), mirroring the
  /// space the dynamic program searches.
  bool generational = true;
  double rel_tolerance = kTieTolerance;
  std::size_t max_maximizers = 4096;
};

struct ExhaustiveResult {
  double best_score = scoring::kNegInf;
  std::vector<std::vector<NodeSubset>> maximizers;
  std::size_t dags_enumerated = 0;
};

inline constexpr std::size_t kExhaustiveLimit = 6;

/// Brute-force oracle: enumerates every DAG whose parent sets are table keys
/// (so they respect pp and indegree), scores it by summing local scores and
/// returns all maximizers. Refuses more than kExhaustiveLimit nodes.
ExhaustiveResult exhaustive_search(const scoring::LocalScoreTable& local, const ParentConstraints& constraints,
                                   const ExhaustiveOptions& opts = {});

/// Scores `data` under `constraints` (complete constraints when absent) and runs the oracle.
ExhaustiveResult exhaustive_search(const Dataset& data, const scoring::ScoreConfig& cfg, int indegree,
                                   const std::optional<ParentConstraints>& constraints, const ExhaustiveOptions& opts = {});

}  // namespace causnet::engine

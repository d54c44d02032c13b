#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causnet/errors.hpp"
#include "causnet/node_subset.hpp"

namespace causnet {

enum class ColumnKind { continuous, categorical, survival };

const char* to_string(ColumnKind kind);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  int levels = 0;  ///< categorical only
};

/// Column-typed N x p table.
///
/// Values live in one dense matrix: continuous values as-is, categorical
/// values as level indices 0..levels-1, and the survival column as event or
/// censoring times. Survival status flags are kept separately. Missing values
/// are not representable; loaders reject them.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Column> columns, Eigen::MatrixXd values, Eigen::VectorXi status = {});

  Eigen::Index n_rows() const noexcept { return values_.rows(); }
  int n_cols() const noexcept { return static_cast<int>(columns_.size()); }

  const Column& column(int j) const { return columns_.at(static_cast<std::size_t>(j)); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  auto col(int j) const { return values_.col(j); }

  /// Index of the survival column, if any.
  std::optional<int> survival_index() const noexcept { return survival_; }
  const Eigen::VectorXi& status() const noexcept { return status_; }

  std::optional<int> index_of(const std::string& name) const;
  std::vector<std::string> names() const;

  bool all_continuous() const;

  /// Dataset restricted to the given columns, in the given order.
  Dataset select(const std::vector<int>& cols) const;

 private:
  std::vector<Column> columns_;
  Eigen::MatrixXd values_;
  Eigen::VectorXi status_;
  std::optional<int> survival_;
};

/// Possible-parent constraints over a universe of nodes.
struct ParentConstraints {
  std::vector<NodeSubset> pp;  ///< possible parents per node
  std::vector<NodeSubset> po;  ///< possible offspring: inverse relation of pp
  NodeSubset feas_set;
  int indegree = 2;

  std::size_t size() const noexcept { return pp.size(); }

  /// Builds po and feas_set from pp. Nodes in `always_feasible` (e.g. a
  /// phenotype outcome) join the feasible set regardless of their pp.
  static ParentConstraints from_pp(std::vector<NodeSubset> pp, int indegree,
                                   const std::vector<int>& always_feasible = {});

  /// Every node may parent every other node.
  static ParentConstraints complete(std::size_t p, int indegree);

  /// Throws StructuralError when pp/po duality, self-loop exclusion, or
  /// universe sizes are violated.
  void validate() const;
};

/// Labelled directed graph given by per-node parent sets.
struct Dag {
  std::vector<std::string> names;
  std::vector<NodeSubset> parents;

  std::size_t size() const noexcept { return parents.size(); }
  std::vector<std::pair<int, int>> edges() const;  ///< (from, to), sorted
  std::size_t edge_count() const;
};

/// A scored DAG produced by the search.
struct Network {
  std::vector<NodeSubset> parents;
  std::vector<double> local_scores;
  std::vector<int> ordering;  ///< construction order; every node's parents precede it
  double total_score = 0.0;

  std::size_t size() const noexcept { return parents.size(); }
  Dag as_dag(std::vector<std::string> names) const { return Dag{std::move(names), parents}; }
};

struct DagCheck {
  bool acyclic = true;
  std::vector<int> order;  ///< topological order when acyclic
  std::vector<int> cycle;  ///< v0 -> v1 -> ... -> v0 when cyclic
};

/// Topological sort, preferring the smallest ready index at each step.
DagCheck validate_dag(const std::vector<NodeSubset>& parents);

/// Undirected edge set {min, max} of the directed edges.
std::vector<std::pair<int, int>> skeleton(const std::vector<NodeSubset>& parents);

}  // namespace causnet

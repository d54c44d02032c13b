#include "causnet/core.hpp"

#include <cmath>
#include <queue>
#include <set>

namespace causnet {

const char* to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::survival: return "survival";
  }
  return "?";
}

Dataset::Dataset(std::vector<Column> columns, Eigen::MatrixXd values, Eigen::VectorXi status)
    : columns_(std::move(columns)), values_(std::move(values)), status_(std::move(status)) {
  if (static_cast<Eigen::Index>(columns_.size()) != values_.cols())
    throw InputError("dataset: " + std::to_string(columns_.size()) + " column descriptors for " +
                     std::to_string(values_.cols()) + " value columns");
  if (!values_.allFinite()) throw InputError("dataset: missing or non-finite values are not supported");

  std::set<std::string> seen;
  for (int j = 0; j < n_cols(); ++j) {
    const Column& c = columns_[static_cast<std::size_t>(j)];
    if (!seen.insert(c.name).second) throw InputError("dataset: duplicate column name '" + c.name + "'");
    switch (c.kind) {
      case ColumnKind::continuous: break;
      case ColumnKind::categorical: {
        if (c.levels < 2) throw InputError("dataset: categorical column '" + c.name + "' needs at least 2 levels");
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
          double v = values_(i, j);
          if (v < 0 || v >= c.levels || v != std::floor(v))
            throw InputError("dataset: column '" + c.name + "' has level " + std::to_string(v) +
                             " outside 0.." + std::to_string(c.levels - 1));
        }
        break;
      }
      case ColumnKind::survival: {
        if (survival_) throw InputError("dataset: at most one survival column is supported");
        survival_ = j;
        if (status_.size() != values_.rows())
          throw InputError("dataset: survival column '" + c.name + "' needs one status flag per row");
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
          if (!(values_(i, j) > 0)) throw InputError("dataset: survival times must be positive");
          if (status_(i) != 0 && status_(i) != 1) throw InputError("dataset: survival status must be 0 or 1");
        }
        break;
      }
    }
  }
  if (!survival_ && status_.size() != 0) throw InputError("dataset: status flags given without a survival column");
}

std::optional<int> Dataset::index_of(const std::string& name) const {
  for (int j = 0; j < n_cols(); ++j)
    if (columns_[static_cast<std::size_t>(j)].name == name) return j;
  return std::nullopt;
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

bool Dataset::all_continuous() const {
  for (const auto& c : columns_)
    if (c.kind != ColumnKind::continuous) return false;
  return true;
}

Dataset Dataset::select(const std::vector<int>& cols) const {
  std::vector<Column> columns;
  Eigen::MatrixXd values(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  bool keeps_survival = false;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    columns.push_back(column(cols[k]));
    values.col(static_cast<Eigen::Index>(k)) = values_.col(cols[k]);
    if (survival_ && cols[k] == *survival_) keeps_survival = true;
  }
  return Dataset(std::move(columns), std::move(values), keeps_survival ? status_ : Eigen::VectorXi{});
}

ParentConstraints ParentConstraints::from_pp(std::vector<NodeSubset> pp, int indegree,
                                             const std::vector<int>& always_feasible) {
  const std::size_t p = pp.size();
  ParentConstraints c;
  c.indegree = indegree;
  c.po.assign(p, NodeSubset(p));
  c.feas_set = NodeSubset(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (pp[i].universe() != p) throw StructuralError("pp set universe does not match node count");
    if (pp[i].test(static_cast<int>(i))) throw StructuralError("node " + std::to_string(i) + " lists itself as a possible parent");
    if (!pp[i].empty()) c.feas_set.set(static_cast<int>(i));
    for (int j : pp[i]) {
      c.po[static_cast<std::size_t>(j)].set(static_cast<int>(i));
      c.feas_set.set(j);
    }
  }
  for (int v : always_feasible) c.feas_set.set(v);
  c.pp = std::move(pp);
  return c;
}

ParentConstraints ParentConstraints::complete(std::size_t p, int indegree) {
  std::vector<NodeSubset> pp(p, NodeSubset::full(p));
  for (std::size_t i = 0; i < p; ++i) pp[i].reset(static_cast<int>(i));
  return from_pp(std::move(pp), indegree);
}

void ParentConstraints::validate() const {
  const std::size_t p = pp.size();
  if (po.size() != p) throw StructuralError("po has " + std::to_string(po.size()) + " entries for " + std::to_string(p) + " nodes");
  if (feas_set.universe() != p) throw StructuralError("feasible set universe mismatch");
  if (indegree < 0) throw StructuralError("indegree must be nonnegative");
  for (std::size_t i = 0; i < p; ++i) {
    if (pp[i].universe() != p || po[i].universe() != p) throw StructuralError("constraint universe mismatch");
    if (pp[i].test(static_cast<int>(i))) throw StructuralError("self-loop in pp of node " + std::to_string(i));
    for (int j : pp[i])
      if (!po[static_cast<std::size_t>(j)].test(static_cast<int>(i)))
        throw StructuralError("pp/po duality broken at " + std::to_string(j) + "->" + std::to_string(i));
    for (int j : po[i])
      if (!pp[static_cast<std::size_t>(j)].test(static_cast<int>(i)))
        throw StructuralError("po/pp duality broken at " + std::to_string(i) + "->" + std::to_string(j));
  }
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < parents.size(); ++i)
    for (int j : parents[i]) out.emplace_back(j, static_cast<int>(i));
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Dag::edge_count() const {
  std::size_t c = 0;
  for (const auto& s : parents) c += s.count();
  return c;
}

namespace {

void check_indices(const std::vector<NodeSubset>& parents) {
  const std::size_t p = parents.size();
  for (std::size_t i = 0; i < p; ++i) {
    for (int j : parents[i])
      if (j < 0 || static_cast<std::size_t>(j) >= p)
        throw StructuralError("node " + std::to_string(i) + " has out-of-range parent " + std::to_string(j));
    if (parents[i].universe() > p && parents[i].next(static_cast<int>(p)) >= 0)
      throw StructuralError("node " + std::to_string(i) + " has out-of-range parent");
  }
}

}  // namespace

DagCheck validate_dag(const std::vector<NodeSubset>& parents) {
  check_indices(parents);
  const int p = static_cast<int>(parents.size());
  std::vector<std::vector<int>> children(static_cast<std::size_t>(p));
  std::vector<int> indeg(static_cast<std::size_t>(p), 0);
  for (int i = 0; i < p; ++i) {
    for (int j : parents[static_cast<std::size_t>(i)]) {
      children[static_cast<std::size_t>(j)].push_back(i);
      ++indeg[static_cast<std::size_t>(i)];
    }
  }

  DagCheck out;
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < p; ++i)
    if (indeg[static_cast<std::size_t>(i)] == 0) ready.push(i);
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    out.order.push_back(v);
    for (int c : children[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }
  if (static_cast<int>(out.order.size()) == p) return out;

  // Every remaining node has a remaining parent; walking parents from the
  // smallest remaining node must revisit a node.
  out.acyclic = false;
  out.order.clear();
  int start = -1;
  for (int i = 0; i < p && start < 0; ++i)
    if (indeg[static_cast<std::size_t>(i)] > 0) start = i;
  std::vector<int> pos(static_cast<std::size_t>(p), -1);
  std::vector<int> walk;
  int v = start;
  while (pos[static_cast<std::size_t>(v)] < 0) {
    pos[static_cast<std::size_t>(v)] = static_cast<int>(walk.size());
    walk.push_back(v);
    int next = -1;
    for (int j : parents[static_cast<std::size_t>(v)])
      if (indeg[static_cast<std::size_t>(j)] > 0) {
        next = j;
        break;
      }
    v = next;
  }
  // walk[pos[v]..] follows parent links, i.e. edges point backwards along it.
  std::vector<int> cyc(walk.begin() + pos[static_cast<std::size_t>(v)], walk.end());
  std::reverse(cyc.begin(), cyc.end());
  auto smallest = std::min_element(cyc.begin(), cyc.end());
  std::rotate(cyc.begin(), smallest, cyc.end());
  out.cycle = std::move(cyc);
  return out;
}

std::vector<std::pair<int, int>> skeleton(const std::vector<NodeSubset>& parents) {
  check_indices(parents);
  std::set<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < parents.size(); ++i)
    for (int j : parents[i]) pairs.emplace(std::min(j, static_cast<int>(i)), std::max(j, static_cast<int>(i)));
  return {pairs.begin(), pairs.end()};
}

}  // namespace causnet

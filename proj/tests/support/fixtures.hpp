#pragma once
// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "causnet/core.hpp"
#include "causnet/node_subset.hpp"

namespace causnet::testing {

/// Gaussian columns named X1..Xp.
inline Dataset continuous_dataset(const Eigen::MatrixXd& values) {
  std::vector<Column> cols;
  for (Eigen::Index j = 0; j < values.cols(); ++j) cols.push_back(Column{"X" + std::to_string(j + 1)});
  return Dataset(std::move(cols), values);
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = z(rng);
  return m;
}

/// Linear-Gaussian data along a random DAG over 0..p-1 in index order.
inline Eigen::MatrixXd random_network_data(Eigen::Index n, int p, double edge_prob, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd m = gaussian_matrix(n, p, rng);
  for (int v = 1; v < p; ++v)
    for (int u_ = 0; u_ < v; ++u_)
      if (u(rng) < edge_prob) m.col(v) += (u(rng) < 0.5 ? -1 : 1) * (0.5 + u(rng)) * m.col(u_);
  return m;
}

/// Columns X1..X(1+extra) and a survival outcome "os" with exponential event
/// times, log hazard ratio `beta` on X1, and uniform censoring on [0, 3].
inline Dataset survival_dataset(int n, int extra, double beta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd x = gaussian_matrix(n, 1 + extra, rng);
  Eigen::MatrixXd v(n, 2 + extra);
  v.leftCols(1 + extra) = x;
  Eigen::VectorXi status(n);
  for (int i = 0; i < n; ++i) {
    const double t = -std::log(1 - u(rng)) / std::exp(beta * x(i, 0));
    const double c = 3 * u(rng);
    v(i, 1 + extra) = std::min(t, c);
    status(i) = t <= c;
  }
  std::vector<Column> cols;
  for (int j = 0; j < 1 + extra; ++j) cols.push_back(Column{"X" + std::to_string(j + 1)});
  cols.push_back(Column{"os", ColumnKind::survival});
  return Dataset(cols, v, status);
}

/// Random pp relation over p nodes with self-loops excluded.
inline std::vector<NodeSubset> random_pp(int p, double prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<NodeSubset> pp(static_cast<std::size_t>(p), NodeSubset(static_cast<std::size_t>(p)));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && u(rng) < prob) pp[static_cast<std::size_t>(i)].set(j);
  return pp;
}

/// pp1={2,4}, pp2={3,1}, pp3={2}, pp4={1}, zero-based.
inline std::vector<NodeSubset> lattice_example_pp() {
  return {NodeSubset(4, {1, 3}), NodeSubset(4, {2, 0}), NodeSubset(4, {1}), NodeSubset(4, {0})};
}

/// Zero-based subset from one-based labels.
inline NodeSubset labels(std::size_t universe, std::initializer_list<int> one_based) {
  NodeSubset s(universe);
  for (int m : one_based) s.set(m - 1);
  return s;
}

/// Every ordering of the feasible nodes in which each node after the first
/// has a possible parent among its predecessors.
inline std::set<std::vector<int>> generational_orderings(const ParentConstraints& c) {
  std::vector<int> nodes = c.feas_set.members();
  std::set<std::vector<int>> out;
  do {
    NodeSubset seen(c.size());
    bool ok = true;
    for (std::size_t k = 0; k < nodes.size() && ok; ++k) {
      if (k > 0) ok = c.pp[static_cast<std::size_t>(nodes[k])].intersects(seen);
      seen.set(nodes[k]);
    }
    if (ok) out.insert(nodes);
  } while (std::next_permutation(nodes.begin(), nodes.end()));
  return out;
}

/// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

/// P(T > t) by integrating the t density over [0, |t|].
inline double t_tail_by_quadrature(double t, double df) {
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi);
  auto f = [&](double x) { return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df)); };
  const double mass = simpson(f, 0, std::abs(t), 20000);
  return t >= 0 ? 0.5 - mass : 0.5 + mass;
}

/// P(X > x) for chi-square by integrating over s = sqrt(y), which removes the
/// singularity of the density at zero.
inline double chisq_tail_by_quadrature(double x, double df) {
  const double logc = -(df / 2) * std::log(2.0) - std::lgamma(df / 2);
  auto f = [&](double s) {
    if (s == 0) return df == 1 ? 2 * std::exp(logc) : 0.0;
    const double y = s * s;
    return 2 * s * std::exp(logc + (df / 2 - 1) * std::log(y) - y / 2);
  };
  return 1 - simpson(f, 0, std::sqrt(x), 20000);
}

/// Number of parent subsets of size at most d drawn from m candidates.
inline std::uint64_t binomial_sum(int m, int d) {
  std::uint64_t total = 0, c = 1;
  for (int k = 0; k <= std::min(m, d); ++k) {
    total += c;
    c = c * static_cast<std::uint64_t>(m - k) / static_cast<std::uint64_t>(k + 1);
  }
  return total;
}

}  // namespace causnet::testing

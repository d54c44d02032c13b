#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "causnet/core.hpp"

namespace causnet::scoring {

enum class ScoreFamily { bic, bge };

const char* to_string(ScoreFamily family);

/// Normal-Wishart prior for the BGe score. Unset fields take the defaults
/// alpha_w = p + 2, prior mean = column means, t = alpha_mu (alpha_w - p - 1) / (alpha_mu + 1),
/// where p is the number of dataset columns.
struct BgeParams {
  double alpha_mu = 1.0;
  std::optional<double> alpha_w;
  std::optional<Eigen::VectorXd> prior_mean;
  std::optional<double> t;
};

struct ScoreConfig {
  ScoreFamily family = ScoreFamily::bic;
  BgeParams bge;
  int threads = 1;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Gaussian BIC: LL - (k/2) ln n with k = |parents| + 2. Exact fits score -inf.
double bic_gaussian(const Dataset& data, int node, const NodeSubset& parents);

/// Multinomial BIC: sum N_ijk ln(N_ijk / N_ij) - ((r-1) q / 2) ln n.
double bic_categorical(const Dataset& data, int node, const NodeSubset& parents,
                       std::vector<std::string>* warnings = nullptr);

/// Cox partial log-likelihood at the fitted coefficients minus (|parents| / 2) ln n.
/// The empty parent set scores the null partial likelihood.
double cox_bic(const Dataset& data, int outcome, const NodeSubset& parents, std::vector<std::string>* warnings = nullptr);

/// BGe marginal likelihood over an all-continuous dataset.
class BgeScorer {
 public:
  BgeScorer(const Dataset& data, const BgeParams& params);

  /// log p(D_Y) for the variables in `vars`; zero for the empty set.
  double log_marginal(const NodeSubset& vars) const;

  /// log p(D_{parents + node}) - log p(D_{parents}).
  double local(int node, const NodeSubset& parents) const;

  double alpha_mu() const noexcept { return alpha_mu_; }
  double alpha_w() const noexcept { return alpha_w_; }
  double t() const noexcept { return t_; }

 private:
  Eigen::Index n_obs_ = 0;
  int n_vars_ = 0;
  double alpha_mu_ = 1, alpha_w_ = 0, t_ = 0;
  Eigen::MatrixXd posterior_;  // R = T0 + S_N + (N am / (N + am)) (nu - xbar)(nu - xbar)^T
};

/// bge_local(node, parents): one-off BGe local score.
double bge_local(const Dataset& data, int node, const NodeSubset& parents, const ScoreConfig& cfg);

/// Dispatches each node to the score matching its kind and the configured family.
class LocalScorer {
 public:
  LocalScorer(const Dataset& data, const ScoreConfig& cfg);
  double operator()(int node, const NodeSubset& parents, std::vector<std::string>* warnings = nullptr) const;

 private:
  const Dataset& data_;
  ScoreConfig cfg_;
  std::optional<BgeScorer> bge_;
};

/// Local scores for every node and every admissible parent subset.
class LocalScoreTable {
 public:
  struct NodeScores {
    std::vector<NodeSubset> keys;
    std::vector<double> scores;
    std::unordered_map<NodeSubset, std::size_t> index;
  };

  LocalScoreTable() = default;
  explicit LocalScoreTable(std::size_t universe) : universe_(universe), nodes_(universe) {}

  std::size_t universe() const noexcept { return universe_; }
  const NodeScores& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  void insert(int node, const NodeSubset& parents, double score);
  std::optional<double> find(int node, const NodeSubset& parents) const;
  double at(int node, const NodeSubset& parents) const;  ///< throws on a missing key
  std::size_t size() const;                               ///< total number of entries

 private:
  std::size_t universe_ = 0;
  std::vector<NodeScores> nodes_;
};

/// Every subset of `set` with at most `max_size` members, in size-then-lexicographic order.
std::vector<NodeSubset> subsets_up_to(const NodeSubset& set, int max_size);

/// Fills the table for every feasible node and every subset of its possible
/// parents with at most `indegree` members. Degenerate fits are stored as -inf.
LocalScoreTable compute_local_scores(const Dataset& data, const ParentConstraints& constraints, const ScoreConfig& cfg,
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace causnet::scoring

#include "causnet/scoring.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>

#include "causnet/numeric.hpp"
#include "causnet/parallel.hpp"

namespace causnet::scoring {

const char* to_string(ScoreFamily family) { return family == ScoreFamily::bic ? "bic" : "bge"; }

namespace {

Eigen::MatrixXd design_with_intercept(const Dataset& data, const NodeSubset& parents) {
  Eigen::MatrixXd X(data.n_rows(), static_cast<Eigen::Index>(parents.count()) + 1);
  X.col(0).setOnes();
  Eigen::Index c = 1;
  for (int j : parents) X.col(c++) = data.col(j);
  return X;
}

void check_parents(const Dataset& data, int node, const NodeSubset& parents) {
  if (node < 0 || node >= data.n_cols()) throw StructuralError("score: node index out of range");
  if (parents.universe() != static_cast<std::size_t>(data.n_cols()))
    throw StructuralError("score: parent set universe does not match the dataset");
  if (parents.test(node)) throw StructuralError("score: node cannot be its own parent");
  for (int j : parents)
    if (data.column(j).kind == ColumnKind::survival)
      throw StructuralError("score: survival column '" + data.column(j).name + "' cannot be a parent");
}

}  // namespace

double bic_gaussian(const Dataset& data, int node, const NodeSubset& parents) {
  check_parents(data, node, parents);
  const auto fit = numeric::least_squares(data.col(node), design_with_intercept(data, parents));
  if (std::isinf(fit.log_likelihood)) return kNegInf;
  const double k = static_cast<double>(parents.count()) + 2;
  return fit.log_likelihood - k / 2 * std::log(static_cast<double>(data.n_rows()));
}

double bic_categorical(const Dataset& data, int node, const NodeSubset& parents, std::vector<std::string>* warnings) {
  check_parents(data, node, parents);
  const Column& col = data.column(node);
  if (col.kind != ColumnKind::categorical) throw InputError("bic_categorical: '" + col.name + "' is not categorical");
  const std::vector<int> pa = parents.members();
  double q = 1;
  for (int j : pa) {
    if (data.column(j).kind != ColumnKind::categorical)
      throw InputError("bic_categorical: parent '" + data.column(j).name + "' is not categorical");
    q *= data.column(j).levels;
  }
  const Eigen::Index n = data.n_rows();
  const int r = col.levels;
  if (q > static_cast<double>(n) && warnings)
    warnings->push_back("categorical score of '" + col.name + "': " + std::to_string(static_cast<long long>(q)) +
                        " parent configurations exceed " + std::to_string(n) + " rows");

  // Sparse counts keyed by parent configuration; empty configurations contribute nothing.
  std::map<long long, std::vector<long long>> counts;
  for (Eigen::Index i = 0; i < n; ++i) {
    long long cfg = 0;
    for (int j : pa) cfg = cfg * data.column(j).levels + static_cast<long long>(data.values()(i, j));
    auto& row = counts[cfg];
    if (row.empty()) row.assign(static_cast<std::size_t>(r), 0);
    ++row[static_cast<std::size_t>(data.values()(i, node))];
  }
  double ll = 0;
  for (const auto& [cfg, row] : counts) {
    long long nij = 0;
    for (long long c : row) nij += c;
    for (long long c : row)
      if (c > 0) ll += static_cast<double>(c) * std::log(static_cast<double>(c) / static_cast<double>(nij));
  }
  return ll - (r - 1) * q / 2 * std::log(static_cast<double>(n));
}

double cox_bic(const Dataset& data, int outcome, const NodeSubset& parents, std::vector<std::string>* warnings) {
  check_parents(data, outcome, parents);
  if (data.column(outcome).kind != ColumnKind::survival)
    throw InputError("cox_bic: '" + data.column(outcome).name + "' is not a survival column");
  Eigen::MatrixXd X(data.n_rows(), static_cast<Eigen::Index>(parents.count()));
  Eigen::Index c = 0;
  for (int j : parents) X.col(c++) = data.col(j);
  try {
    const auto fit = numeric::cox_fit(data.col(outcome), data.status(), X);
    if (parents.empty()) return fit.null_log_likelihood;
    return fit.log_likelihood - static_cast<double>(parents.count()) / 2 * std::log(static_cast<double>(data.n_rows()));
  } catch (const Error& e) {
    if (warnings) warnings->push_back("cox score of '" + data.column(outcome).name + "' with parents " + parents.to_string() + ": " + e.what());
    return kNegInf;
  }
}

BgeScorer::BgeScorer(const Dataset& data, const BgeParams& params)
    : n_obs_(data.n_rows()), n_vars_(data.n_cols()), alpha_mu_(params.alpha_mu) {
  if (!data.all_continuous()) throw InputError("BGe scoring requires all-continuous data");
  const double p = n_vars_;
  alpha_w_ = params.alpha_w.value_or(p + 2);
  if (!(alpha_mu_ > 0)) throw InputError("BGe: alpha_mu must be positive");
  if (!(alpha_w_ > p + 1)) throw InputError("BGe: alpha_w must exceed the number of variables + 1");
  t_ = params.t.value_or(alpha_mu_ * (alpha_w_ - p - 1) / (alpha_mu_ + 1));
  if (!(t_ > 0)) throw InputError("BGe: prior scale t must be positive");

  const Eigen::MatrixXd& x = data.values();
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::VectorXd nu = params.prior_mean.value_or(mean);
  if (nu.size() != x.cols()) throw InputError("BGe: prior mean has the wrong dimension");
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const double N = static_cast<double>(n_obs_);
  const Eigen::VectorXd d = nu - mean;
  posterior_ = t_ * Eigen::MatrixXd::Identity(x.cols(), x.cols()) + centered.transpose() * centered +
               (N * alpha_mu_ / (N + alpha_mu_)) * d * d.transpose();
}

double BgeScorer::log_marginal(const NodeSubset& vars) const {
  const std::vector<int> idx = vars.members();
  const int l = static_cast<int>(idx.size());
  if (l == 0) return 0.0;
  const double N = static_cast<double>(n_obs_), n = n_vars_, L = l;
  Eigen::MatrixXd sub(l, l);
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b) sub(a, b) = posterior_(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) throw NumericError("BGe: posterior scale matrix not positive definite for subset " + vars.to_string());
  const double log_det = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double prior_dof = (alpha_w_ - n + L) / 2;
  const double post_dof = (N + alpha_w_ - n + L) / 2;
  return -L * N / 2 * std::log(std::numbers::pi) + L / 2 * std::log(alpha_mu_ / (alpha_mu_ + N)) +
         numeric::log_mvgamma(post_dof, l) - numeric::log_mvgamma(prior_dof, l) + prior_dof * L * std::log(t_) -
         post_dof * log_det;
}

double BgeScorer::local(int node, const NodeSubset& parents) const {
  if (parents.test(node)) throw StructuralError("BGe: node cannot be its own parent");
  return log_marginal(parents.with(node)) - log_marginal(parents);
}

double bge_local(const Dataset& data, int node, const NodeSubset& parents, const ScoreConfig& cfg) {
  check_parents(data, node, parents);
  return BgeScorer(data, cfg.bge).local(node, parents);
}

LocalScorer::LocalScorer(const Dataset& data, const ScoreConfig& cfg) : data_(data), cfg_(cfg) {
  if (cfg.family == ScoreFamily::bge) bge_.emplace(data, cfg.bge);
}

double LocalScorer::operator()(int node, const NodeSubset& parents, std::vector<std::string>* warnings) const {
  if (bge_) {
    check_parents(data_, node, parents);
    return bge_->local(node, parents);
  }
  const Column& col = data_.column(node);
  switch (col.kind) {
    case ColumnKind::survival: return cox_bic(data_, node, parents, warnings);
    case ColumnKind::categorical: {
      // A categorical node only accepts categorical parents.
      for (int j : parents)
        if (data_.column(j).kind != ColumnKind::categorical) return kNegInf;
      return bic_categorical(data_, node, parents, warnings);
    }
    case ColumnKind::continuous: {
      const double s = bic_gaussian(data_, node, parents);
      if (std::isinf(s) && warnings)
        warnings->push_back("degenerate Gaussian fit for '" + col.name + "' with parents " + parents.to_string());
      return s;
    }
  }
  return kNegInf;
}

void LocalScoreTable::insert(int node, const NodeSubset& parents, double score) {
  auto& ns = nodes_.at(static_cast<std::size_t>(node));
  auto [it, fresh] = ns.index.emplace(parents, ns.keys.size());
  if (!fresh) {
    ns.scores[it->second] = score;
    return;
  }
  ns.keys.push_back(parents);
  ns.scores.push_back(score);
}

std::optional<double> LocalScoreTable::find(int node, const NodeSubset& parents) const {
  const auto& ns = nodes_.at(static_cast<std::size_t>(node));
  auto it = ns.index.find(parents);
  if (it == ns.index.end()) return std::nullopt;
  return ns.scores[it->second];
}

double LocalScoreTable::at(int node, const NodeSubset& parents) const {
  auto s = find(node, parents);
  if (!s) throw StructuralError("local score table has no entry for node " + std::to_string(node) + " with parents " + parents.to_string());
  return *s;
}

std::size_t LocalScoreTable::size() const {
  std::size_t n = 0;
  for (const auto& ns : nodes_) n += ns.keys.size();
  return n;
}

std::vector<NodeSubset> subsets_up_to(const NodeSubset& set, int max_size) {
  const std::vector<int> m = set.members();
  const int r = static_cast<int>(m.size());
  std::vector<NodeSubset> out;
  const int top = std::min(max_size, r);
  for (int size = 0; size <= top; ++size) {
    std::vector<int> pick(static_cast<std::size_t>(size));
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == size) {
        NodeSubset s(set.universe());
        for (int k : pick) s.set(m[static_cast<std::size_t>(k)]);
        out.push_back(std::move(s));
        return;
      }
      for (int k = start; k <= r - (size - depth); ++k) {
        pick[static_cast<std::size_t>(depth)] = k;
        rec(k + 1, depth + 1);
      }
    };
    rec(0, 0);
  }
  return out;
}

LocalScoreTable compute_local_scores(const Dataset& data, const ParentConstraints& constraints, const ScoreConfig& cfg,
                                     std::vector<std::string>* warnings) {
  const std::size_t p = constraints.size();
  if (p != static_cast<std::size_t>(data.n_cols())) throw StructuralError("constraints and dataset disagree on node count");
  constraints.validate();
  LocalScorer scorer(data, cfg);

  struct Job {
    int node;
    NodeSubset parents;
  };
  std::vector<Job> jobs;
  for (int i : constraints.feas_set)
    for (auto& s : subsets_up_to(constraints.pp[static_cast<std::size_t>(i)], constraints.indegree))
      jobs.push_back({i, std::move(s)});

  std::vector<double> scores(jobs.size());
  std::vector<std::vector<std::string>> warn(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) { scores[k] = scorer(jobs[k].node, jobs[k].parents, &warn[k]); });

  LocalScoreTable table(p);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    table.insert(jobs[k].node, jobs[k].parents, scores[k]);
    if (warnings) warnings->insert(warnings->end(), warn[k].begin(), warn[k].end());
  }
  return table;
}

}  // namespace causnet::scoring

#include "causnet/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "causnet/numeric.hpp"
#include "causnet/parallel.hpp"

namespace causnet::assoc {

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pearson_r: length mismatch");
  if (x.size() < 3) throw DomainError("pearson_r: need at least 3 observations");
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd xc = xv.array() - xv.mean();
  const Eigen::VectorXd yc = yv.array() - yv.mean();
  const double sxx = xc.squaredNorm(), syy = yc.squaredNorm();
  if (sxx == 0 || syy == 0) throw DomainError("pearson_r: correlation undefined for a constant vector");
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

double corr_p_value(double r, Eigen::Index n) {
  if (n < 4) throw DomainError("corr_test: need at least 4 observations");
  if (std::abs(r) >= 1) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1 - r * r));
  return std::min(1.0, 2 * numeric::student_t_sf(std::abs(t), df));
}

double corr_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 4) throw DomainError("corr_test: need at least 4 observations");
  return corr_p_value(pearson_r(x, y), static_cast<Eigen::Index>(x.size()));
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0 && p <= 1)) throw DomainError("bh_adjust: p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adj(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double v = static_cast<double>(m) / static_cast<double>(k + 1) * p_values[order[k]];
    running = std::min(running, v);
    adj[order[k]] = std::min(1.0, running);
  }
  return adj;
}

std::vector<double> cox_screen(const Dataset& data, int outcome, const std::vector<int>& candidates,
                               std::vector<std::string>* warnings) {
  if (data.column(outcome).kind != ColumnKind::survival)
    throw InputError("cox_screen: outcome '" + data.column(outcome).name + "' is not a survival column");
  const Eigen::VectorXd time = data.col(outcome);
  std::vector<double> p(candidates.size(), 1.0);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const int c = candidates[k];
    if (data.column(c).kind == ColumnKind::survival) throw InputError("cox_screen: candidate is a survival column");
    try {
      const auto fit = numeric::cox_fit(time, data.status(), data.values().col(c));
      const double lr = std::max(0.0, 2 * (fit.log_likelihood - fit.null_log_likelihood));
      p[k] = numeric::chisq_sf(lr, 1.0);
    } catch (const Error& e) {
      if (warnings) warnings->push_back("cox screen of '" + data.column(c).name + "' failed: " + e.what());
    }
  }
  return p;
}

namespace {

struct Test {
  int child;   // the node whose pp receives `parent`
  int parent;
  double r = 0;
  double p = 1;
  bool symmetric = true;  // parent also receives child
  bool cox = false;
  double adj = 1;
};

// Unit-norm centred columns; constant columns are flagged invalid.
struct Standardized {
  Eigen::MatrixXd z;
  std::vector<bool> valid;
};

Standardized standardize(const Dataset& data) {
  Standardized s;
  s.z = data.values().rowwise() - data.values().colwise().mean();
  s.valid.assign(static_cast<std::size_t>(data.n_cols()), true);
  for (int j = 0; j < data.n_cols(); ++j) {
    const double norm = s.z.col(j).norm();
    if (norm == 0 || data.column(j).kind == ColumnKind::survival) {
      s.valid[static_cast<std::size_t>(j)] = false;
      s.z.col(j).setZero();
    } else {
      s.z.col(j) /= norm;
    }
  }
  return s;
}

class Screener {
 public:
  Screener(const Dataset& data, const ScreenOptions& opts) : data_(data), opts_(opts), std_(standardize(data)) {
    if (data.n_rows() < 4) throw InputError("screening needs at least 4 rows");
  }

  // Correlation tests of `x` against every candidate.
  void add_corr_tests(int x, const std::vector<int>& candidates, std::vector<Test>& out, bool symmetric) const {
    const std::size_t base = out.size();
    out.resize(base + candidates.size());
    parallel_for(candidates.size(), opts_.threads, [&](std::size_t k) {
      const int j = candidates[k];
      Test t{x, j};
      t.symmetric = symmetric;
      if (std_.valid[static_cast<std::size_t>(x)] && std_.valid[static_cast<std::size_t>(j)]) {
        t.r = std::clamp(std_.z.col(x).dot(std_.z.col(j)), -1.0, 1.0);
        t.p = corr_p_value(t.r, data_.n_rows());
      } else {
        t.r = std::numeric_limits<double>::quiet_NaN();
      }
      out[base + k] = t;
    });
  }

  void add_cox_tests(int outcome, const std::vector<int>& candidates, std::vector<Test>& out,
                     std::vector<std::string>& warnings) const {
    std::vector<double> p(candidates.size(), 1.0);
    std::vector<std::vector<std::string>> warn(candidates.size());
    parallel_for(candidates.size(), opts_.threads, [&](std::size_t k) {
      p[k] = cox_screen(data_, outcome, {candidates[k]}, &warn[k]).front();
    });
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      Test t{outcome, candidates[k]};
      t.p = p[k];
      t.symmetric = false;
      t.cox = true;
      out.push_back(t);
      warnings.insert(warnings.end(), warn[k].begin(), warn[k].end());
    }
  }

  // Adjusts a family in place and returns the passing tests.
  std::vector<Test> filter(std::vector<Test> family) const {
    std::vector<double> p;
    for (const auto& t : family) p.push_back(t.p);
    const auto adj = bh_adjust(p);
    // Under a correlation cutoff the FDR filter applies only to Cox tests.
    std::vector<double> cox_p;
    for (const auto& t : family)
      if (t.cox) cox_p.push_back(t.p);
    const auto cox_adj = bh_adjust(cox_p);
    std::vector<Test> kept;
    std::size_t ci = 0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      Test t = family[k];
      t.adj = adj[k];
      bool pass;
      if (t.cox) {
        const double a = opts_.corr_cutoff ? cox_adj[ci] : adj[k];
        t.adj = a;
        pass = a <= opts_.alpha;
        ++ci;
      } else if (std::isnan(t.r)) {
        pass = false;
      } else if (opts_.corr_cutoff) {
        pass = std::abs(t.r) >= *opts_.corr_cutoff;
      } else {
        pass = t.adj <= opts_.alpha;
      }
      if (pass) kept.push_back(t);
    }
    return kept;
  }

  // Keeps tests that rank within the max_pp strongest for every node they
  // give a possible parent, so each node keeps at most max_pp partners.
  std::vector<Test> cap_partners(const std::vector<Test>& tests) const {
    if (!opts_.max_pp) return tests;
    const std::size_t cap = static_cast<std::size_t>(std::max(0, *opts_.max_pp));
    std::map<int, std::vector<std::size_t>> by_node;
    for (std::size_t k = 0; k < tests.size(); ++k) {
      by_node[tests[k].child].push_back(k);
      if (tests[k].symmetric) by_node[tests[k].parent].push_back(k);
    }
    std::vector<int> votes(tests.size(), 0);
    for (auto& [node, idx] : by_node) {
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (tests[a].p != tests[b].p) return tests[a].p < tests[b].p;
        const double ra = std::isnan(tests[a].r) ? 0 : std::abs(tests[a].r);
        const double rb = std::isnan(tests[b].r) ? 0 : std::abs(tests[b].r);
        if (ra != rb) return ra > rb;
        return a < b;
      });
      for (std::size_t k = 0; k < std::min(cap, idx.size()); ++k) ++votes[idx[k]];
    }
    std::vector<Test> out;
    for (std::size_t k = 0; k < tests.size(); ++k)
      if (votes[k] == (tests[k].symmetric ? 2 : 1)) out.push_back(tests[k]);
    return out;
  }

 private:
  const Dataset& data_;
  const ScreenOptions& opts_;
  Standardized std_;
};

void add_tests(const std::vector<Test>& tests, std::vector<NodeSubset>& pp) {
  for (const auto& t : tests) {
    pp[static_cast<std::size_t>(t.child)].set(t.parent);
    if (t.symmetric) pp[static_cast<std::size_t>(t.parent)].set(t.child);
  }
}

std::vector<NodeSubset> user_sets(const Dataset& data, const NamedParentSets& named) {
  const std::size_t p = static_cast<std::size_t>(data.n_cols());
  std::vector<NodeSubset> pp(p, NodeSubset(p));
  for (const auto& [child, parents] : named) {
    const auto ci = data.index_of(child);
    if (!ci) throw InputError("pp sets: unknown variable '" + child + "'");
    for (const auto& parent : parents) {
      const auto pi = data.index_of(parent);
      if (!pi) throw InputError("pp sets: unknown variable '" + parent + "' in parents of '" + child + "'");
      if (*pi == *ci) throw InputError("pp sets: '" + child + "' lists itself as a possible parent");
      if (data.column(*pi).kind == ColumnKind::survival)
        throw InputError("pp sets: survival column '" + parent + "' can only be a sink");
      pp[static_cast<std::size_t>(*ci)].set(*pi);
    }
  }
  return pp;
}

}  // namespace

ScreenResult build_constraints(const Dataset& data, const ScreenOptions& opts, int indegree) {
  if (indegree < 0) throw InputError("indegree must be nonnegative");
  if (opts.corr_cutoff && (*opts.corr_cutoff < 0 || *opts.corr_cutoff >= 1))
    throw InputError("correlation cutoff must lie in [0, 1)");
  if (!(opts.alpha > 0 && opts.alpha <= 1)) throw InputError("alpha must lie in (0, 1]");

  const int p = data.n_cols();
  const auto np = static_cast<std::size_t>(p);
  std::optional<int> outcome;
  if (opts.outcome) {
    outcome = data.index_of(*opts.outcome);
    if (!outcome) throw InputError("unknown outcome variable '" + *opts.outcome + "'");
  }
  if (opts.mode == ScreenMode::phenotype) {
    if (!outcome) throw InputError("phenotype-driven screening requires an outcome variable");
    if (opts.levels != 2 && opts.levels != 3) throw InputError("phenotype screening supports 2 or 3 levels");
  }
  const auto surv = data.survival_index();
  if (surv && outcome && *surv != *outcome)
    throw InputError("survival column '" + data.column(*surv).name + "' must be the outcome when an outcome is named");

  ScreenResult result;
  std::vector<NodeSubset> pp(np, NodeSubset(np));

  if (opts.user_pp) {
    pp = user_sets(data, *opts.user_pp);
  } else {
    Screener screener(data, opts);
    auto candidates_for = [&](int x, const std::set<int>& exclude) {
      std::vector<int> c;
      for (int j = 0; j < p; ++j)
        if (j != x && !exclude.count(j) && (!surv || j != *surv)) c.push_back(j);
      return c;
    };

    if (opts.mode == ScreenMode::all_pairs) {
      std::vector<Test> family;
      for (int i = 0; i < p; ++i) {
        if (surv && i == *surv) continue;
        std::vector<int> later;
        for (int j = i + 1; j < p; ++j)
          if (!surv || j != *surv) later.push_back(j);
        screener.add_corr_tests(i, later, family, true);
      }
      if (surv) screener.add_cox_tests(*surv, candidates_for(*surv, {}), family, result.warnings);
      add_tests(screener.cap_partners(screener.filter(std::move(family))), pp);
    } else {
      const int o = *outcome;
      std::vector<Test> level1;
      if (surv && o == *surv) {
        screener.add_cox_tests(o, candidates_for(o, {}), level1, result.warnings);
      } else {
        screener.add_corr_tests(o, candidates_for(o, {}), level1, false);
      }
      auto kept = screener.filter(std::move(level1));
      std::stable_sort(kept.begin(), kept.end(), [](const Test& a, const Test& b) {
        if (a.adj != b.adj) return a.adj < b.adj;
        if (a.p != b.p) return a.p < b.p;
        return a.parent < b.parent;
      });
      if (opts.top_k && kept.size() > static_cast<std::size_t>(*opts.top_k))
        kept.resize(static_cast<std::size_t>(*opts.top_k));
      add_tests(kept, pp);

      std::set<int> screened{o};
      std::set<int> frontier;
      for (const auto& t : kept) frontier.insert(t.parent);
      for (int level = 2; level <= opts.levels && !frontier.empty(); ++level) {
        std::vector<Test> family;
        std::set<int> exclude = screened;
        for (int x : frontier) {
          screener.add_corr_tests(x, candidates_for(x, exclude), family, true);
          exclude.insert(x);  // each frontier pair is tested once
        }
        screened.insert(frontier.begin(), frontier.end());
        auto level_kept = screener.cap_partners(screener.filter(std::move(family)));
        add_tests(level_kept, pp);
        std::set<int> next;
        for (const auto& t : level_kept) {
          if (!screened.count(t.parent)) next.insert(t.parent);
          if (!screened.count(t.child)) next.insert(t.child);
        }
        frontier = std::move(next);
      }
    }
  }

  std::vector<int> forced;
  if (opts.mode == ScreenMode::phenotype && outcome) forced.push_back(*outcome);
  // A lone column is its own single-node network.
  if (p == 1 && forced.empty()) forced.push_back(0);
  auto full = ParentConstraints::from_pp(pp, indegree, forced);
  full.validate();
  bool any_edge = false;
  for (const auto& s : full.pp) any_edge |= !s.empty();
  if (!any_edge && p > 1)
    throw EmptyFeasSetError("no associations at this cutoff; the feasible set is empty (try a looser alpha or correlation cutoff)");

  result.columns = full.feas_set.members();
  std::vector<int> remap(np, -1);
  for (std::size_t k = 0; k < result.columns.size(); ++k) remap[static_cast<std::size_t>(result.columns[k])] = static_cast<int>(k);
  const std::size_t pr = result.columns.size();
  std::vector<NodeSubset> reduced(pr, NodeSubset(pr));
  for (std::size_t k = 0; k < pr; ++k)
    for (int j : full.pp[static_cast<std::size_t>(result.columns[k])]) reduced[k].set(remap[static_cast<std::size_t>(j)]);
  result.constraints = ParentConstraints::from_pp(std::move(reduced), indegree);
  result.constraints.feas_set = NodeSubset::full(pr);
  result.data = data.select(result.columns);
  if (outcome) {
    const int r = remap[static_cast<std::size_t>(*outcome)];
    if (r >= 0) result.outcome = r;
  }
  return result;
}

}  // namespace causnet::assoc

#include "causnet/numeric.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace causnet::numeric {

namespace {

struct CoxEval {
  double loglik = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;  // negative Hessian
};

// Rows sorted by decreasing time; ties share a risk set (Breslow).
class CoxProblem {
 public:
  CoxProblem(const Eigen::Ref<const Eigen::VectorXd>& time, const Eigen::Ref<const Eigen::VectorXi>& status,
             const Eigen::Ref<const Eigen::MatrixXd>& X)
      : X_(X.rowwise() - X.colwise().mean()) {
    const Eigen::Index n = time.size();
    if (status.size() != n || X.rows() != n) throw DomainError("cox_fit: time, status and design disagree on row count");
    if (n == 0) throw DomainError("cox_fit: no observations");
    bool any_event = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(time(i) > 0)) throw DomainError("cox_fit: survival times must be positive");
      if (status(i) != 0 && status(i) != 1) throw DomainError("cox_fit: status must be 0 or 1");
      any_event |= status(i) == 1;
    }
    if (!any_event) throw DomainError("cox_fit: at least one event is required");
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) { return time(a) > time(b); });
    time_ = time;
    status_ = status;
  }

  const Eigen::MatrixXd& design() const { return X_; }

  CoxEval evaluate(const Eigen::VectorXd& beta, bool derivatives) const {
    const Eigen::Index n = X_.rows(), k = X_.cols();
    Eigen::VectorXd eta = X_ * beta;
    const double shift = eta.size() ? eta.maxCoeff() : 0.0;
    CoxEval out;
    if (derivatives) {
      out.gradient = Eigen::VectorXd::Zero(k);
      out.information = Eigen::MatrixXd::Zero(k, k);
    }
    double s0 = 0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(k, k);
    std::size_t g = 0;
    const std::size_t nn = static_cast<std::size_t>(n);
    while (g < nn) {
      std::size_t end = g;
      const double t = time_(order_[g]);
      while (end < nn && time_(order_[end]) == t) {
        const Eigen::Index r = order_[end];
        const double w = std::exp(eta(r) - shift);
        s0 += w;
        if (derivatives) {
          s1.noalias() += w * X_.row(r).transpose();
          s2.noalias() += w * X_.row(r).transpose() * X_.row(r);
        }
        ++end;
      }
      const double log_s0 = std::log(s0) + shift;
      for (std::size_t q = g; q < end; ++q) {
        const Eigen::Index r = order_[q];
        if (status_(r) != 1) continue;
        out.loglik += eta(r) - log_s0;
        if (derivatives) {
          Eigen::VectorXd mean = s1 / s0;
          out.gradient += X_.row(r).transpose() - mean;
          out.information += s2 / s0 - mean * mean.transpose();
        }
      }
      g = end;
    }
    return out;
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd time_;
  Eigen::VectorXi status_;
  std::vector<Eigen::Index> order_;
};

}  // namespace

double cox_partial_loglik(const Eigen::Ref<const Eigen::VectorXd>& time, const Eigen::Ref<const Eigen::VectorXi>& status,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  CoxProblem prob(time, status, X);
  return prob.evaluate(beta, false).loglik;
}

FitResult<double> cox_fit(const Eigen::Ref<const Eigen::VectorXd>& time, const Eigen::Ref<const Eigen::VectorXi>& status,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, const CoxOptions& opts) {
  CoxProblem prob(time, status, X);
  const Eigen::Index k = X.cols();
  FitResult<double> fit;
  fit.n_params = static_cast<int>(k);
  fit.coefficients = Eigen::VectorXd::Zero(k);

  // Constant columns carry no information; their coefficient stays at zero.
  const Eigen::MatrixXd& Xc = prob.design();
  Eigen::VectorXd sd(k);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < k; ++j) {
    sd(j) = std::sqrt(Xc.col(j).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, Xc.rows() - 1)));
    if (sd(j) > 0) active.push_back(j);
  }

  CoxEval cur = prob.evaluate(fit.coefficients, true);
  fit.null_log_likelihood = cur.loglik;
  if (active.empty()) {
    fit.log_likelihood = cur.loglik;
    return fit;
  }

  const Eigen::Index m = static_cast<Eigen::Index>(active.size());
  for (int it = 1; it <= opts.max_iterations; ++it) {
    fit.iterations = it;
    Eigen::VectorXd g(m);
    Eigen::MatrixXd info(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      g(a) = cur.gradient(active[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b)
        info(a, b) = cur.information(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw ConvergenceError("cox_fit: singular information matrix", fit.coefficients);

    Eigen::VectorXd next = fit.coefficients;
    double scale = 1.0;
    CoxEval trial;
    for (int halving = 0; halving < 40; ++halving) {
      next = fit.coefficients;
      for (Eigen::Index a = 0; a < m; ++a) next(active[static_cast<std::size_t>(a)]) += scale * step(a);
      trial = prob.evaluate(next, true);
      if (trial.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) break;
      scale /= 2;
    }
    const double change = (next - fit.coefficients).cwiseAbs().maxCoeff();
    fit.coefficients = next;
    cur = std::move(trial);

    for (Eigen::Index j : active)
      if (std::abs(fit.coefficients(j)) * sd(j) > opts.separation_limit)
        throw NumericError("cox_fit: coefficient diverging, complete separation suspected");

    if (change < opts.tolerance) {
      fit.log_likelihood = cur.loglik;
      return fit;
    }
  }
  throw ConvergenceError("cox_fit: no convergence after " + std::to_string(opts.max_iterations) + " iterations",
                         fit.coefficients);
}

}  // namespace causnet::numeric

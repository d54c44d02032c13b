#pragma once

// Statistical kernels: least squares, t / chi-square tails, Cox partial
// likelihood and the log multivariate gamma function.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>

#include "causnet/errors.hpp"

namespace causnet::numeric {

template <typename Scalar = double>
struct FitResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  Scalar rss = 0;
  Scalar log_likelihood = 0;
  Scalar null_log_likelihood = 0;  ///< Cox only: partial likelihood at beta = 0
  int n_params = 0;
  bool rank_deficient = false;
  int iterations = 0;
};

/// Log-gamma that does not touch the global `signgam`.
template <std::floating_point Real>
Real log_gamma(Real x) {
#if defined(__GLIBC__)
  int sign = 0;
  if constexpr (std::same_as<Real, float>) return ::lgammaf_r(x, &sign);
  else if constexpr (std::same_as<Real, long double>) return ::lgammal_r(x, &sign);
  else return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

namespace detail {

inline constexpr int kMaxSeriesTerms = 10000;
inline constexpr double kRelTol = 1e-12;

// Modified Lentz evaluation of the incomplete beta continued fraction.
template <std::floating_point Real>
Real beta_cf(Real a, Real b, Real x) {
  const Real tiny = std::numeric_limits<Real>::min() / std::numeric_limits<Real>::epsilon();
  Real qab = a + b, qap = a + 1, qam = a - 1;
  Real c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  Real h = d;
  for (int m = 1; m <= kMaxSeriesTerms; ++m) {
    Real m2 = 2 * m;
    Real aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    Real del = d * c;
    h *= del;
    if (std::abs(del - 1) < Real(kRelTol)) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

// Lower regularized gamma P(a, x) by series, valid for x < a + 1.
template <std::floating_point Real>
Real gamma_p_series(Real a, Real x) {
  Real ap = a, sum = 1 / a, del = sum;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    ap += 1;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * Real(kRelTol))
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
  }
  throw NumericError("incomplete gamma series did not converge");
}

// Upper regularized gamma Q(a, x) by continued fraction, valid for x >= a + 1.
template <std::floating_point Real>
Real gamma_q_cf(Real a, Real x) {
  const Real tiny = std::numeric_limits<Real>::min() / std::numeric_limits<Real>::epsilon();
  Real b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
  for (int i = 1; i <= kMaxSeriesTerms; ++i) {
    Real an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    Real del = d * c;
    h *= del;
    if (std::abs(del - 1) < Real(kRelTol)) return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
  }
  throw NumericError("incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
template <std::floating_point Real>
Real incomplete_beta(Real a, Real b, Real x) {
  if (!(a > 0) || !(b > 0)) throw DomainError("incomplete_beta: a and b must be positive");
  if (x < 0 || x > 1) throw DomainError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0 || x == 1) return x;
  Real lbt = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) + b * std::log1p(-x);
  Real bt = std::exp(lbt);
  if (x < (a + 1) / (a + b + 2)) return bt * detail::beta_cf(a, b, x) / a;
  return 1 - bt * detail::beta_cf(b, a, 1 - x) / b;
}

/// Upper regularized incomplete gamma Q(a, x).
template <std::floating_point Real>
Real gamma_q(Real a, Real x) {
  if (!(a > 0)) throw DomainError("gamma_q: a must be positive");
  if (x < 0) throw DomainError("gamma_q: x must be nonnegative");
  if (x == 0) return 1;
  if (x < a + 1) return 1 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// P(T > t) for Student's t with `df` degrees of freedom.
template <std::floating_point Real>
Real student_t_sf(Real t, Real df) {
  if (!(df > 0)) throw DomainError("student_t_sf: df must be positive, got " + std::to_string(df));
  if (std::isnan(t)) throw DomainError("student_t_sf: t is NaN");
  if (std::isinf(t)) return t > 0 ? Real(0) : Real(1);
  Real x = df / (df + t * t);
  Real tail = Real(0.5) * incomplete_beta(df / 2, Real(0.5), x);
  return t >= 0 ? tail : 1 - tail;
}

/// P(X > x) for chi-square with `df` degrees of freedom.
template <std::floating_point Real>
Real chisq_sf(Real x, Real df) {
  if (!(df > 0)) throw DomainError("chisq_sf: df must be positive");
  if (x < 0) throw DomainError("chisq_sf: x must be nonnegative, got " + std::to_string(x));
  if (std::isinf(x)) return 0;
  return gamma_q(df / 2, x / 2);
}

/// log Gamma_p(a) = p(p-1)/4 log(pi) + sum_{j=1..p} log Gamma(a + (1-j)/2).
template <std::floating_point Real>
Real log_mvgamma(Real a, int p) {
  if (p < 1) throw DomainError("log_mvgamma: dimension must be positive");
  if (!(a > Real(p - 1) / 2))
    throw DomainError("log_mvgamma: need a > (p-1)/2, got a=" + std::to_string(a) + " p=" + std::to_string(p));
  Real s = Real(p) * Real(p - 1) / 4 * std::log(std::numbers::pi_v<Real>);
  for (int j = 1; j <= p; ++j) s += log_gamma(a + Real(1 - j) / 2);
  return s;
}

/// Ordinary least squares of y on the columns of X.
///
/// Rank-deficient designs fall back to the minimum-norm solution and set
/// `rank_deficient`. An exact fit reports rss = 0 and log_likelihood = +inf.
template <typename DerivedY, typename DerivedX>
FitResult<typename DerivedY::Scalar> least_squares(const Eigen::MatrixBase<DerivedY>& y,
                                                   const Eigen::MatrixBase<DerivedX>& X) {
  using Scalar = typename DerivedY::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = y.size();
  if (X.rows() != n) throw DomainError("least_squares: design has " + std::to_string(X.rows()) + " rows for " + std::to_string(n) + " responses");
  if (X.cols() >= n) throw DomainError("least_squares: need more rows than columns");

  FitResult<Scalar> fit;
  fit.n_params = static_cast<int>(X.cols()) + 1;
  const Matrix design = X;
  const Vector response = y;
  if (design.cols() == 0) {
    fit.coefficients.resize(0);
    fit.rss = response.squaredNorm();
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < design.cols()) {
      fit.rank_deficient = true;
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
      fit.coefficients = cod.solve(response);
    } else {
      fit.coefficients = qr.solve(response);
    }
    fit.rss = (response - design * fit.coefficients).squaredNorm();
  }
  const Scalar scale = std::max<Scalar>(response.squaredNorm(), std::numeric_limits<Scalar>::min());
  if (fit.rss <= Scalar(1e-20) * scale) {
    fit.rss = 0;
    fit.log_likelihood = std::numeric_limits<Scalar>::infinity();
  } else {
    const Scalar nn = static_cast<Scalar>(n);
    fit.log_likelihood = -nn / 2 * (std::log(2 * std::numbers::pi_v<Scalar> * fit.rss / nn) + 1);
  }
  return fit;
}

/// Newton-Raphson did not converge; carries the last iterate.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last) : NumericError(what), last_iterate(std::move(last)) {}
  Eigen::VectorXd last_iterate;
};

struct CoxOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;        ///< on max |delta beta|
  double separation_limit = 40;   ///< |beta_j| * sd(x_j) above this is treated as separation
};

/// Cox proportional-hazards fit (Breslow ties) by Newton-Raphson with step halving.
/// `log_likelihood` is the partial log-likelihood at the optimum and
/// `null_log_likelihood` the value at beta = 0.
FitResult<double> cox_fit(const Eigen::Ref<const Eigen::VectorXd>& time, const Eigen::Ref<const Eigen::VectorXi>& status,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, const CoxOptions& opts = {});

/// Breslow partial log-likelihood at a given coefficient vector.
double cox_partial_loglik(const Eigen::Ref<const Eigen::VectorXd>& time, const Eigen::Ref<const Eigen::VectorXi>& status,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& beta);

}  // namespace causnet::numeric

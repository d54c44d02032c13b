#include <doctest.h>

#include <cmath>
#include <random>

#include "causnet/numeric.hpp"
#include "causnet/scoring.hpp"
#include "support/fixtures.hpp"

using namespace causnet;
using namespace causnet::scoring;
using doctest::Approx;

namespace {

// Log marginal likelihood of one Gaussian column under a Normal-Gamma prior:
// precision ~ Gamma(alpha_w / 2, rate t / 2), mean | precision ~ N(nu, 1 / (alpha_mu precision)).
// The mean is integrated analytically and the precision by quadrature over log precision.
double normal_gamma_log_marginal(const Eigen::VectorXd& x, double alpha_mu, double alpha_w, double t, double nu) {
  const double N = static_cast<double>(x.size());
  const double mean = x.mean();
  const double S = (x.array() - mean).square().sum();
  const double R = S + N * alpha_mu / (N + alpha_mu) * (mean - nu) * (mean - nu);
  auto log_integrand = [&](double u) {
    const double lambda = std::exp(u);
    const double lik = N / 2 * std::log(lambda / (2 * std::numbers::pi)) + 0.5 * std::log(alpha_mu / (alpha_mu + N)) -
                       lambda * R / 2;
    const double prior = alpha_w / 2 * std::log(t / 2) - std::lgamma(alpha_w / 2) + (alpha_w / 2 - 1) * u - lambda * t / 2;
    return lik + prior + u;  // du = dlambda / lambda
  };
  const double centre = std::log((N + alpha_w) / (R + t));
  const double width = 40 * std::sqrt(2 / (N + alpha_w));
  const double peak = log_integrand(centre);
  const double mass =
      testing::simpson([&](double u) { return std::exp(log_integrand(u) - peak); }, centre - width, centre + width, 20000);
  return peak + std::log(mass);
}

Dataset standardized_column(int n, std::mt19937_64& rng) {
  Eigen::MatrixXd m = testing::gaussian_matrix(n, 1, rng);
  m.col(0).array() -= m.col(0).mean();
  m.col(0) /= std::sqrt(m.col(0).squaredNorm() / n);
  return testing::continuous_dataset(m);
}

}  // namespace

TEST_CASE("Gaussian BIC of an empty parent set") {
  std::mt19937_64 rng(1);
  Dataset d = standardized_column(100, rng);
  // Unit residual variance: LL = -n/2 (ln 2 pi + 1), two parameters.
  const double expect = -50 * (std::log(2 * std::numbers::pi) + 1) - std::log(100.0);
  CHECK(bic_gaussian(d, 0, NodeSubset(1)) == Approx(expect).epsilon(1e-12));
  CHECK(expect == Approx(-146.49902350645536).epsilon(1e-14));
}

TEST_CASE("Gaussian BIC penalty grows by half ln n per parameter") {
  std::mt19937_64 rng(2);
  for (int n : {50, 200, 1000}) {
    Eigen::MatrixXd m = testing::gaussian_matrix(n, 3, rng);
    m.col(1) += m.col(0);
    // Column 2 is made orthogonal to the intercept, column 0 and column 1, so
    // adding it leaves the fit unchanged.
    Eigen::MatrixXd basis(n, 3);
    basis << Eigen::VectorXd::Ones(n), m.col(0), m.col(1);
    const Eigen::VectorXd c = m.col(2);
    m.col(2) = c - basis * (basis.transpose() * basis).ldlt().solve(basis.transpose() * c);
    Dataset d = testing::continuous_dataset(m);
    const double base = bic_gaussian(d, 1, NodeSubset(3, {0}));
    const double extra = bic_gaussian(d, 1, NodeSubset(3, {0, 2}));
    CHECK(base - extra == Approx(0.5 * std::log(static_cast<double>(n))).epsilon(1e-9));
  }
}

TEST_CASE("Gaussian BIC against a direct formula") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd m = testing::gaussian_matrix(80, 3, rng);
  m.col(2) += 0.7 * m.col(0) - 0.3 * m.col(1);
  Dataset d = testing::continuous_dataset(m);
  Eigen::MatrixXd X(80, 3);
  X << Eigen::VectorXd::Ones(80), m.col(0), m.col(1);
  const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * m.col(2));
  const double rss = (m.col(2) - X * beta).squaredNorm();
  const double ll = -40 * (std::log(2 * std::numbers::pi * rss / 80) + 1);
  CHECK(bic_gaussian(d, 2, NodeSubset(3, {0, 1})) == Approx(ll - 2 * std::log(80.0)).epsilon(1e-12));

  // An exact copy is a degenerate fit.
  m.col(1) = m.col(0);
  CHECK(bic_gaussian(testing::continuous_dataset(m), 1, NodeSubset(3, {0})) == kNegInf);
  CHECK_THROWS_AS(bic_gaussian(d, 0, NodeSubset(3, {0})), StructuralError);
  CHECK_THROWS_AS(bic_gaussian(d, 0, NodeSubset(4)), StructuralError);
}

TEST_CASE("independent parent usually lowers the Gaussian BIC") {
  std::mt19937_64 rng(4);
  int lower = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Dataset d = testing::continuous_dataset(testing::gaussian_matrix(200, 2, rng));
    lower += bic_gaussian(d, 1, NodeSubset(2, {0})) < bic_gaussian(d, 1, NodeSubset(2));
  }
  CHECK(lower >= 90);
}

TEST_CASE("categorical BIC") {
  // x: levels 0,0,1,1,2,2 repeated; y copies x.
  const int n = 60;
  Eigen::MatrixXd v(n, 3);
  std::mt19937_64 rng(5);
  for (int i = 0; i < n; ++i) {
    v(i, 0) = (i / 2) % 3;
    v(i, 1) = v(i, 0);
    v(i, 2) = static_cast<double>(rng() % 2);
  }
  std::vector<Column> cols{{"x", ColumnKind::categorical, 3}, {"y", ColumnKind::categorical, 3}, {"z", ColumnKind::categorical, 2}};
  Dataset d(cols, v);
  // Uniform marginal over 3 levels.
  CHECK(bic_categorical(d, 1, NodeSubset(3)) == Approx(n * std::log(1.0 / 3) - 1.0 * std::log(n)).epsilon(1e-12));
  // A deterministic parent leaves zero log-likelihood; (r-1) q = 6 parameters.
  CHECK(bic_categorical(d, 1, NodeSubset(3, {0})) == Approx(-3.0 * std::log(n)).epsilon(1e-12));
  // Counting oracle for the binary parent.
  double ll = 0;
  for (int zl = 0; zl < 2; ++zl) {
    double nij = 0;
    double nijk[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i)
      if (v(i, 2) == zl) ++nij, ++nijk[static_cast<int>(v(i, 1))];
    for (double c : nijk)
      if (c > 0) ll += c * std::log(c / nij);
  }
  CHECK(bic_categorical(d, 1, NodeSubset(3, {2})) == Approx(ll - 2.0 * std::log(n)).epsilon(1e-12));

  Eigen::MatrixXd mixed = v;
  std::vector<Column> mixed_cols{{"x"}, {"y", ColumnKind::categorical, 3}, {"z", ColumnKind::categorical, 2}};
  Dataset md(mixed_cols, mixed);
  CHECK_THROWS_AS(bic_categorical(md, 1, NodeSubset(3, {0})), InputError);
  CHECK_THROWS_AS(bic_categorical(md, 0, NodeSubset(3)), InputError);
  LocalScorer scorer(md, ScoreConfig{});
  CHECK(scorer(1, NodeSubset(3, {0})) == kNegInf);
}

TEST_CASE("BGe matches a one-dimensional quadrature oracle") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd m = testing::gaussian_matrix(20, 1, rng);
    m.col(0) = 1.5 * m.col(0).array() + 0.4;
    Dataset d = testing::continuous_dataset(m);
    for (double am : {0.5, 1.0, 3.0}) {
      BgeParams prm;
      prm.alpha_mu = am;
      prm.prior_mean = Eigen::VectorXd::Constant(1, 0.1);
      BgeScorer s(d, prm);
      const double oracle = normal_gamma_log_marginal(m.col(0), am, s.alpha_w(), s.t(), 0.1);
      CHECK(s.log_marginal(NodeSubset(1, {0})) == Approx(oracle).epsilon(1e-5));
      CHECK(s.local(0, NodeSubset(1)) == Approx(oracle).epsilon(1e-5));
    }
  }
}

TEST_CASE("BGe default prior") {
  std::mt19937_64 rng(7);
  Dataset d = testing::continuous_dataset(testing::gaussian_matrix(30, 4, rng));
  BgeScorer s(d, BgeParams{});
  CHECK(s.alpha_w() == 6.0);
  CHECK(s.t() == Approx(0.5));
  CHECK(s.log_marginal(NodeSubset(4)) == 0.0);
  BgeParams bad;
  bad.alpha_w = 5.0;
  CHECK_THROWS_AS(BgeScorer(d, bad), InputError);
  bad = BgeParams{};
  bad.alpha_mu = 0;
  CHECK_THROWS_AS(BgeScorer(d, bad), InputError);
}

TEST_CASE("BGe is score equivalent") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd m = testing::random_network_data(50, 3, 0.7, rng);
    Dataset d = testing::continuous_dataset(m);
    BgeScorer s(d, BgeParams{});
    auto L = [&](int v, std::initializer_list<int> pa) { return s.local(v, NodeSubset(3, pa)); };
    // Two nodes: 0 -> 1 versus 1 -> 0.
    CHECK(L(0, {}) + L(1, {0}) == Approx(L(1, {}) + L(0, {1})).epsilon(1e-8));
    // Three-node chains and fork in one Markov class.
    const double chain = L(0, {}) + L(1, {0}) + L(2, {1});
    const double reversed = L(2, {}) + L(1, {2}) + L(0, {1});
    const double fork = L(1, {}) + L(0, {1}) + L(2, {1});
    CHECK(chain == Approx(reversed).epsilon(1e-8));
    CHECK(chain == Approx(fork).epsilon(1e-8));
    // Complete DAGs under different orderings.
    CHECK(L(0, {}) + L(1, {0}) + L(2, {0, 1}) == Approx(L(2, {}) + L(0, {2}) + L(1, {0, 2})).epsilon(1e-8));
  }
}

TEST_CASE("BGe prefers the true edge between duplicated columns") {
  std::mt19937_64 rng(9);
  double prev_margin = 0;
  for (int n : {50, 200, 800}) {
    Eigen::MatrixXd m = testing::gaussian_matrix(n, 2, rng);
    m.col(1) = m.col(0) + 0.05 * m.col(1);
    Dataset d = testing::continuous_dataset(m);
    BgeScorer s(d, BgeParams{});
    const double edge = s.local(0, NodeSubset(2)) + s.local(1, NodeSubset(2, {0}));
    const double none = s.local(0, NodeSubset(2)) + s.local(1, NodeSubset(2));
    CHECK(edge > none);
    CHECK(edge - none > prev_margin);
    prev_margin = edge - none;
  }
}

TEST_CASE("Cox BIC") {
  std::mt19937_64 rng(10);
  int better = 0, noise_rejected = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Dataset d = testing::survival_dataset(500, 1, 0.7, rng);
    const double none = cox_bic(d, 2, NodeSubset(3));
    better += cox_bic(d, 2, NodeSubset(3, {0})) > none;
    noise_rejected += cox_bic(d, 2, NodeSubset(3, {1})) < none;
  }
  CHECK(better >= 95);
  CHECK(noise_rejected >= 80);

  Dataset d = testing::survival_dataset(100, 1, 0.5, rng);
  const auto fit = numeric::cox_fit(d.col(2), d.status(), d.values().col(0));
  CHECK(cox_bic(d, 2, NodeSubset(3)) == Approx(fit.null_log_likelihood));
  CHECK(cox_bic(d, 2, NodeSubset(3, {0})) == Approx(fit.log_likelihood - 0.5 * std::log(100.0)));
  CHECK_THROWS_AS(cox_bic(d, 0, NodeSubset(3)), InputError);
  CHECK_THROWS_AS(cox_bic(d, 0, NodeSubset(3, {2})), StructuralError);
}

TEST_CASE("local score table holds every admissible parent set") {
  std::mt19937_64 rng(11);
  Dataset d = testing::continuous_dataset(testing::gaussian_matrix(40, 4, rng));
  auto c = ParentConstraints::from_pp(testing::lattice_example_pp(), 2);
  auto table = compute_local_scores(d, c, ScoreConfig{});
  const auto& n0 = table.node(0);
  CHECK(n0.keys.size() == 4);
  CHECK(n0.keys == std::vector<NodeSubset>{NodeSubset(4), NodeSubset(4, {1}), NodeSubset(4, {3}), NodeSubset(4, {1, 3})});
  CHECK(table.size() == 4 + 4 + 2 + 2);
  for (std::size_t k = 0; k < n0.keys.size(); ++k) CHECK(n0.scores[k] == bic_gaussian(d, 0, n0.keys[k]));
  CHECK_THROWS_AS(table.at(0, NodeSubset(4, {2})), StructuralError);
  CHECK_FALSE(table.find(0, NodeSubset(4, {2})).has_value());

  for (int rep = 0; rep < 30; ++rep) {
    const int p = 2 + static_cast<int>(rng() % 7);
    const int indegree = static_cast<int>(rng() % 4);
    auto cc = ParentConstraints::from_pp(testing::random_pp(p, 0.5, rng), indegree);
    Dataset dd = testing::continuous_dataset(testing::gaussian_matrix(30, p, rng));
    auto t = compute_local_scores(dd, cc, ScoreConfig{});
    for (int i = 0; i < p; ++i) {
      const auto expect = cc.feas_set.test(i) ? testing::binomial_sum(static_cast<int>(cc.pp[static_cast<std::size_t>(i)].count()), indegree) : 0;
      CHECK(t.node(i).keys.size() == expect);
      for (const auto& k : t.node(i).keys) {
        CHECK(k.is_subset_of(cc.pp[static_cast<std::size_t>(i)]));
        CHECK(k.count() <= static_cast<std::size_t>(indegree));
      }
    }
  }
}

TEST_CASE("local scores are identical across thread counts") {
  std::mt19937_64 rng(12);
  Dataset d = testing::continuous_dataset(testing::random_network_data(100, 6, 0.4, rng));
  auto c = ParentConstraints::complete(6, 3);
  for (auto family : {ScoreFamily::bic, ScoreFamily::bge}) {
    ScoreConfig one{family}, four{family};
    four.threads = 4;
    auto a = compute_local_scores(d, c, one), b = compute_local_scores(d, c, four);
    for (int i = 0; i < 6; ++i) {
      CHECK(a.node(i).keys == b.node(i).keys);
      CHECK(a.node(i).scores == b.node(i).scores);
    }
  }
}

TEST_CASE("subsets in size then lexicographic order") {
  auto s = subsets_up_to(NodeSubset(5, {0, 2, 4}), 2);
  std::vector<std::string> got;
  for (const auto& x : s) got.push_back(x.to_string());
  CHECK(got == std::vector<std::string>{"{}", "{0}", "{2}", "{4}", "{0,2}", "{0,4}", "{2,4}"});
  CHECK(subsets_up_to(NodeSubset(5, {1, 3}), 0).size() == 1);
}

#include "causnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

namespace causnet::simulate {

const char* to_string(Role role) {
  switch (role) {
    case Role::independent: return "independent";
    case Role::source: return "source";
    case Role::intermediate: return "intermediate";
    case Role::sink: return "sink";
  }
  return "?";
}

SimSpec SimSpec::with_default_roles(int p, int n, std::uint64_t seed) {
  SimSpec s;
  s.p = p;
  s.n = n;
  s.seed = seed;
  s.p0 = p / 5;
  const int rest = p - s.p0;
  s.p1 = s.p2 = s.p3 = rest / 3;
  if (rest % 3 >= 1) ++s.p1;
  if (rest % 3 >= 2) ++s.p2;
  return s;
}

void SimSpec::validate() const {
  if (p < 1) throw DomainError("simulation spec: p must be positive");
  if (p0 < 0 || p1 < 0 || p2 < 0 || p3 < 0) throw DomainError("simulation spec: role counts must be nonnegative");
  if (p0 + p1 + p2 + p3 != p)
    throw DomainError("simulation spec: role counts sum to " + std::to_string(p0 + p1 + p2 + p3) + ", expected p = " + std::to_string(p));
  if (n < 10) throw DomainError("simulation spec: n must be at least 10");
  if (!(effect_min >= 0) || !(effect_max >= effect_min)) throw DomainError("simulation spec: need 0 <= effect_min <= effect_max");
  if (!(noise_sd > 0)) throw DomainError("simulation spec: noise_sd must be positive");
  if (max_parents < 1) throw DomainError("simulation spec: max_parents must be at least 1");
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Parents only come from earlier positions of `order`, so the result is acyclic.
bool draw_parents(Rng& rng, const std::vector<int>& order, const std::vector<Role>& roles, int max_parents,
                  std::vector<std::vector<int>>& parents) {
  const std::size_t p = roles.size();
  parents.assign(p, {});
  std::vector<int> children(p, 0);
  std::vector<int> uppers;  // sources and intermediates seen so far, in order
  for (int v : order) {
    if (roles[static_cast<std::size_t>(v)] != Role::source) {
      std::vector<int> cand = uppers;
      const int k = uniform_int(rng, 1, std::min<int>(max_parents, static_cast<int>(cand.size())));
      std::shuffle(cand.begin(), cand.end(), rng);
      cand.resize(static_cast<std::size_t>(k));
      for (int u : cand) ++children[static_cast<std::size_t>(u)];
      parents[static_cast<std::size_t>(v)] = std::move(cand);
    }
    if (roles[static_cast<std::size_t>(v)] != Role::sink) uppers.push_back(v);
  }

  // Every source and intermediate needs a child: attach it to a later node with
  // room, or take the place of a parent that has other children.
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int u = order[pos];
    if (roles[static_cast<std::size_t>(u)] == Role::sink || children[static_cast<std::size_t>(u)] > 0) continue;
    std::vector<int> later(order.begin() + static_cast<std::ptrdiff_t>(pos) + 1, order.end());
    std::shuffle(later.begin(), later.end(), rng);
    bool fixed = false;
    for (int c : later) {
      if (roles[static_cast<std::size_t>(c)] == Role::source) continue;  // sources stay parentless
      auto& pa = parents[static_cast<std::size_t>(c)];
      if (static_cast<int>(pa.size()) < max_parents) {
        pa.push_back(u);
        fixed = true;
        break;
      }
    }
    for (std::size_t k = 0; !fixed && k < later.size(); ++k) {
      for (int& q : parents[static_cast<std::size_t>(later[k])]) {
        if (children[static_cast<std::size_t>(q)] < 2) continue;
        --children[static_cast<std::size_t>(q)];
        q = u;
        fixed = true;
        break;
      }
    }
    if (!fixed) return false;
    ++children[static_cast<std::size_t>(u)];
  }
  return true;
}

}  // namespace

TruthGraph simulate_dag(const SimSpec& spec) {
  spec.validate();
  const int connected = spec.p1 + spec.p2 + spec.p3;
  if (connected > 0 && spec.p1 == 0) throw DomainError("simulation spec: intermediates and sinks need at least one source");
  if (spec.p1 > 0 && spec.p2 + spec.p3 == 0) throw DomainError("simulation spec: sources need an intermediate or sink child");
  if (spec.p2 > 0 && spec.p3 == 0) throw DomainError("simulation spec: intermediates need at least one sink");
  if (static_cast<long long>(spec.p2 + spec.p3) * spec.max_parents < spec.p1 + spec.p2)
    throw DomainError("simulation spec: too few parent slots to give every source and intermediate a child");

  Rng rng(spec.seed);
  const std::size_t p = static_cast<std::size_t>(spec.p);
  std::vector<int> shuffled(p);
  for (std::size_t i = 0; i < p; ++i) shuffled[i] = static_cast<int>(i);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  TruthGraph g;
  g.roles.assign(p, Role::independent);
  std::vector<int> order;  // sources, intermediates, sinks
  for (int k = spec.p0; k < spec.p; ++k) {
    const int v = shuffled[static_cast<std::size_t>(k)];
    const int r = k - spec.p0;
    g.roles[static_cast<std::size_t>(v)] = r < spec.p1 ? Role::source : r < spec.p1 + spec.p2 ? Role::intermediate : Role::sink;
    order.push_back(v);
  }

  std::vector<std::vector<int>> parents;
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) ok = draw_parents(rng, order, g.roles, spec.max_parents, parents);
  if (!ok) throw DomainError("simulation spec: could not realise the requested roles");

  g.dag.names.reserve(p);
  for (std::size_t i = 0; i < p; ++i) g.dag.names.push_back("X" + std::to_string(i + 1));
  g.dag.parents.assign(p, NodeSubset(p));
  for (std::size_t i = 0; i < p; ++i)
    for (int u : parents[i]) g.dag.parents[i].set(u);
  return g;
}

Dataset simulate_data(const TruthGraph& truth, const SimSpec& spec) {
  spec.validate();
  const std::size_t p = truth.dag.size();
  if (static_cast<int>(p) != spec.p) throw DomainError("simulate_data: graph and spec disagree on p");
  const DagCheck check = validate_dag(truth.dag.parents);
  if (!check.acyclic) throw StructuralError("simulate_data: truth graph is cyclic");

  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32), 0x5eedu};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(spec.effect_min, spec.effect_max);
  std::bernoulli_distribution negative(0.5);

  const Eigen::Index n = spec.n;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p));
  for (int v : check.order) {
    const NodeSubset& pa = truth.dag.parents[static_cast<std::size_t>(v)];
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    for (int u : pa) {
      const double w = spec.effect_min == spec.effect_max ? spec.effect_min : magnitude(rng);
      col += (negative(rng) ? -w : w) * x.col(u);
    }
    const double sd = pa.empty() ? 1.0 : spec.noise_sd;
    for (Eigen::Index i = 0; i < n; ++i) col(i) += sd * normal(rng);
    x.col(v) = col;
  }

  std::vector<Column> cols;
  for (const auto& name : truth.dag.names) cols.push_back(Column{name, ColumnKind::continuous, 0});
  return Dataset(std::move(cols), std::move(x));
}

SurvivalSample simulate_survival(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                 double baseline_rate, double censor_max, std::uint64_t seed) {
  if (X.cols() != beta.size()) throw DomainError("simulate_survival: X and beta disagree on dimension");
  if (!(baseline_rate > 0) || !(censor_max > 0)) throw DomainError("simulate_survival: rates must be positive");
  Rng rng(seed);
  std::exponential_distribution<double> unit(1.0);
  std::uniform_real_distribution<double> censor(0.0, censor_max);
  SurvivalSample s;
  s.time.resize(X.rows());
  s.status.resize(X.rows());
  const Eigen::VectorXd eta = X * beta;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double t = unit(rng) / (baseline_rate * std::exp(eta(i)));
    const double c = censor(rng);
    s.time(i) = std::min(t, c);
    s.status(i) = t <= c ? 1 : 0;
  }
  return s;
}

std::string spec_to_json(const SimSpec& spec) {
  nlohmann::ordered_json j;
  j["p"] = spec.p;
  j["p0"] = spec.p0;
  j["p1"] = spec.p1;
  j["p2"] = spec.p2;
  j["p3"] = spec.p3;
  j["n"] = spec.n;
  j["effect_min"] = spec.effect_min;
  j["effect_max"] = spec.effect_max;
  j["noise_sd"] = spec.noise_sd;
  j["max_parents"] = spec.max_parents;
  j["seed"] = spec.seed;
  return j.dump(2);
}

SimSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("simulation spec JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("simulation spec JSON: expected an object");
  SimSpec s;
  try {
    s.p = j.value("p", s.p);
    s.n = j.value("n", s.n);
    s.seed = j.value("seed", s.seed);
    if (!j.contains("p0") && !j.contains("p1") && !j.contains("p2") && !j.contains("p3")) {
      s = SimSpec::with_default_roles(s.p, s.n, s.seed);
    } else {
      s.p0 = j.value("p0", 0);
      s.p1 = j.value("p1", 0);
      s.p2 = j.value("p2", 0);
      s.p3 = j.value("p3", 0);
    }
    s.effect_min = j.value("effect_min", s.effect_min);
    s.effect_max = j.value("effect_max", s.effect_max);
    if (j.contains("effect_size")) s.effect_min = s.effect_max = j["effect_size"].get<double>();
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.max_parents = j.value("max_parents", s.max_parents);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("simulation spec JSON: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace causnet::simulate

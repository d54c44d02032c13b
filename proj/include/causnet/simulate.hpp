#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "causnet/core.hpp"

namespace causnet::simulate {

enum class Role { independent, source, intermediate, sink };

const char* to_string(Role role);

/// Random linear-Gaussian network specification.
struct SimSpec {
  int p = 10;
  int p0 = 0;  ///< isolated nodes
  int p1 = 0;  ///< sources: children only
  int p2 = 0;  ///< intermediates: parents and children
  int p3 = 0;  ///< sinks: parents only
  int n = 500;
  double effect_min = 0.5;  ///< |effect| ~ U[effect_min, effect_max] with a random sign
  double effect_max = 1.5;
  double noise_sd = 1.0;
  int max_parents = 2;
  std::uint64_t seed = 1;

  /// p0 = 20% of p (rounded down), the rest split evenly, remainder going to
  /// sources first, then intermediates.
  static SimSpec with_default_roles(int p, int n, std::uint64_t seed);

  /// Throws DomainError when counts are negative, do not sum to p, n < 10,
  /// or the effect/noise/max_parents settings are out of range.
  void validate() const;
};

struct TruthGraph {
  Dag dag;
  std::vector<Role> roles;
};

/// Random DAG with the requested roles. Parents are drawn from nodes earlier
/// in a random ordering that lists sources, then intermediates, then sinks.
/// Throws DomainError when the roles cannot be realised.
TruthGraph simulate_dag(const SimSpec& spec);

/// Continuous N x p data generated in topological order of `truth`.
Dataset simulate_data(const TruthGraph& truth, const SimSpec& spec);

/// Right-censored exponential survival times with log-hazard X * beta and
/// independent U[0, censor_max] censoring.
struct SurvivalSample {
  Eigen::VectorXd time;
  Eigen::VectorXi status;  ///< 1 = event, 0 = censored
};

SurvivalSample simulate_survival(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                 double baseline_rate, double censor_max, std::uint64_t seed);

std::string spec_to_json(const SimSpec& spec);
SimSpec spec_from_json(const std::string& text);

}  // namespace causnet::simulate

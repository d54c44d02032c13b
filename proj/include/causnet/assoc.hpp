#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causnet/core.hpp"

namespace causnet::assoc {

enum class ScreenMode { all_pairs, phenotype };

/// Possible-parent sets supplied by the user, by column name.
using NamedParentSets = std::map<std::string, std::vector<std::string>>;

struct ScreenOptions {
  ScreenMode mode = ScreenMode::all_pairs;
  int levels = 2;                     ///< phenotype mode: 2 or 3 ancestor levels
  double alpha = 0.05;                ///< BH-adjusted p-value cutoff
  std::optional<double> corr_cutoff;  ///< |r| cutoff; replaces the FDR filter for correlation tests
  std::optional<std::string> outcome;
  std::optional<NamedParentSets> user_pp;  ///< skips screening entirely
  std::optional<int> top_k;                ///< phenotype mode: keep the k most significant outcome parents
  std::optional<int> max_pp;               ///< keep only each node's max_pp strongest partners
  int threads = 1;
};

/// Sample Pearson correlation. Throws DomainError for constant or short inputs.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of the t test on r with n - 2 degrees of freedom.
double corr_p_value(double r, Eigen::Index n);

/// corr_test(x, y): two-sided p-value for zero correlation.
double corr_test(std::span<const double> x, std::span<const double> y);

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> bh_adjust(std::span<const double> p_values);

/// Likelihood-ratio p-value of a univariate Cox model per candidate column.
/// Failed fits yield p = 1 and a message in `warnings`.
std::vector<double> cox_screen(const Dataset& data, int outcome, const std::vector<int>& candidates,
                               std::vector<std::string>* warnings = nullptr);

struct ScreenResult {
  ParentConstraints constraints;  ///< over `data` column indices; feas_set is full
  Dataset data;                   ///< reduced to the feasible set
  std::vector<int> columns;       ///< original column index of each reduced column
  std::optional<int> outcome;     ///< reduced index of the outcome, if any
  std::vector<std::string> warnings;
};

/// Marginal-association screening: possible parents, possible offspring,
/// feasible set and the reduced dataset.
ScreenResult build_constraints(const Dataset& data, const ScreenOptions& opts, int indegree);

}  // namespace causnet::assoc

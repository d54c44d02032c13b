#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "causnet/core.hpp"

namespace causnet::metrics {

enum class EdgeMode { directed, undirected };

struct EdgeConfusion {
  std::size_t tp = 0, fp = 0, fn = 0;
  EdgeMode mode = EdgeMode::directed;
};

/// Edge counts of `predicted` against `truth`. A reversed edge is an FP and
/// an FN in directed mode and a TP in undirected mode.
EdgeConfusion confusion(const std::vector<NodeSubset>& predicted, const std::vector<NodeSubset>& truth, EdgeMode mode);
EdgeConfusion confusion(const Network& predicted, const Dag& truth, EdgeMode mode);
EdgeConfusion confusion(const Dag& predicted, const Dag& truth, EdgeMode mode);

/// FP / (FP + TP); zero without predictions.
double fdr(const EdgeConfusion& c) noexcept;
/// FP + FN.
std::size_t hamming(const EdgeConfusion& c) noexcept;

double fdr(const Network& predicted, const Dag& truth, EdgeMode mode);
std::size_t hamming(const Network& predicted, const Dag& truth, EdgeMode mode);

/// Re-indexes `predicted` onto the node order of `reference`; throws InputError
/// unless both name the same nodes.
Dag align(const Dag& predicted, const Dag& reference);

struct EdgeMetrics {
  double fdr_directed = 0, fdr_undirected = 0;
  std::size_t hamming_directed = 0, hamming_undirected = 0;
};

EdgeMetrics evaluate(const std::vector<NodeSubset>& predicted, const std::vector<NodeSubset>& truth);

struct BenchRow {
  int p = 0;
  int n = 0;
  int replicate = 0;
  std::string score_family;
  EdgeMetrics metrics;
  double runtime_ms = 0;
};

/// Mean and sample standard deviation of each metric over one (p, N, family) cell.
struct CellSummary {
  int p = 0, n = 0;
  std::string score_family;
  std::size_t replicates = 0;
  double mean_fdr_directed = 0, sd_fdr_directed = 0;
  double mean_fdr_undirected = 0, sd_fdr_undirected = 0;
  double mean_hamming_directed = 0, sd_hamming_directed = 0;
  double mean_hamming_undirected = 0, sd_hamming_undirected = 0;
  double mean_runtime_ms = 0, sd_runtime_ms = 0;
};

/// Cells in order of first appearance.
std::vector<CellSummary> summarize(const std::vector<BenchRow>& rows);

void write_bench_header(std::ostream& os);
void write_bench_row(std::ostream& os, const BenchRow& row, bool with_runtime = true);
void write_summary(std::ostream& os, const std::vector<CellSummary>& cells, bool with_runtime = true);

}  // namespace causnet::metrics

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "causnet/engine.hpp"
#include "causnet/metrics.hpp"
#include "causnet/simulate.hpp"

namespace causnet::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kInputError = 2,
  kEmptyFeasSet = 3,
  kNumericFailure = 4,
  kSearchLimit = 5,
};

/// Maps the exception in flight to an exit code and writes its message to `err`.
int report_exception(std::ostream& err);

struct LearnConfig {
  std::string data_path;
  std::optional<std::string> schema_path;
  std::optional<std::string> pp_path;
  std::string out_dir;
  engine::LearnOptions options;
  std::optional<std::string> trace_path;   ///< reachable-subset lattice JSON
  std::optional<std::string> scores_path;  ///< local score table JSON
  bool timings = true;
};

struct LearnSummary {
  std::size_t networks = 0;
  std::size_t feas_set = 0;
  double best_score = 0;
};

/// Writes networks.json, network.dot (network_<k>.dot for further optima),
/// edges.csv (first network over every input column) and report.json.
LearnSummary cmd_learn(const LearnConfig& cfg);

struct SimulateConfig {
  simulate::SimSpec spec;
  std::string data_path;
  std::string truth_path;
  std::optional<std::string> spec_out;
};

void cmd_simulate(const SimulateConfig& cfg);

struct EvalConfig {
  std::string predicted_path;  ///< edge list CSV, or networks JSON (first network)
  std::string truth_path;
  std::optional<std::string> out_path;  ///< stdout when absent
};

void cmd_eval(const EvalConfig& cfg, std::ostream& out);

struct BenchConfig {
  std::vector<int> ps{10, 20, 40, 50, 60, 80, 100};
  std::vector<int> ns{500, 1000, 2000};
  int replicates = 20;
  std::uint64_t seed = 1;
  double independent_fraction = 0.2;
  int max_parents = 2;
  double effect_min = 0.5, effect_max = 1.5, noise_sd = 1.0;
  engine::LearnOptions options;
  int threads = 1;  ///< replicates in flight
  std::optional<std::string> out_path;
  std::optional<std::string> summary_path;
  bool timings = true;
};

struct BenchOutcome {
  std::vector<metrics::BenchRow> rows;
  std::size_t failures = 0;
};

/// simulate -> learn -> eval per replicate. Failed replicates are logged to
/// `log` and skipped. In phenotype mode the outcome is the sink with the most
/// ancestors in each truth graph.
BenchOutcome cmd_bench(const BenchConfig& cfg, std::ostream& rows_out, std::ostream& log);

/// Seed of one replicate, mixed from the base seed and the cell coordinates.
std::uint64_t replicate_seed(std::uint64_t base, int p, int n, int replicate);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace causnet::cli

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "causnet/assoc.hpp"
#include "causnet/core.hpp"
#include "causnet/engine.hpp"
#include "causnet/scoring.hpp"

namespace causnet::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, header required, double-quoted fields with "" escapes,
/// LF or CRLF line ends. Throws InputError on ragged rows.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Typed dataset from a CSV table and an optional schema:
///   {"age": "continuous", "stage": "categorical",
///    "os": {"kind": "survival", "time": "os_time", "status": "os_event"}}
/// Unlisted columns are inferred: non-numeric or 2..10 distinct integers are
/// categorical, anything else continuous. A survival entry merges its time and
/// status columns into one column placed where the time column was.
Dataset to_dataset(const CsvTable& table, const std::optional<std::string>& schema_json = std::nullopt);
Dataset load_dataset(const std::string& csv_path, const std::optional<std::string>& schema_path = std::nullopt);

/// Continuous columns only; values printed with round-trip precision.
void write_dataset_csv(std::ostream& os, const Dataset& data);

/// {"child": ["parent", ...], ...}
assoc::NamedParentSets parse_pp_json(const std::string& text);

/// "from,to" rows; a row with an empty "to" declares an isolated node.
/// Node order follows first appearance.
Dag parse_edge_list(std::istream& in);
Dag read_edge_list(const std::string& path);
void write_edge_list(std::ostream& os, const Dag& dag);

struct NetworkRecord {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::string>> parents;  ///< per node, sorted by node order
  std::vector<double> local_scores;
  std::vector<std::string> ordering;
  double total_score = 0;

  Dag as_dag() const;
};

struct NetworksFile {
  std::vector<std::string> variables;  ///< every input column
  std::vector<std::string> feas_set;   ///< columns that entered the search
  std::optional<std::string> outcome;
  bool truncated = false;
  std::vector<NetworkRecord> networks;
};

NetworkRecord to_record(const Network& net, const std::vector<std::string>& names);

std::string networks_json(const NetworksFile& file);
NetworksFile parse_networks_json(const std::string& text);

/// Graphviz digraph, parent -> child; the outcome node is drawn as a filled double circle.
void write_dot(std::ostream& os, const NetworkRecord& net, const std::optional<std::string>& outcome);

std::string report_json(const engine::RunReport& report, bool with_timings);

/// Reachable subsets by level, as lists of names.
std::string lattice_json(const std::vector<std::vector<NodeSubset>>& levels, const std::vector<std::string>& names);

/// {"node": [{"parents": [...], "score": x}, ...]}; -inf is written as null.
std::string scores_json(const scoring::LocalScoreTable& table, const std::vector<std::string>& names);
scoring::LocalScoreTable parse_scores_json(const std::string& text, const std::vector<std::string>& names);

}  // namespace causnet::io

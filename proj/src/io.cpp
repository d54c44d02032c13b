#include "causnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace causnet::io {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) return std::nullopt;
  while (*end == ' ' || *end == '\t') ++end;
  if (*end != '\0' || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

json score_value(double s) { return std::isinf(s) && s < 0 ? json(nullptr) : json(s); }
double score_from(const json& j) { return j.is_null() ? scoring::kNegInf : j.get<double>(); }

}  // namespace

CsvTable parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw InputError("CSV: unterminated quoted field");
  if (any && (!field.empty() || !record.empty())) end_record();
  if (records.empty()) throw InputError("CSV: missing header row");

  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw InputError("CSV: row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) + " fields, header has " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

Dataset to_dataset(const CsvTable& table, const std::optional<std::string>& schema_json) {
  const std::size_t cols = table.header.size();
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw InputError("CSV: no data rows");
  std::map<std::string, std::size_t> where;
  for (std::size_t j = 0; j < cols; ++j) {
    if (table.header[j].empty()) throw InputError("CSV: empty column name at position " + std::to_string(j + 1));
    if (!where.emplace(table.header[j], j).second) throw InputError("CSV: duplicate column '" + table.header[j] + "'");
  }
  auto column_of = [&](const std::string& name, const char* role) {
    auto it = where.find(name);
    if (it == where.end()) throw InputError(std::string("schema: ") + role + " column '" + name + "' not in CSV");
    return it->second;
  };
  auto cell = [&](Eigen::Index i, std::size_t j) -> const std::string& {
    const std::string& s = table.rows[static_cast<std::size_t>(i)][j];
    if (s.empty() || s == "NA" || s == "NaN")
      throw InputError("CSV: missing value in column '" + table.header[j] + "', row " + std::to_string(i + 2));
    return s;
  };

  enum class Kind { infer, continuous, categorical };
  std::vector<Kind> kinds(cols, Kind::infer);
  std::vector<bool> skip(cols, false);
  std::optional<std::string> surv_name;
  std::size_t surv_time = 0, surv_status = 0;
  if (schema_json) {
    const json s = parse_json(*schema_json, "schema JSON");
    if (!s.is_object()) throw InputError("schema JSON: expected an object");
    for (const auto& [name, spec] : s.items()) {
      if (spec.is_string()) {
        const std::string k = spec.get<std::string>();
        const std::size_t j = column_of(name, "declared");
        if (k == "continuous") kinds[j] = Kind::continuous;
        else if (k == "categorical") kinds[j] = Kind::categorical;
        else throw InputError("schema: unknown kind '" + k + "' for '" + name + "'");
      } else if (spec.is_object() && spec.value("kind", "") == "survival") {
        if (surv_name) throw InputError("schema: at most one survival column is supported");
        if (!spec.contains("time") || !spec.contains("status"))
          throw InputError("schema: survival entry '" + name + "' needs time and status columns");
        surv_name = name;
        surv_time = column_of(spec["time"].get<std::string>(), "survival time");
        surv_status = column_of(spec["status"].get<std::string>(), "survival status");
        if (surv_time == surv_status) throw InputError("schema: survival time and status must be different columns");
        skip[surv_status] = true;
      } else {
        throw InputError("schema: unsupported entry for '" + name + "'");
      }
    }
  }

  std::vector<Column> out_cols;
  std::vector<Eigen::VectorXd> out_vals;
  Eigen::VectorXi status;
  for (std::size_t j = 0; j < cols; ++j) {
    if (skip[j]) continue;
    if (surv_name && j == surv_time) {
      Eigen::VectorXd t(n);
      status.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto v = to_number(cell(i, j));
        if (!v) throw InputError("CSV: non-numeric survival time in row " + std::to_string(i + 2));
        t(i) = *v;
        const auto e = to_number(cell(i, surv_status));
        if (!e || (*e != 0 && *e != 1)) throw InputError("CSV: survival status must be 0 or 1 in row " + std::to_string(i + 2));
        status(i) = static_cast<int>(*e);
      }
      out_cols.push_back(Column{*surv_name, ColumnKind::survival, 0});
      out_vals.push_back(std::move(t));
      continue;
    }

    std::vector<std::optional<double>> nums(static_cast<std::size_t>(n));
    bool numeric = true, integral = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      nums[static_cast<std::size_t>(i)] = to_number(cell(i, j));
      const auto& v = nums[static_cast<std::size_t>(i)];
      if (!v) numeric = integral = false;
      else if (*v != std::floor(*v)) integral = false;
    }
    Kind kind = kinds[j];
    if (kind == Kind::infer) {
      kind = Kind::continuous;
      if (!numeric) {
        kind = Kind::categorical;
      } else if (integral) {
        std::set<double> distinct;
        for (const auto& v : nums) distinct.insert(*v);
        if (distinct.size() >= 2 && distinct.size() <= 10) kind = Kind::categorical;
      }
    }
    Eigen::VectorXd v(n);
    if (kind == Kind::continuous) {
      if (!numeric) throw InputError("CSV: column '" + table.header[j] + "' is declared continuous but has non-numeric values");
      for (Eigen::Index i = 0; i < n; ++i) v(i) = *nums[static_cast<std::size_t>(i)];
      out_cols.push_back(Column{table.header[j], ColumnKind::continuous, 0});
    } else {
      // Levels in numeric order when every value is numeric, else lexicographic.
      std::map<std::string, int> code;
      if (numeric) {
        std::map<double, int> by_value;
        for (const auto& x : nums) by_value.emplace(*x, 0);
        int k = 0;
        for (auto& [x, c] : by_value) c = k++;
        for (Eigen::Index i = 0; i < n; ++i) v(i) = by_value.at(*nums[static_cast<std::size_t>(i)]);
        out_cols.push_back(Column{table.header[j], ColumnKind::categorical, k});
      } else {
        for (Eigen::Index i = 0; i < n; ++i) code.emplace(table.rows[static_cast<std::size_t>(i)][j], 0);
        int k = 0;
        for (auto& [s, c] : code) c = k++;
        for (Eigen::Index i = 0; i < n; ++i) v(i) = code.at(table.rows[static_cast<std::size_t>(i)][j]);
        out_cols.push_back(Column{table.header[j], ColumnKind::categorical, k});
      }
    }
    out_vals.push_back(std::move(v));
  }

  Eigen::MatrixXd values(n, static_cast<Eigen::Index>(out_vals.size()));
  for (std::size_t j = 0; j < out_vals.size(); ++j) values.col(static_cast<Eigen::Index>(j)) = out_vals[j];
  return Dataset(std::move(out_cols), std::move(values), std::move(status));
}

Dataset load_dataset(const std::string& csv_path, const std::optional<std::string>& schema_path) {
  const CsvTable t = read_csv(csv_path);
  if (!schema_path) return to_dataset(t);
  return to_dataset(t, read_text(*schema_path));
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  for (int j = 0; j < data.n_cols(); ++j) {
    if (data.column(j).kind != ColumnKind::continuous) throw InputError("write_dataset_csv: only continuous columns are supported");
    os << (j ? "," : "") << quote(data.column(j).name);
  }
  os << '\n';
  for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
    for (int j = 0; j < data.n_cols(); ++j) os << (j ? "," : "") << num(data.values()(i, j));
    os << '\n';
  }
}

assoc::NamedParentSets parse_pp_json(const std::string& text) {
  const json j = parse_json(text, "pp JSON");
  if (!j.is_object()) throw InputError("pp JSON: expected an object of name -> [parent names]");
  assoc::NamedParentSets out;
  for (const auto& [child, parents] : j.items()) {
    if (!parents.is_array()) throw InputError("pp JSON: parents of '" + child + "' must be an array");
    auto& dst = out[child];
    for (const auto& p : parents) {
      if (!p.is_string()) throw InputError("pp JSON: parent names of '" + child + "' must be strings");
      dst.push_back(p.get<std::string>());
    }
  }
  return out;
}

Dag parse_edge_list(std::istream& in) {
  const CsvTable t = parse_csv(in);
  if (t.header.size() != 2 || t.header[0] != "from" || t.header[1] != "to")
    throw InputError("edge list: header must be 'from,to'");
  std::vector<std::string> names;
  std::map<std::string, int> where;
  auto node = [&](const std::string& name) {
    auto [it, fresh] = where.emplace(name, static_cast<int>(names.size()));
    if (fresh) names.push_back(name);
    return it->second;
  };
  std::vector<std::pair<int, int>> edges;
  for (const auto& r : t.rows) {
    if (r[0].empty()) throw InputError("edge list: empty 'from' field");
    const int u = node(r[0]);
    if (r[1].empty()) continue;
    const int v = node(r[1]);
    if (u == v) throw InputError("edge list: self-loop on '" + r[0] + "'");
    edges.emplace_back(u, v);
  }
  const std::size_t p = names.size();
  Dag d{names, std::vector<NodeSubset>(p, NodeSubset(p))};
  for (auto [u, v] : edges) d.parents[static_cast<std::size_t>(v)].set(u);
  return d;
}

Dag read_edge_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_edge_list(in);
}

void write_edge_list(std::ostream& os, const Dag& dag) {
  os << "from,to\n";
  // Declare every node first so node order and isolated nodes survive a round trip.
  for (std::size_t i = 0; i < dag.size(); ++i) os << quote(dag.names[i]) << ",\n";
  for (auto [u, v] : dag.edges())
    os << quote(dag.names[static_cast<std::size_t>(u)]) << ',' << quote(dag.names[static_cast<std::size_t>(v)]) << '\n';
}

Dag NetworkRecord::as_dag() const {
  const std::size_t p = nodes.size();
  std::map<std::string, int> where;
  for (std::size_t i = 0; i < p; ++i) where[nodes[i]] = static_cast<int>(i);
  Dag d{nodes, std::vector<NodeSubset>(p, NodeSubset(p))};
  for (std::size_t i = 0; i < p && i < parents.size(); ++i)
    for (const auto& name : parents[i]) {
      auto it = where.find(name);
      if (it == where.end()) throw InputError("network: unknown parent '" + name + "' of '" + nodes[i] + "'");
      d.parents[i].set(it->second);
    }
  return d;
}

NetworkRecord to_record(const Network& net, const std::vector<std::string>& names) {
  if (names.size() != net.size()) throw StructuralError("network and name list disagree on size");
  NetworkRecord r;
  r.nodes = names;
  for (std::size_t i = 0; i < net.size(); ++i) {
    std::vector<std::string> pa;
    for (int u : net.parents[i]) pa.push_back(names[static_cast<std::size_t>(u)]);
    r.parents.push_back(std::move(pa));
  }
  r.local_scores = net.local_scores;
  for (int v : net.ordering) r.ordering.push_back(names[static_cast<std::size_t>(v)]);
  r.total_score = net.total_score;
  return r;
}

std::string networks_json(const NetworksFile& file) {
  ojson j;
  j["variables"] = file.variables;
  j["feas_set"] = file.feas_set;
  j["outcome"] = file.outcome ? ojson(*file.outcome) : ojson(nullptr);
  j["truncated"] = file.truncated;
  j["networks"] = ojson::array();
  for (const auto& net : file.networks) {
    ojson n;
    n["total_score"] = score_value(net.total_score);
    n["ordering"] = net.ordering;
    n["nodes"] = ojson::array();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      ojson node;
      node["name"] = net.nodes[i];
      node["parents"] = net.parents[i];
      node["local_score"] = score_value(net.local_scores[i]);
      n["nodes"].push_back(std::move(node));
    }
    n["edges"] = ojson::array();
    for (std::size_t i = 0; i < net.nodes.size(); ++i)
      for (const auto& pa : net.parents[i]) n["edges"].push_back(ojson{{"from", pa}, {"to", net.nodes[i]}});
    j["networks"].push_back(std::move(n));
  }
  return j.dump(2) + "\n";
}

NetworksFile parse_networks_json(const std::string& text) {
  const json j = parse_json(text, "networks JSON");
  NetworksFile f;
  try {
    f.variables = j.at("variables").get<std::vector<std::string>>();
    f.feas_set = j.at("feas_set").get<std::vector<std::string>>();
    if (j.contains("outcome") && !j["outcome"].is_null()) f.outcome = j["outcome"].get<std::string>();
    f.truncated = j.value("truncated", false);
    for (const auto& n : j.at("networks")) {
      NetworkRecord r;
      r.total_score = score_from(n.at("total_score"));
      r.ordering = n.at("ordering").get<std::vector<std::string>>();
      for (const auto& node : n.at("nodes")) {
        r.nodes.push_back(node.at("name").get<std::string>());
        r.parents.push_back(node.at("parents").get<std::vector<std::string>>());
        r.local_scores.push_back(score_from(node.at("local_score")));
      }
      f.networks.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("networks JSON: ") + e.what());
  }
  return f;
}

void write_dot(std::ostream& os, const NetworkRecord& net, const std::optional<std::string>& outcome) {
  auto id = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + '"';
  };
  os << "digraph causnet {\n  rankdir=TB;\n  node [shape=ellipse];\n";
  for (const auto& name : net.nodes) {
    os << "  " << id(name);
    if (outcome && name == *outcome) os << " [shape=doublecircle, style=filled, fillcolor=lightgoldenrod]";
    os << ";\n";
  }
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    for (const auto& pa : net.parents[i]) os << "  " << id(pa) << " -> " << id(net.nodes[i]) << ";\n";
  os << "}\n";
}

std::string report_json(const engine::RunReport& r, bool with_timings) {
  ojson j;
  j["n_rows"] = r.n_rows;
  j["n_variables"] = r.n_variables;
  j["feas_set_size"] = r.feas_set_size;
  j["local_scores"] = r.local_scores;
  j["best_parent_entries"] = r.best_parent_entries;
  j["reachable_subsets"] = r.reachable_subsets;
  j["level_sizes"] = r.level_sizes;
  j["blocks"] = r.blocks;
  j["full_set_reachable"] = r.full_set_reachable;
  j["truncated"] = r.truncated;
  if (with_timings) {
    ojson t = ojson::object();
    for (const auto& [stage, ms] : r.stage_ms) t[stage] = ms;
    j["stage_ms"] = std::move(t);
  }
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string lattice_json(const std::vector<std::vector<NodeSubset>>& levels, const std::vector<std::string>& names) {
  ojson j = ojson::array();
  for (const auto& level : levels) {
    std::vector<NodeSubset> sorted = level;
    std::sort(sorted.begin(), sorted.end(), [](const NodeSubset& a, const NodeSubset& b) { return lex_less(a, b); });
    ojson l = ojson::array();
    for (const auto& w : sorted) {
      ojson s = ojson::array();
      for (int v : w) s.push_back(names.at(static_cast<std::size_t>(v)));
      l.push_back(std::move(s));
    }
    j.push_back(std::move(l));
  }
  return j.dump(2) + "\n";
}

std::string scores_json(const scoring::LocalScoreTable& table, const std::vector<std::string>& names) {
  if (names.size() != table.universe()) throw StructuralError("scores_json: name list and table disagree on size");
  ojson j = ojson::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& ns = table.node(static_cast<int>(i));
    if (ns.keys.empty()) continue;
    ojson entries = ojson::array();
    for (std::size_t e = 0; e < ns.keys.size(); ++e) {
      std::vector<std::string> pa;
      for (int u : ns.keys[e]) pa.push_back(names[static_cast<std::size_t>(u)]);
      entries.push_back(ojson{{"parents", pa}, {"score", score_value(ns.scores[e])}});
    }
    j[names[i]] = std::move(entries);
  }
  return j.dump(2) + "\n";
}

scoring::LocalScoreTable parse_scores_json(const std::string& text, const std::vector<std::string>& names) {
  const json j = parse_json(text, "scores JSON");
  if (!j.is_object()) throw InputError("scores JSON: expected an object");
  std::map<std::string, int> where;
  for (std::size_t i = 0; i < names.size(); ++i) where[names[i]] = static_cast<int>(i);
  auto index = [&](const std::string& name) {
    auto it = where.find(name);
    if (it == where.end()) throw InputError("scores JSON: unknown variable '" + name + "'");
    return it->second;
  };
  scoring::LocalScoreTable table(names.size());
  try {
    for (const auto& [name, entries] : j.items()) {
      const int v = index(name);
      for (const auto& e : entries) {
        NodeSubset pa(names.size());
        for (const auto& p : e.at("parents")) pa.set(index(p.get<std::string>()));
        table.insert(v, pa, score_from(e.at("score")));
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("scores JSON: ") + e.what());
  }
  return table;
}

}  // namespace causnet::io

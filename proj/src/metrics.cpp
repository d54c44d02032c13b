#include "causnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

namespace causnet::metrics {

namespace {

using EdgeSet = std::set<std::pair<int, int>>;

EdgeSet edge_set(const std::vector<NodeSubset>& parents, EdgeMode mode) {
  EdgeSet out;
  if (mode == EdgeMode::undirected) {
    for (const auto& e : skeleton(parents)) out.insert(e);
    return out;
  }
  for (std::size_t v = 0; v < parents.size(); ++v)
    for (int u : parents[v]) out.emplace(u, static_cast<int>(v));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

EdgeConfusion confusion(const std::vector<NodeSubset>& predicted, const std::vector<NodeSubset>& truth, EdgeMode mode) {
  if (predicted.size() != truth.size())
    throw InputError("metrics: predicted graph has " + std::to_string(predicted.size()) + " nodes, truth has " +
                     std::to_string(truth.size()));
  const EdgeSet pe = edge_set(predicted, mode), te = edge_set(truth, mode);
  EdgeConfusion c;
  c.mode = mode;
  for (const auto& e : pe) (te.count(e) ? c.tp : c.fp)++;
  c.fn = te.size() - c.tp;
  return c;
}

EdgeConfusion confusion(const Network& predicted, const Dag& truth, EdgeMode mode) {
  return confusion(predicted.parents, truth.parents, mode);
}

EdgeConfusion confusion(const Dag& predicted, const Dag& truth, EdgeMode mode) {
  return confusion(align(predicted, truth).parents, truth.parents, mode);
}

double fdr(const EdgeConfusion& c) noexcept {
  const std::size_t called = c.tp + c.fp;
  return called == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(called);
}

std::size_t hamming(const EdgeConfusion& c) noexcept { return c.fp + c.fn; }

double fdr(const Network& predicted, const Dag& truth, EdgeMode mode) { return fdr(confusion(predicted, truth, mode)); }

std::size_t hamming(const Network& predicted, const Dag& truth, EdgeMode mode) {
  return hamming(confusion(predicted, truth, mode));
}

Dag align(const Dag& predicted, const Dag& reference) {
  const std::size_t p = reference.size();
  if (predicted.size() != p || predicted.names.size() != p || reference.names.size() != p)
    throw InputError("metrics: graphs have different node counts");
  std::map<std::string, int> where;
  for (std::size_t i = 0; i < p; ++i) where[reference.names[i]] = static_cast<int>(i);
  std::vector<int> map(p);
  for (std::size_t i = 0; i < p; ++i) {
    auto it = where.find(predicted.names[i]);
    if (it == where.end()) throw InputError("metrics: node '" + predicted.names[i] + "' is not in the reference graph");
    map[i] = it->second;
  }
  Dag out{reference.names, std::vector<NodeSubset>(p, NodeSubset(p))};
  for (std::size_t v = 0; v < p; ++v)
    for (int u : predicted.parents[v]) out.parents[static_cast<std::size_t>(map[v])].set(map[static_cast<std::size_t>(u)]);
  return out;
}

EdgeMetrics evaluate(const std::vector<NodeSubset>& predicted, const std::vector<NodeSubset>& truth) {
  const EdgeConfusion d = confusion(predicted, truth, EdgeMode::directed);
  const EdgeConfusion u = confusion(predicted, truth, EdgeMode::undirected);
  return EdgeMetrics{fdr(d), fdr(u), hamming(d), hamming(u)};
}

std::vector<CellSummary> summarize(const std::vector<BenchRow>& rows) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<const BenchRow*>> members;
  for (const auto& r : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.p == r.p && c.n == r.n && c.score_family == r.score_family;
    });
    if (it == cells.end()) {
      cells.push_back(CellSummary{r.p, r.n, r.score_family});
      members.emplace_back();
      it = std::prev(cells.end());
    }
    members[static_cast<std::size_t>(it - cells.begin())].push_back(&r);
  }
  auto stats = [](const std::vector<const BenchRow*>& rs, auto get, double& mean, double& sd) {
    double s = 0;
    for (const auto* r : rs) s += get(*r);
    mean = s / static_cast<double>(rs.size());
    double ss = 0;
    for (const auto* r : rs) ss += (get(*r) - mean) * (get(*r) - mean);
    sd = rs.size() > 1 ? std::sqrt(ss / static_cast<double>(rs.size() - 1)) : 0.0;
  };
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto& c = cells[k];
    const auto& rs = members[k];
    c.replicates = rs.size();
    stats(rs, [](const BenchRow& r) { return r.metrics.fdr_directed; }, c.mean_fdr_directed, c.sd_fdr_directed);
    stats(rs, [](const BenchRow& r) { return r.metrics.fdr_undirected; }, c.mean_fdr_undirected, c.sd_fdr_undirected);
    stats(rs, [](const BenchRow& r) { return static_cast<double>(r.metrics.hamming_directed); }, c.mean_hamming_directed,
          c.sd_hamming_directed);
    stats(rs, [](const BenchRow& r) { return static_cast<double>(r.metrics.hamming_undirected); }, c.mean_hamming_undirected,
          c.sd_hamming_undirected);
    stats(rs, [](const BenchRow& r) { return r.runtime_ms; }, c.mean_runtime_ms, c.sd_runtime_ms);
  }
  return cells;
}

void write_bench_header(std::ostream& os) {
  os << "p,N,replicate,score_family,fdr_directed,fdr_undirected,hamming_directed,hamming_undirected,runtime_ms\n";
}

void write_bench_row(std::ostream& os, const BenchRow& r, bool with_runtime) {
  os << r.p << ',' << r.n << ',' << r.replicate << ',' << r.score_family << ',' << fmt(r.metrics.fdr_directed) << ','
     << fmt(r.metrics.fdr_undirected) << ',' << r.metrics.hamming_directed << ',' << r.metrics.hamming_undirected << ','
     << (with_runtime ? fmt(r.runtime_ms) : std::string()) << '\n';
}

void write_summary(std::ostream& os, const std::vector<CellSummary>& cells, bool with_runtime) {
  os << "p,N,score_family,replicates,fdr_directed_mean,fdr_directed_sd,fdr_undirected_mean,fdr_undirected_sd,"
        "hamming_directed_mean,hamming_directed_sd,hamming_undirected_mean,hamming_undirected_sd,runtime_ms_mean,"
        "runtime_ms_sd\n";
  for (const auto& c : cells) {
    os << c.p << ',' << c.n << ',' << c.score_family << ',' << c.replicates << ',' << fmt(c.mean_fdr_directed) << ','
       << fmt(c.sd_fdr_directed) << ',' << fmt(c.mean_fdr_undirected) << ',' << fmt(c.sd_fdr_undirected) << ','
       << fmt(c.mean_hamming_directed) << ',' << fmt(c.sd_hamming_directed) << ',' << fmt(c.mean_hamming_undirected) << ','
       << fmt(c.sd_hamming_undirected) << ',';
    if (with_runtime) os << fmt(c.mean_runtime_ms) << ',' << fmt(c.sd_runtime_ms);
    else os << ',';
    os << '\n';
  }
}

}  // namespace causnet::metrics

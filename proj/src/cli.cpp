#include "causnet/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "causnet/io.hpp"
#include "causnet/parallel.hpp"

namespace causnet::cli {

namespace fs = std::filesystem;

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const EmptyFeasSetError& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyFeasSet;
  } catch (const SearchLimitError& e) {
    err << "error: " << e.what() << '\n';
    return kSearchLimit;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

namespace {

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

template <typename Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ostringstream ss;
  w(ss);
  io::write_text(path, ss.str());
}

// Network over the reduced search columns, expanded to every input column.
std::vector<NodeSubset> expand(const Network& net, const std::vector<int>& columns, std::size_t p) {
  std::vector<NodeSubset> out(p, NodeSubset(p));
  for (std::size_t i = 0; i < net.size(); ++i)
    for (int u : net.parents[i]) out[static_cast<std::size_t>(columns[i])].set(columns[static_cast<std::size_t>(u)]);
  return out;
}

void check_outcome(const Dataset& data, const engine::LearnOptions& o) {
  if (o.screen.mode == assoc::ScreenMode::phenotype && !o.screen.outcome)
    throw InputError("phenotype mode needs an outcome variable");
  if (data.survival_index() && !o.screen.outcome && !o.screen.user_pp)
    throw InputError("a survival column is present; name it as the outcome");
  if (o.screen.outcome && !data.index_of(*o.screen.outcome))
    throw InputError("unknown outcome variable '" + *o.screen.outcome + "'");
}

}  // namespace

LearnSummary cmd_learn(const LearnConfig& cfg) {
  Dataset data = io::load_dataset(cfg.data_path, cfg.schema_path);
  engine::LearnOptions opts = cfg.options;
  if (cfg.pp_path) opts.screen.user_pp = io::parse_pp_json(io::read_text(*cfg.pp_path));
  check_outcome(data, opts);
  if (opts.score.family == scoring::ScoreFamily::bge && !data.all_continuous())
    throw InputError("BGe scoring needs all-continuous data; use --score bic for mixed columns");

  const engine::LearnResult res = engine::learn(data, opts);
  fs::create_directories(cfg.out_dir);

  const std::vector<std::string> reduced = res.screen.data.names();
  io::NetworksFile file;
  file.variables = data.names();
  file.feas_set = reduced;
  if (res.screen.outcome) file.outcome = reduced[static_cast<std::size_t>(*res.screen.outcome)];
  file.truncated = res.report.truncated;
  for (const auto& net : res.networks) file.networks.push_back(io::to_record(net, reduced));
  io::write_text(path_in(cfg.out_dir, "networks.json"), io::networks_json(file));

  for (std::size_t k = 0; k < file.networks.size(); ++k) {
    const std::string name = k == 0 ? "network.dot" : "network_" + std::to_string(k + 1) + ".dot";
    write_file(path_in(cfg.out_dir, name), [&](std::ostream& os) { io::write_dot(os, file.networks[k], file.outcome); });
  }
  const std::size_t p = static_cast<std::size_t>(data.n_cols());
  Dag full{data.names(), std::vector<NodeSubset>(p, NodeSubset(p))};
  if (!res.networks.empty()) full.parents = expand(res.networks.front(), res.screen.columns, p);
  write_file(path_in(cfg.out_dir, "edges.csv"), [&](std::ostream& os) { io::write_edge_list(os, full); });
  io::write_text(path_in(cfg.out_dir, "report.json"), io::report_json(res.report, cfg.timings));

  if (cfg.trace_path)
    io::write_text(*cfg.trace_path, io::lattice_json(engine::generational_expansion(res.screen.constraints), reduced));
  if (cfg.scores_path) io::write_text(*cfg.scores_path, io::scores_json(res.local, reduced));

  LearnSummary s;
  s.networks = res.networks.size();
  s.feas_set = reduced.size();
  if (!res.networks.empty()) s.best_score = res.networks.front().total_score;
  return s;
}

void cmd_simulate(const SimulateConfig& cfg) {
  const simulate::TruthGraph truth = simulate::simulate_dag(cfg.spec);
  const Dataset data = simulate::simulate_data(truth, cfg.spec);
  write_file(cfg.data_path, [&](std::ostream& os) { io::write_dataset_csv(os, data); });
  write_file(cfg.truth_path, [&](std::ostream& os) { io::write_edge_list(os, truth.dag); });
  if (cfg.spec_out) io::write_text(*cfg.spec_out, simulate::spec_to_json(cfg.spec) + "\n");
}

namespace {

Dag read_prediction(const std::string& path) {
  if (fs::path(path).extension() != ".json") return io::read_edge_list(path);
  const io::NetworksFile f = io::parse_networks_json(io::read_text(path));
  const std::size_t p = f.variables.size();
  Dag d{f.variables, std::vector<NodeSubset>(p, NodeSubset(p))};
  if (f.networks.empty()) return d;
  const Dag sub = f.networks.front().as_dag();
  std::vector<int> where(sub.size(), -1);
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (f.variables[j] == sub.names[i]) where[i] = static_cast<int>(j);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    if (where[i] < 0) throw InputError("networks JSON: node '" + sub.names[i] + "' is not among the variables");
    for (int u : sub.parents[i]) d.parents[static_cast<std::size_t>(where[i])].set(where[static_cast<std::size_t>(u)]);
  }
  return d;
}

}  // namespace

void cmd_eval(const EvalConfig& cfg, std::ostream& out) {
  const Dag truth = io::read_edge_list(cfg.truth_path);
  const Dag predicted = metrics::align(read_prediction(cfg.predicted_path), truth);
  const metrics::EdgeMetrics m = metrics::evaluate(predicted.parents, truth.parents);
  const auto d = metrics::confusion(predicted.parents, truth.parents, metrics::EdgeMode::directed);
  const auto u = metrics::confusion(predicted.parents, truth.parents, metrics::EdgeMode::undirected);
  std::ostringstream ss;
  ss << "fdr_directed,fdr_undirected,hamming_directed,hamming_undirected,tp_directed,fp_directed,fn_directed,"
        "tp_undirected,fp_undirected,fn_undirected\n";
  ss << m.fdr_directed << ',' << m.fdr_undirected << ',' << m.hamming_directed << ',' << m.hamming_undirected << ',' << d.tp
     << ',' << d.fp << ',' << d.fn << ',' << u.tp << ',' << u.fp << ',' << u.fn << '\n';
  if (cfg.out_path) io::write_text(*cfg.out_path, ss.str());
  else out << ss.str();
}

std::uint64_t replicate_seed(std::uint64_t base, int p, int n, int replicate) {
  // splitmix64 over the packed coordinates.
  std::uint64_t z = base ^ (static_cast<std::uint64_t>(p) << 40) ^ (static_cast<std::uint64_t>(n) << 16) ^
                    static_cast<std::uint64_t>(replicate);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

int deepest_sink(const simulate::TruthGraph& g) {
  const std::size_t p = g.dag.size();
  const DagCheck check = validate_dag(g.dag.parents);
  std::vector<NodeSubset> anc(p, NodeSubset(p));
  for (int v : check.order)
    for (int u : g.dag.parents[static_cast<std::size_t>(v)]) {
      anc[static_cast<std::size_t>(v)].set(u);
      anc[static_cast<std::size_t>(v)] |= anc[static_cast<std::size_t>(u)];
    }
  int best = -1;
  std::size_t most = 0;
  for (std::size_t v = 0; v < p; ++v) {
    if (g.roles[v] != simulate::Role::sink) continue;
    if (best < 0 || anc[v].count() > most) best = static_cast<int>(v), most = anc[v].count();
  }
  if (best < 0) throw DomainError("bench: phenotype mode needs a sink in the truth graph");
  return best;
}

}  // namespace

BenchOutcome cmd_bench(const BenchConfig& cfg, std::ostream& rows_out, std::ostream& log) {
  if (cfg.replicates < 1) throw InputError("bench: replicates must be positive");
  if (!(cfg.independent_fraction >= 0 && cfg.independent_fraction < 1))
    throw InputError("bench: independent fraction must lie in [0, 1)");
  BenchOutcome outcome;
  metrics::write_bench_header(rows_out);
  const char* family = scoring::to_string(cfg.options.score.family);
  for (int p : cfg.ps)
    for (int n : cfg.ns) {
      struct Slot {
        std::optional<metrics::BenchRow> row;
        std::string message;
      };
      std::vector<Slot> slots(static_cast<std::size_t>(cfg.replicates));
      parallel_for(slots.size(), cfg.threads, [&](std::size_t r) {
        Slot& slot = slots[r];
        const int rep = static_cast<int>(r) + 1;
        try {
          simulate::SimSpec spec = simulate::SimSpec::with_default_roles(p, n, replicate_seed(cfg.seed, p, n, rep));
          spec.p0 = static_cast<int>(cfg.independent_fraction * p);
          const int rest = p - spec.p0;
          spec.p1 = spec.p2 = spec.p3 = rest / 3;
          if (rest % 3 >= 1) ++spec.p1;
          if (rest % 3 >= 2) ++spec.p2;
          spec.max_parents = cfg.max_parents;
          spec.effect_min = cfg.effect_min;
          spec.effect_max = cfg.effect_max;
          spec.noise_sd = cfg.noise_sd;
          const simulate::TruthGraph truth = simulate::simulate_dag(spec);
          const Dataset data = simulate::simulate_data(truth, spec);

          engine::LearnOptions opts = cfg.options;
          opts.score.threads = 1;
          opts.screen.threads = 1;
          if (opts.screen.mode == assoc::ScreenMode::phenotype)
            opts.screen.outcome = truth.dag.names[static_cast<std::size_t>(deepest_sink(truth))];

          const auto t0 = std::chrono::steady_clock::now();
          std::vector<NodeSubset> predicted(static_cast<std::size_t>(p), NodeSubset(static_cast<std::size_t>(p)));
          try {
            const engine::LearnResult res = engine::learn(data, opts);
            if (!res.networks.empty()) predicted = expand(res.networks.front(), res.screen.columns, static_cast<std::size_t>(p));
          } catch (const EmptyFeasSetError&) {
            // No associations: the prediction is the empty graph.
          }
          metrics::BenchRow row;
          row.p = p;
          row.n = n;
          row.replicate = rep;
          row.score_family = family;
          row.metrics = metrics::evaluate(predicted, truth.dag.parents);
          row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          slot.row = row;
        } catch (const std::exception& e) {
          slot.message = "p=" + std::to_string(p) + " N=" + std::to_string(n) + " replicate " + std::to_string(rep) +
                         " failed: " + e.what();
        }
      });
      for (const Slot& s : slots) {
        if (s.row) {
          metrics::write_bench_row(rows_out, *s.row, cfg.timings);
          outcome.rows.push_back(*s.row);
        } else {
          log << s.message << '\n';
          ++outcome.failures;
        }
      }
      rows_out.flush();
    }
  return outcome;
}

namespace {

void add_learn_options(CLI::App* app, engine::LearnOptions& o, bool& phenotype, std::string& score,
                       std::optional<double>& alpha) {
  auto* a = app->add_option("--alpha", alpha, "BH-adjusted p-value cutoff (default 0.05)")->check(CLI::Range(0.0, 1.0));
  app->add_option("--corr-cutoff", o.screen.corr_cutoff, "absolute correlation cutoff instead of the FDR filter")
      ->check(CLI::Range(0.0, 1.0))
      ->excludes(a);
  app->add_flag("--phenotype", phenotype, "screen ancestor levels of --outcome only");
  app->add_option("--levels", o.screen.levels, "phenotype ancestor levels")->check(CLI::Range(2, 3));
  app->add_option("--outcome", o.screen.outcome, "outcome variable");
  app->add_option("--top-k", o.screen.top_k, "keep the k strongest outcome associations")->check(CLI::PositiveNumber);
  app->add_option("--max-pp", o.screen.max_pp, "keep each node's strongest possible parents only")->check(CLI::PositiveNumber);
  app->add_option("--score", score, "score family")->check(CLI::IsMember({"bic", "bge"}));
  app->add_option("--alpha-mu", o.score.bge.alpha_mu, "BGe prior mean precision")->check(CLI::PositiveNumber);
  app->add_option("--alpha-w", o.score.bge.alpha_w, "BGe Wishart degrees of freedom");
  app->add_option("--bge-t", o.score.bge.t, "BGe prior scale");
  app->add_option("--indegree", o.indegree, "maximum parents per node")->check(CLI::Range(0, 16));
  app->add_option("--max-networks", o.search.recover.max_networks, "cap on returned optimal networks")->check(CLI::PositiveNumber);
  app->add_option("--max-subsets", o.search.sweep.max_subsets, "cap on reachable subsets")->check(CLI::PositiveNumber);
}

void finish_learn_options(engine::LearnOptions& o, bool phenotype, const std::string& score, const std::optional<double>& alpha,
                          int threads) {
  o.screen.mode = phenotype ? assoc::ScreenMode::phenotype : assoc::ScreenMode::all_pairs;
  if (alpha) o.screen.alpha = *alpha;
  o.score.family = score == "bge" ? scoring::ScoreFamily::bge : scoring::ScoreFamily::bic;
  o.score.threads = o.screen.threads = threads;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Exact Bayesian network structure learning over generational orderings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "causnet 1.0.0");

  // learn
  LearnConfig lc;
  bool l_pheno = false, l_no_timings = false;
  std::string l_score = "bic";
  std::optional<double> l_alpha;
  int l_threads = 1;
  auto* learn = app.add_subcommand("learn", "learn optimal networks from a CSV dataset");
  learn->add_option("--data", lc.data_path, "input CSV with a header row")->required();
  learn->add_option("--schema", lc.schema_path, "column kinds JSON");
  learn->add_option("--pp", lc.pp_path, "possible-parent sets JSON; skips screening");
  learn->add_option("--out-dir", lc.out_dir, "output directory")->required();
  learn->add_option("--trace", lc.trace_path, "write the reachable-subset lattice JSON");
  learn->add_option("--dump-scores", lc.scores_path, "write the local score table JSON");
  learn->add_option("--threads", l_threads, "worker threads")->check(CLI::PositiveNumber);
  learn->add_flag("--no-timings", l_no_timings, "omit wall-clock timings from the report");
  add_learn_options(learn, lc.options, l_pheno, l_score, l_alpha);

  // simulate
  SimulateConfig sc;
  std::optional<std::string> s_spec;
  std::optional<int> s_p, s_n, s_p0, s_p1, s_p2, s_p3, s_max_parents;
  std::optional<double> s_effect, s_effect_min, s_effect_max, s_noise;
  std::uint64_t s_seed = 1;
  auto* sim = app.add_subcommand("simulate", "simulate a random linear-Gaussian network and data");
  sim->add_option("--spec", s_spec, "simulation spec JSON; flags override its fields");
  sim->add_option("--p", s_p, "number of nodes")->check(CLI::PositiveNumber);
  sim->add_option("--n", s_n, "number of rows");
  sim->add_option("--p0", s_p0, "isolated nodes");
  sim->add_option("--p1", s_p1, "source nodes");
  sim->add_option("--p2", s_p2, "intermediate nodes");
  sim->add_option("--p3", s_p3, "sink nodes");
  sim->add_option("--effect", s_effect, "fixed effect magnitude");
  sim->add_option("--effect-min", s_effect_min, "smallest effect magnitude");
  sim->add_option("--effect-max", s_effect_max, "largest effect magnitude");
  sim->add_option("--noise-sd", s_noise, "noise standard deviation");
  sim->add_option("--max-parents", s_max_parents, "maximum parents per node");
  auto* seed_opt = sim->add_option("--seed", s_seed, "random seed");
  sim->add_option("--out-data", sc.data_path, "data CSV")->required();
  sim->add_option("--out-truth", sc.truth_path, "truth edge list CSV")->required();
  sim->add_option("--out-spec", sc.spec_out, "write the effective spec JSON");

  // eval
  EvalConfig ec;
  auto* eval = app.add_subcommand("eval", "compare a predicted network with the truth");
  eval->add_option("--predicted", ec.predicted_path, "edge list CSV or networks JSON")->required();
  eval->add_option("--truth", ec.truth_path, "truth edge list CSV")->required();
  eval->add_option("--out", ec.out_path, "metrics CSV (stdout when omitted)");

  // bench
  BenchConfig bc;
  bool b_pheno = false, b_no_timings = false;
  std::string b_score = "bic";
  std::optional<double> b_alpha;
  auto* bench = app.add_subcommand("bench", "simulate, learn and evaluate over a (p, N) grid");
  bench->add_option("--p", bc.ps, "node counts")->delimiter(',');
  bench->add_option("--n", bc.ns, "sample sizes")->delimiter(',');
  bench->add_option("--replicates", bc.replicates, "replicates per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bc.seed, "base seed");
  bench->add_option("--independent-fraction", bc.independent_fraction, "share of isolated nodes");
  bench->add_option("--sim-max-parents", bc.max_parents, "maximum parents in simulated graphs")->check(CLI::PositiveNumber);
  bench->add_option("--effect-min", bc.effect_min, "smallest effect magnitude");
  bench->add_option("--effect-max", bc.effect_max, "largest effect magnitude");
  bench->add_option("--noise-sd", bc.noise_sd, "noise standard deviation");
  bench->add_option("--threads", bc.threads, "replicates run in parallel")->check(CLI::PositiveNumber);
  bench->add_option("--out", bc.out_path, "per-replicate CSV (stdout when omitted)");
  bench->add_option("--summary", bc.summary_path, "per-cell summary CSV");
  bench->add_flag("--no-timings", b_no_timings, "leave runtime columns empty");
  add_learn_options(bench, bc.options, b_pheno, b_score, b_alpha);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*learn) {
      finish_learn_options(lc.options, l_pheno, l_score, l_alpha, l_threads);
      lc.timings = !l_no_timings;
      const LearnSummary s = cmd_learn(lc);
      std::cerr << "learned " << s.networks << " optimal network(s) over " << s.feas_set << " variables, score "
                << s.best_score << '\n';
    } else if (*sim) {
      simulate::SimSpec spec;
      if (s_spec) spec = simulate::spec_from_json(io::read_text(*s_spec));
      if (s_p) {
        spec.p = *s_p;
        if (!s_p0 && !s_p1 && !s_p2 && !s_p3) {
          const auto d = simulate::SimSpec::with_default_roles(spec.p, spec.n, spec.seed);
          spec.p0 = d.p0, spec.p1 = d.p1, spec.p2 = d.p2, spec.p3 = d.p3;
        }
      }
      if (!s_spec && !s_p) throw InputError("simulate needs --spec or --p");
      if (s_n) spec.n = *s_n;
      if (s_p0) spec.p0 = *s_p0;
      if (s_p1) spec.p1 = *s_p1;
      if (s_p2) spec.p2 = *s_p2;
      if (s_p3) spec.p3 = *s_p3;
      if (s_effect) spec.effect_min = spec.effect_max = *s_effect;
      if (s_effect_min) spec.effect_min = *s_effect_min;
      if (s_effect_max) spec.effect_max = *s_effect_max;
      if (s_noise) spec.noise_sd = *s_noise;
      if (s_max_parents) spec.max_parents = *s_max_parents;
      if (seed_opt->count() || !s_spec) spec.seed = s_seed;
      sc.spec = spec;
      cmd_simulate(sc);
    } else if (*eval) {
      cmd_eval(ec, std::cout);
    } else if (*bench) {
      finish_learn_options(bc.options, b_pheno, b_score, b_alpha, 1);
      bc.timings = !b_no_timings;
      std::ofstream file;
      if (bc.out_path) {
        file.open(*bc.out_path, std::ios::binary);
        if (!file) throw InputError("cannot write '" + *bc.out_path + "'");
      }
      std::ostream& rows = bc.out_path ? static_cast<std::ostream&>(file) : std::cout;
      const BenchOutcome out = cmd_bench(bc, rows, std::cerr);
      if (bc.summary_path)
        write_file(*bc.summary_path, [&](std::ostream& os) { metrics::write_summary(os, metrics::summarize(out.rows), bc.timings); });
      if (out.rows.empty() && out.failures > 0) return kInternal;
    }
  } catch (...) {
    return report_exception(std::cerr);
  }
  return kOk;
}

}  // namespace causnet::cli

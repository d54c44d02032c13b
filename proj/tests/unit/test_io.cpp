#include <doctest.h>

#include <json.hpp>

#include <random>
#include <sstream>

#include "causnet/io.hpp"
#include "support/fixtures.hpp"

using namespace causnet;
using namespace causnet::io;

namespace {

CsvTable csv(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace

TEST_CASE("CSV parsing") {
  auto t = csv("a,\"b, with comma\",c\r\n1,\"x \"\"quoted\"\"\",3\r\n4,5,6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b, with comma", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x \"quoted\"");
  CHECK(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
  CHECK(csv("a\n1\n2").rows.size() == 2);
  CHECK_THROWS_AS(csv("a,b\n1\n"), InputError);
  CHECK_THROWS_AS(csv(""), InputError);
  CHECK_THROWS_AS(csv("a\n\"unterminated\n"), InputError);
}

TEST_CASE("column kinds are inferred") {
  auto d = to_dataset(csv("x,g,s,big\n0.5,1,lo,1\n1.5,2,hi,2\n2.5,1,lo,3\n3.5,3,hi,4\n4.5,2,lo,5\n5.5,1,hi,6\n"
                          "6.5,2,lo,7\n7.5,3,hi,8\n8.5,1,lo,9\n9.5,2,hi,10\n10.5,3,lo,11\n"));
  CHECK(d.column(0).kind == ColumnKind::continuous);
  CHECK(d.column(1).kind == ColumnKind::categorical);
  CHECK(d.column(1).levels == 3);
  CHECK(d.column(2).kind == ColumnKind::categorical);
  CHECK(d.column(2).levels == 2);
  // "hi" sorts before "lo".
  CHECK(d.values()(0, 2) == 1);
  // Eleven distinct integers are treated as continuous.
  CHECK(d.column(3).kind == ColumnKind::continuous);
}

TEST_CASE("schema declarations and survival columns") {
  const std::string text = "age,stage,t,e\n50,1,2.5,1\n61,2,1.0,0\n47,1,3.2,1\n55,2,0.7,1\n";
  auto d = to_dataset(csv(text), R"({"stage": "continuous", "os": {"kind": "survival", "time": "t", "status": "e"}})");
  REQUIRE(d.n_cols() == 3);
  CHECK(d.names() == std::vector<std::string>{"age", "stage", "os"});
  CHECK(d.column(1).kind == ColumnKind::continuous);
  CHECK(d.survival_index() == 2);
  CHECK(d.status() == Eigen::Vector4i(1, 0, 1, 1));
  CHECK(d.values()(1, 2) == 1.0);

  CHECK_THROWS_AS(to_dataset(csv(text), R"({"nope": "continuous"})"), InputError);
  CHECK_THROWS_AS(to_dataset(csv(text), R"({"age": "ordinal"})"), InputError);
  CHECK_THROWS_AS(to_dataset(csv(text), R"({"os": {"kind": "survival", "time": "t"}})"), InputError);
  CHECK_THROWS_AS(to_dataset(csv(text), "{not json"), InputError);
  CHECK_THROWS_AS(to_dataset(csv("t,e\n1,2\n2,0\n3,1\n"), R"({"os": {"kind": "survival", "time": "t", "status": "e"}})"),
                  InputError);
}

TEST_CASE("missing values and malformed tables are rejected") {
  CHECK_THROWS_AS(to_dataset(csv("a,b\n1,\n2,3\n")), InputError);
  CHECK_THROWS_AS(to_dataset(csv("a,b\n1,NA\n2,3\n")), InputError);
  CHECK_THROWS_AS(to_dataset(csv("a,a\n1,2\n")), InputError);
  CHECK_THROWS_AS(to_dataset(csv("a,b\n")), InputError);
  CHECK_THROWS_AS(to_dataset(csv("a,b\nx,1\ny,2\n"), R"({"a": "continuous"})"), InputError);
}

TEST_CASE("dataset CSV round trip") {
  std::mt19937_64 rng(1);
  Dataset d = testing::continuous_dataset(testing::gaussian_matrix(20, 3, rng));
  std::ostringstream os;
  write_dataset_csv(os, d);
  auto back = to_dataset(csv(os.str()));
  CHECK(back.names() == d.names());
  CHECK(back.values() == d.values());
}

TEST_CASE("pp JSON") {
  auto pp = parse_pp_json(R"({"X1": ["X2", "X4"], "X3": []})");
  CHECK(pp.at("X1") == std::vector<std::string>{"X2", "X4"});
  CHECK(pp.at("X3").empty());
  CHECK_THROWS_AS(parse_pp_json(R"({"X1": "X2"})"), InputError);
  CHECK_THROWS_AS(parse_pp_json("[1]"), InputError);
}

TEST_CASE("edge list round trip keeps isolated nodes") {
  Dag d{{"a", "b,c", "d"}, {NodeSubset(3), NodeSubset(3, {0}), NodeSubset(3)}};
  std::ostringstream os;
  write_edge_list(os, d);
  std::istringstream in(os.str());
  auto back = parse_edge_list(in);
  CHECK(back.names == d.names);
  CHECK(back.parents == d.parents);
  std::istringstream bad("source,target\na,b\n");
  CHECK_THROWS_AS(parse_edge_list(bad), InputError);
  std::istringstream loop("from,to\na,a\n");
  CHECK_THROWS_AS(parse_edge_list(loop), InputError);
}

TEST_CASE("networks JSON round trip") {
  Network net;
  net.parents = {NodeSubset(3), NodeSubset(3, {0}), NodeSubset(3, {0, 1})};
  net.local_scores = {-1.5, -2.25, scoring::kNegInf};
  net.ordering = {0, 1, 2};
  net.total_score = scoring::kNegInf;
  NetworksFile f;
  f.variables = {"a", "b", "c", "unused"};
  f.feas_set = {"a", "b", "c"};
  f.outcome = "c";
  f.networks.push_back(to_record(net, {"a", "b", "c"}));
  const std::string text = networks_json(f);
  auto back = parse_networks_json(text);
  CHECK(back.variables == f.variables);
  CHECK(back.outcome == "c");
  REQUIRE(back.networks.size() == 1);
  const auto& r = back.networks.front();
  CHECK(r.ordering == std::vector<std::string>{"a", "b", "c"});
  CHECK(r.local_scores[1] == -2.25);
  CHECK(std::isinf(r.local_scores[2]));
  CHECK(r.as_dag().parents == net.parents);
  // Edges are listed parent to child.
  const auto j = nlohmann::json::parse(text);
  CHECK(j["networks"][0]["edges"].size() == 3);
  CHECK(j["networks"][0]["edges"][0]["from"] == "a");
  CHECK(j["networks"][0]["edges"][0]["to"] == "b");
  CHECK(networks_json(back) == text);
  CHECK_THROWS_AS(parse_networks_json("{}"), InputError);
}

TEST_CASE("DOT output") {
  NetworkRecord r;
  r.nodes = {"a", "y"};
  r.parents = {{}, {"a"}};
  std::ostringstream os;
  write_dot(os, r, std::string("y"));
  const std::string dot = os.str();
  CHECK(dot.find("\"a\" -> \"y\";") != std::string::npos);
  CHECK(dot.find("\"y\" [shape=doublecircle") != std::string::npos);
  CHECK(dot.rfind("digraph", 0) == 0);
}

TEST_CASE("score table JSON round trip") {
  std::mt19937_64 rng(2);
  Dataset d = testing::continuous_dataset(testing::gaussian_matrix(30, 4, rng));
  auto c = ParentConstraints::from_pp(testing::lattice_example_pp(), 2);
  auto table = scoring::compute_local_scores(d, c, scoring::ScoreConfig{});
  table.insert(3, NodeSubset(4, {0}), scoring::kNegInf);
  auto back = parse_scores_json(scores_json(table, d.names()), d.names());
  CHECK(back.size() == table.size());
  for (int v = 0; v < 4; ++v)
    for (std::size_t k = 0; k < table.node(v).keys.size(); ++k)
      CHECK(back.at(v, table.node(v).keys[k]) == table.node(v).scores[k]);
}

TEST_CASE("lattice and report JSON") {
  auto levels = std::vector<std::vector<NodeSubset>>{{NodeSubset(2, {0}), NodeSubset(2, {1})}, {NodeSubset(2, {0, 1})}};
  const auto lj = nlohmann::json::parse(lattice_json(levels, {"a", "b"}));
  CHECK(lj.dump().find("\"a\"") != std::string::npos);
  engine::RunReport r;
  r.stage_ms = {{"screen", 1.5}};
  CHECK(report_json(r, false).find("stage_ms") == std::string::npos);
  CHECK(report_json(r, true).find("stage_ms") != std::string::npos);
}

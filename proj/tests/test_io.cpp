#include "sadgraph/error.hpp"
#include "sadgraph/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <regex>

using namespace sadgraph;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sadgraph_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::size_t count_edges(const std::string& dot) {
  const std::regex edge("->");
  return static_cast<std::size_t>(std::distance(std::sregex_iterator(dot.begin(), dot.end(), edge), std::sregex_iterator()));
}

}  // namespace

TEST_CASE("run configuration round-trips through JSON") {
  RunConfig c;
  c.data_dir = "data";
  c.seed = 17;
  c.subgroup.sex = 0;
  c.subgroup.age_above = 60.0;
  c.model.depth = 3;
  c.model.link = LinkKind::linear;
  c.selection.criterion = Criterion::auc;
  c.selection.max_iter_grid = {10, 20};
  c.inference.s = 7.5;
  c.inference.aggregation = LagAggregation::max_abs;
  c.clustering.linkage = Linkage::complete;
  c.clustering.d = 4;
  const Json j = to_json(c);
  const RunConfig back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.subgroup.sex == 0);
  CHECK(back.clustering.d == 4u);
}

TEST_CASE("run configuration keeps defaults and rejects unknown keys") {
  const RunConfig d = run_config_from_json(Json::object());
  CHECK(to_json(d) == to_json(RunConfig{}));
  Json bad = to_json(RunConfig{});
  bad["model"]["colour"] = "blue";
  CHECK_THROWS_AS((void)run_config_from_json(bad), ConfigError);
  Json top = Json::object();
  top["unknown"] = 1;
  CHECK_THROWS_AS((void)run_config_from_json(top), ConfigError);
}

TEST_CASE("run configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.inference.epsilon = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("graph format names") {
  CHECK(parse_graph_format("dot") == GraphFormat::dot);
  CHECK(parse_graph_format("json") == GraphFormat::json);
  CHECK_THROWS_AS((void)parse_graph_format("graphml"), ConfigError);
}

TEST_CASE("DOT export of a two-node graph") {
  GraphExport g;
  g.nodes = {"Shock", "Renal Injury"};
  g.edges.push_back({0, 1, 0.4, std::nullopt, std::nullopt, true});
  const auto dot = export_dot(g);
  CHECK(count_edges(dot) == 1);
  CHECK(dot.find("\"Shock\" -> \"Renal Injury\"") != std::string::npos);
  g.edges.push_back({1, 0, -0.3, std::nullopt, std::nullopt, true});
  const auto both = export_dot(g);
  CHECK(count_edges(both) == 2);
  CHECK(both.find("color=\"red\"") != std::string::npos);
  CHECK(both.find("style=\"dashed\"") != std::string::npos);
  CHECK(both.find("color=\"blue\"") != std::string::npos);
}

TEST_CASE("graph JSON round-trips") {
  std::mt19937_64 rng(91);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    GraphExport g;
    for (int k = 0; k < 4; ++k) g.nodes.push_back("node " + std::to_string(k));
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t t = 0; t < 4; ++t)
        if ((s + t + static_cast<std::size_t>(trial)) % 3 == 0) {
          GraphEdge e{s, t, n(rng), std::nullopt, std::nullopt, true};
          if (trial % 2) {
            e.lower = e.weight - 0.1;
            e.upper = e.weight + 0.1;
            e.exists = n(rng) > 0;
          }
          g.edges.push_back(e);
        }
    CHECK(import_graph_json(export_json(g)) == g);
  }
}

TEST_CASE("graph from adjacency keeps nonzero entries") {
  Adjacency adj;
  adj.weights = Eigen::Matrix2d::Zero();
  adj.weights(1, 0) = 0.5;
  adj.labels = {"a", "b"};
  const auto g = graph_from_adjacency(adj);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].source == 0);
  CHECK(g.edges[0].target == 1);
  CHECK(g.edges[0].weight == 0.5);
}

TEST_CASE("graph from bootstrap intervals applies the threshold") {
  BootstrapResult r;
  r.nodes = 2;
  r.replicates = 10;
  r.edges = {{0, 0, -0.1, 0.1, 0.0, false, 0.0},
             {1, 0, 0.1, 0.3, 0.2, true, 0.2},
             {0, 1, 0.05, 0.2, 0.12, true, 0.12},
             {1, 1, -0.5, -0.2, -0.3, true, -0.3}};
  const auto g = graph_from_intervals(r, {"a", "b"}, 0.15);
  REQUIRE(g.edges.size() == 2);
  for (const auto& e : g.edges) {
    CHECK(std::abs(e.weight) > 0.15);
    CHECK(e.lower.has_value());
  }
}

TEST_CASE("theta JSON round-trips") {
  ThetaVector t(ThetaLayout(2, 1, 1, 2, std::vector<FeatureId>{{FeatureKind::node, 1}, {FeatureKind::exogenous, 0}}));
  t.values() << 0.1, 0.2, 0.3, -0.4, 0.5;
  PatientPanel names;
  names.y_names = {"a", "b"};
  names.x_names = {"x"};
  names.z_names = {"z"};
  const auto back = theta_from_json(to_json(t, names));
  CHECK(back.layout() == t.layout());
  CHECK(back.values() == t.values());
}

TEST_CASE("selected features come from the trace's final subset") {
  SelectionTrace trace;
  trace.initial_subset = {{FeatureKind::node, 0}};
  trace.steps = {{{FeatureKind::exogenous, 1}, 0.7}};
  trace.final_subset = {{FeatureKind::exogenous, 1}, {FeatureKind::node, 0}};
  PatientPanel names;
  names.y_names = {"a"};
  names.x_names = {"x1", "x2"};
  CHECK(selected_features(to_json(trace, names)) == trace.final_subset);
}

TEST_CASE("panel archives round-trip") {
  auto spec = SimulationSpec::zeros(2, 1, 1, 1, 20);
  spec.z(0) = 0.5;
  const auto panels = simulate_panels(spec, 3, 1);
  const auto dir = scratch_dir("archive");
  write_panel_archive(dir, panels);
  const auto back = read_panel_archive(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back[k].id == panels[k].id);
    CHECK(back[k].y == panels[k].y);
    CHECK(back[k].x.isApprox(panels[k].x, 1e-15));
    CHECK(back[k].z == panels[k].z);
  }
  CHECK_THROWS_AS((void)read_panel_archive(scratch_dir("missing")), ConfigError);
  std::filesystem::remove_all(dir);
}

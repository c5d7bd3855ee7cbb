#include "sadgraph/io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using sadgraph::Json;

namespace {

const fs::path kFixtures = fs::path(SADGRAPH_TEST_FIXTURES) / "psv";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sadgraph_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

/// Runs the CLI with the given arguments; stderr goes to `err` when given.
int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string("\"") + SADGRAPH_CLI + "\" " + args + " > /dev/null";
  cmd += err.empty() ? " 2> /dev/null" : " 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const std::string kSimFlags =
    " --nodes 3 --exogenous 1 --patients 20 --length 200 --seed 3 --link linear --baseline 0.1"
    " --edge-probability 0.7 --edge-scale 0.9 --decay 0.5";

}  // namespace

TEST_CASE("ingest of an empty directory is a usage error") {
  const auto dir = scratch("empty");
  fs::create_directories(dir / "in");
  CHECK(run("ingest --data-dir " + q(dir / "in") + " --out " + q(dir / "out")) == 2);
}

TEST_CASE("ingest reports per-file row counts") {
  const auto dir = scratch("ingest");
  REQUIRE(run("ingest --data-dir " + q(kFixtures) + " --out " + q(dir)) == 0);
  const Json report = load(dir / "ingest_report.json");
  CHECK(report.at("patients") == 3);
  CHECK(report.at("failed") == 0);
  std::size_t rows = 0;
  for (const auto& f : report.at("per_file")) {
    std::ifstream in(kFixtures / f.at("file").get<std::string>());
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) ++lines;
    CHECK(f.at("rows").get<std::size_t>() == lines - 1);
    rows += f.at("rows").get<std::size_t>();
  }
  CHECK(report.at("rows_before").get<std::size_t>() == rows);
  CHECK(fs::exists(dir / "manifest_ingest.json"));
}

TEST_CASE("subgroup flags keep the matching patients") {
  const auto dir = scratch("subgroup");
  REQUIRE(run("ingest --data-dir " + q(kFixtures) + " --out " + q(dir) + " --sex 0 --age-above 60") == 0);
  const auto panels = sadgraph::read_panel_archive(dir / "archive");
  REQUIRE(panels.size() == 2);
  CHECK(panels[0].id == "p000001");
  CHECK(panels[1].id == "p000003");
}

TEST_CASE("simulate then fit reports the error bound against the truth") {
  const auto dir = scratch("fit");
  REQUIRE(run("simulate --out " + q(dir) + kSimFlags) == 0);
  REQUIRE(run("fit --out " + q(dir) + " --link linear") == 0);
  const Json fit = load(dir / "fit.json");
  REQUIRE(fit.at("nodes").size() == 3);
  for (const auto& node : fit.at("nodes")) {
    REQUIRE(node.contains("within_bound"));
    CHECK(node.at("within_bound").get<bool>());
    CHECK(node.at("converged").get<bool>());
  }
}

TEST_CASE("fit with a selection trace uses exactly the selected features") {
  const auto dir = scratch("features");
  REQUIRE(run("simulate --out " + q(dir) + kSimFlags) == 0);
  const Json feature = {{"kind", "node"}, {"index", 1}, {"name", "node2"}};
  const Json trace = {{"target", 0},
                      {"target_name", "node1"},
                      {"criterion", "auc"},
                      {"initial_subset", Json::array({feature})},
                      {"initial_value", 0.6},
                      {"steps", Json::array()},
                      {"final_subset", Json::array({feature})},
                      {"fits", 1}};
  std::ofstream(dir / "trace.json") << trace.dump(2);
  REQUIRE(run("fit --out " + q(dir) + " --link linear --features " + q(dir / "trace.json")) == 0);
  const Json fit = load(dir / "fit.json");
  const auto& coefs = fit.at("nodes").at(0).at("coefficients");
  REQUIRE(coefs.size() == 2);
  CHECK(coefs.at(0).at("name") == "nu");
  CHECK(coefs.at(1).at("name") == "node2");
  CHECK(fit.at("nodes").at(1).at("coefficients").size() == 5);
}

TEST_CASE("bootstrap graph keeps only edges above the threshold") {
  const auto dir = scratch("bootstrap");
  REQUIRE(run("simulate --out " + q(dir) + kSimFlags) == 0);
  REQUIRE(run("bootstrap --out " + q(dir) + " --link linear --replicates 20 --threshold 0.15 --format json") == 0);
  const Json graph = load(dir / "graph.json");
  CHECK_FALSE(graph.at("edges").empty());
  for (const auto& e : graph.at("edges")) {
    CHECK(std::abs(e.at("weight").get<double>()) > 0.15);
    CHECK(e.at("lower").get<double>() <= e.at("weight").get<double>());
    CHECK(e.at("weight").get<double>() <= e.at("upper").get<double>());
  }
}

TEST_CASE("identical runs produce byte-identical outputs") {
  std::vector<fs::path> dirs{scratch("repeat_a"), scratch("repeat_b")};
  for (const auto& dir : dirs) {
    REQUIRE(run("simulate --out " + q(dir) + kSimFlags) == 0);
    REQUIRE(run("select --out " + q(dir) + " --link linear --node 0 --criterion auc") == 0);
    REQUIRE(run("fit --out " + q(dir) + " --link linear --features " + q(dir / "selection_0.json")) == 0);
    REQUIRE(run("bootstrap --out " + q(dir) + " --link linear --replicates 10 --threshold 0.15 --format dot") == 0);
    REQUIRE(run("cluster --out " + q(dir) + " --clusters 2") == 0);
  }
  for (const std::string name :
       {"ground_truth.json", "selection_0.json", "fit.json", "bootstrap.json", "graph.dot", "cluster.json"})
    CHECK_MESSAGE(slurp(dirs[0] / name) == slurp(dirs[1] / name), name);
  for (const auto& e : fs::recursive_directory_iterator(dirs[0] / "archive"))
    if (e.is_regular_file())
      CHECK(slurp(e.path()) == slurp(dirs[1] / "archive" / fs::relative(e.path(), dirs[0] / "archive")));
}

TEST_CASE("unknown graph format is a usage error") {
  const auto dir = scratch("format");
  REQUIRE(run("simulate --out " + q(dir) + kSimFlags) == 0);
  CHECK(run("bootstrap --out " + q(dir) + " --replicates 5 --format graphml") == 2);
  CHECK(run("export_graph --out " + q(dir) + " --format graphml") == 2);
}

TEST_CASE("a missing archive names the command that produces it") {
  const auto dir = scratch("missing");
  const fs::path err = dir / "stderr.txt";
  CHECK(run("fit --out " + q(dir / "nowhere"), err) == 2);
  const std::string msg = slurp(err);
  CHECK(msg.find("ingest") != std::string::npos);
  CHECK(msg.find("simulate") != std::string::npos);
  CHECK(run("blockmodel --out " + q(dir / "nowhere"), err) == 2);
  CHECK(slurp(err).find("export_graph") != std::string::npos);
}

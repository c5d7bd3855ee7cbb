#pragma once

// Structured-text reports (JSON with stable key order), graph exports, panel
// archives and the run configuration.

#include "sadgraph/graph.hpp"
#include "sadgraph/inference.hpp"
#include "sadgraph/model.hpp"
#include "sadgraph/selection.hpp"
#include "sadgraph/vi.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sadgraph {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string data_dir;
  std::string output_dir{"out"};
  std::uint64_t seed{0};

  struct Subgroup {
    std::optional<int> sex;
    std::optional<double> age_above;
  } subgroup;

  struct Ingest {
    int horizon_hours{24};
    int window_hours{6};
    bool include_demographics{false};
  } ingest;

  struct Model {
    std::size_t depth{1};
    LinkKind link{LinkKind::sigmoid};
    double link_bound{10.0};
    double theta_max{100.0};
    bool class_weighting{false};
  } model;

  struct Solver {
    double tol{1e-8};
    int max_iter{5000};
    SolverMetric metric{SolverMetric::gram};
  } solver;

  CvConfig selection{};

  struct Inference {
    double epsilon{0.1};
    std::optional<double> s;
    double ci_level{0.9};
    std::size_t replicates{1000};
    double level{0.9};
    double threshold{0.15};
    LagAggregation aggregation{LagAggregation::sum};
  } inference;

  struct Clustering {
    Linkage linkage{Linkage::average};
    double far_constant{1e3};
    std::size_t K{2};
    std::size_t depth{2};
    std::size_t min_block_size{4};
    std::optional<std::size_t> d;
    double threshold{0.15};
  } clustering;

  struct Simulation {
    std::size_t nodes{3};
    std::size_t exogenous{1};
    std::size_t statics{0};
    std::size_t patients{10};
    std::size_t length{200};
    double edge_probability{0.3};
    double edge_scale{1.0};
    double baseline{-1.5};
    double decay{0.5};
  } simulation;

  [[nodiscard]] NodeFitConfig fit_config() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

[[nodiscard]] Json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
[[nodiscard]] RunConfig run_config_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Reports

[[nodiscard]] std::string feature_name(const PatientPanel& names, FeatureId f);
[[nodiscard]] Json to_json(FeatureId f, const PatientPanel& names);
[[nodiscard]] FeatureId feature_from_json(const Json& j);

/// Layout, flat values and a named coefficient table.
[[nodiscard]] Json to_json(const ThetaVector& theta, const PatientPanel& names);
[[nodiscard]] ThetaVector theta_from_json(const Json& j);

[[nodiscard]] Json to_json(const BoundReport& report);
[[nodiscard]] Json to_json(const Interval& interval);
[[nodiscard]] Json to_json(const SelectionTrace& trace, const PatientPanel& names);
/// Final subset of a trace.
[[nodiscard]] std::vector<FeatureId> selected_features(const Json& trace);
[[nodiscard]] Json to_json(const Dendrogram& tree, const std::vector<std::string>& labels);
[[nodiscard]] Json to_json(const BlockClustering& blocks, const std::vector<std::string>& labels);

// ---------------------------------------------------------------------------
// Graph export

struct GraphEdge {
  std::size_t source{0};
  std::size_t target{0};
  double weight{0.0};
  std::optional<double> lower;
  std::optional<double> upper;
  bool exists{true};

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct GraphExport {
  std::vector<std::string> nodes;
  std::vector<GraphEdge> edges;

  friend bool operator==(const GraphExport&, const GraphExport&) = default;
};

enum class GraphFormat { dot, json };

[[nodiscard]] GraphFormat parse_graph_format(std::string_view name);

/// Nonzero entries of the node adjacency, source j -> target i.
[[nodiscard]] GraphExport graph_from_adjacency(const Adjacency& adjacency);
/// Existing bootstrap edges whose |weight| exceeds `threshold`.
[[nodiscard]] GraphExport graph_from_intervals(const BootstrapResult& result, const std::vector<std::string>& labels,
                                               double threshold);

/// Directed DOT; positive edges blue and solid, negative edges red and dashed.
[[nodiscard]] std::string export_dot(const GraphExport& graph);
[[nodiscard]] std::string export_json(const GraphExport& graph);
[[nodiscard]] GraphExport import_graph_json(const std::string& text);
[[nodiscard]] std::string export_graph(const GraphExport& graph, GraphFormat format);

// ---------------------------------------------------------------------------
// Panel archives: a directory of panel PSV files listed in archive.json.

void write_panel_archive(const std::filesystem::path& dir, const std::vector<PatientPanel>& panels,
                         const Json& extra = Json::object());
/// Throws ConfigError when the directory is not an archive.
[[nodiscard]] std::vector<PatientPanel> read_panel_archive(const std::filesystem::path& dir);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace sadgraph

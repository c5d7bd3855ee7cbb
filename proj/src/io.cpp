#include "sadgraph/io.hpp"

#include "sadgraph/error.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace sadgraph {

namespace {

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& field) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for config key '") + key + "': " + e.what());
  }
}

template <typename T>
void read(const Json& obj, const char* key, std::optional<T>& field) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    field.reset();
    return;
  }
  T v{};
  read(obj, key, v);
  field = v;
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string metric_name(SolverMetric m) { return m == SolverMetric::gram ? "gram" : "euclidean"; }

SolverMetric parse_metric(std::string_view name) {
  if (name == "gram") return SolverMetric::gram;
  if (name == "euclidean") return SolverMetric::euclidean;
  throw ConfigError("unknown solver metric '" + std::string(name) + "'");
}

std::string kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::static_covariate: return "static";
    case FeatureKind::exogenous: return "exogenous";
    case FeatureKind::node: return "node";
  }
  return "node";
}

FeatureKind parse_kind(std::string_view name) {
  if (name == "static") return FeatureKind::static_covariate;
  if (name == "exogenous") return FeatureKind::exogenous;
  if (name == "node") return FeatureKind::node;
  throw ConfigError("unknown feature kind '" + std::string(name) + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

NodeFitConfig RunConfig::fit_config() const {
  NodeFitConfig c;
  c.depth = model.depth;
  c.link = model.link;
  c.link_bound = model.link_bound;
  c.theta_max = model.theta_max;
  c.class_weighting = model.class_weighting;
  c.solver.tol = solver.tol;
  c.solver.max_iter = solver.max_iter;
  c.solver.metric = solver.metric;
  return c;
}

void RunConfig::validate() const {
  if (model.depth < 1) throw ConfigError("model.depth must be >= 1");
  if (!(model.link_bound > 0.0)) throw ConfigError("model.link_bound must be positive");
  if (!(model.theta_max > 0.0)) throw ConfigError("model.theta_max must be positive");
  if (!(solver.tol > 0.0) || solver.max_iter < 1) throw ConfigError("solver tol/max_iter must be positive");
  selection.validate();
  if (!(inference.epsilon > 0.0 && inference.epsilon < 1.0)) throw ConfigError("inference.epsilon must lie in (0,1)");
  if (inference.s && !(*inference.s > 1.0)) throw ConfigError("inference.s must exceed 1");
  if (!(inference.ci_level > 0.0 && inference.ci_level < 1.0)) throw ConfigError("inference.ci_level must lie in (0,1)");
  if (inference.replicates < 2) throw ConfigError("inference.replicates must be >= 2");
  if (!(inference.level > 0.0 && inference.level < 1.0)) throw ConfigError("inference.level must lie in (0,1)");
  if (!(inference.threshold >= 0.0) || !(clustering.threshold >= 0.0)) throw ConfigError("thresholds must be >= 0");
  if (clustering.K < 1 || clustering.depth < 1) throw ConfigError("clustering K and depth must be >= 1");
  if (!(clustering.far_constant > 0.0)) throw ConfigError("clustering.far_constant must be positive");
  if (ingest.horizon_hours < 0 || ingest.window_hours < 1) throw ConfigError("ingest hours out of range");
  if (simulation.nodes < 1 || simulation.patients < 1 || simulation.length < 1)
    throw ConfigError("simulation sizes must be positive");
  if (!(simulation.edge_probability >= 0.0 && simulation.edge_probability <= 1.0))
    throw ConfigError("simulation.edge_probability must lie in [0,1]");
  if (!(simulation.decay > 0.0)) throw ConfigError("simulation.decay must be positive");
}

Json to_json(const RunConfig& c) {
  Json j;
  j["data_dir"] = c.data_dir;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["subgroup"] = {{"sex", optional_json(c.subgroup.sex)}, {"age_above", optional_json(c.subgroup.age_above)}};
  j["ingest"] = {{"horizon_hours", c.ingest.horizon_hours},
                 {"window_hours", c.ingest.window_hours},
                 {"include_demographics", c.ingest.include_demographics}};
  j["model"] = {{"depth", c.model.depth},
                {"link", to_string(c.model.link)},
                {"link_bound", c.model.link_bound},
                {"theta_max", c.model.theta_max},
                {"class_weighting", c.model.class_weighting}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"metric", metric_name(c.solver.metric)}};
  j["selection"] = {{"criterion", to_string(c.selection.criterion)},
                    {"split", c.selection.split},
                    {"threshold", c.selection.threshold},
                    {"class_weighting", c.selection.class_weighting},
                    {"max_iter_grid", c.selection.max_iter_grid},
                    {"min_gain", c.selection.min_gain}};
  j["inference"] = {{"epsilon", c.inference.epsilon},
                    {"s", optional_json(c.inference.s)},
                    {"ci_level", c.inference.ci_level},
                    {"replicates", c.inference.replicates},
                    {"level", c.inference.level},
                    {"threshold", c.inference.threshold},
                    {"aggregation", to_string(c.inference.aggregation)}};
  j["clustering"] = {{"linkage", to_string(c.clustering.linkage)},
                     {"far_constant", c.clustering.far_constant},
                     {"K", c.clustering.K},
                     {"depth", c.clustering.depth},
                     {"min_block_size", c.clustering.min_block_size},
                     {"d", optional_json(c.clustering.d)},
                     {"threshold", c.clustering.threshold}};
  j["simulation"] = {{"nodes", c.simulation.nodes},
                     {"exogenous", c.simulation.exogenous},
                     {"statics", c.simulation.statics},
                     {"patients", c.simulation.patients},
                     {"length", c.simulation.length},
                     {"edge_probability", c.simulation.edge_probability},
                     {"edge_scale", c.simulation.edge_scale},
                     {"baseline", c.simulation.baseline},
                     {"decay", c.simulation.decay}};
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  check_keys(j,
             {"data_dir", "output_dir", "seed", "subgroup", "ingest", "model", "solver", "selection", "inference",
              "clustering", "simulation"},
             "config");
  read(j, "data_dir", c.data_dir);
  read(j, "output_dir", c.output_dir);
  read(j, "seed", c.seed);
  if (j.contains("subgroup")) {
    const auto& s = j["subgroup"];
    check_keys(s, {"sex", "age_above"}, "subgroup");
    read(s, "sex", c.subgroup.sex);
    read(s, "age_above", c.subgroup.age_above);
  }
  if (j.contains("ingest")) {
    const auto& s = j["ingest"];
    check_keys(s, {"horizon_hours", "window_hours", "include_demographics"}, "ingest");
    read(s, "horizon_hours", c.ingest.horizon_hours);
    read(s, "window_hours", c.ingest.window_hours);
    read(s, "include_demographics", c.ingest.include_demographics);
  }
  if (j.contains("model")) {
    const auto& s = j["model"];
    check_keys(s, {"depth", "link", "link_bound", "theta_max", "class_weighting"}, "model");
    read(s, "depth", c.model.depth);
    std::string link = to_string(c.model.link);
    read(s, "link", link);
    c.model.link = parse_link_kind(link);
    read(s, "link_bound", c.model.link_bound);
    read(s, "theta_max", c.model.theta_max);
    read(s, "class_weighting", c.model.class_weighting);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"tol", "max_iter", "metric"}, "solver");
    read(s, "tol", c.solver.tol);
    read(s, "max_iter", c.solver.max_iter);
    std::string metric = metric_name(c.solver.metric);
    read(s, "metric", metric);
    c.solver.metric = parse_metric(metric);
  }
  if (j.contains("selection")) {
    const auto& s = j["selection"];
    check_keys(s, {"criterion", "split", "threshold", "class_weighting", "max_iter_grid", "min_gain"}, "selection");
    std::string crit = to_string(c.selection.criterion);
    read(s, "criterion", crit);
    c.selection.criterion = parse_criterion(crit);
    read(s, "split", c.selection.split);
    read(s, "threshold", c.selection.threshold);
    read(s, "class_weighting", c.selection.class_weighting);
    read(s, "max_iter_grid", c.selection.max_iter_grid);
    read(s, "min_gain", c.selection.min_gain);
  }
  if (j.contains("inference")) {
    const auto& s = j["inference"];
    check_keys(s, {"epsilon", "s", "ci_level", "replicates", "level", "threshold", "aggregation"}, "inference");
    read(s, "epsilon", c.inference.epsilon);
    read(s, "s", c.inference.s);
    read(s, "ci_level", c.inference.ci_level);
    read(s, "replicates", c.inference.replicates);
    read(s, "level", c.inference.level);
    read(s, "threshold", c.inference.threshold);
    std::string agg = to_string(c.inference.aggregation);
    read(s, "aggregation", agg);
    c.inference.aggregation = parse_lag_aggregation(agg);
  }
  if (j.contains("clustering")) {
    const auto& s = j["clustering"];
    check_keys(s, {"linkage", "far_constant", "K", "depth", "min_block_size", "d", "threshold"}, "clustering");
    std::string linkage = to_string(c.clustering.linkage);
    read(s, "linkage", linkage);
    c.clustering.linkage = parse_linkage(linkage);
    read(s, "far_constant", c.clustering.far_constant);
    read(s, "K", c.clustering.K);
    read(s, "depth", c.clustering.depth);
    read(s, "min_block_size", c.clustering.min_block_size);
    read(s, "d", c.clustering.d);
    read(s, "threshold", c.clustering.threshold);
  }
  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_keys(s,
               {"nodes", "exogenous", "statics", "patients", "length", "edge_probability", "edge_scale", "baseline",
                "decay"},
               "simulation");
    read(s, "nodes", c.simulation.nodes);
    read(s, "exogenous", c.simulation.exogenous);
    read(s, "statics", c.simulation.statics);
    read(s, "patients", c.simulation.patients);
    read(s, "length", c.simulation.length);
    read(s, "edge_probability", c.simulation.edge_probability);
    read(s, "edge_scale", c.simulation.edge_scale);
    read(s, "baseline", c.simulation.baseline);
    read(s, "decay", c.simulation.decay);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

std::string feature_name(const PatientPanel& names, FeatureId f) {
  const auto pick = [&](const std::vector<std::string>& v, const char* fallback) {
    return f.index < v.size() ? v[f.index] : fallback + std::to_string(f.index + 1);
  };
  switch (f.kind) {
    case FeatureKind::static_covariate: return pick(names.z_names, "static");
    case FeatureKind::exogenous: return pick(names.x_names, "exo");
    case FeatureKind::node: return pick(names.y_names, "node");
  }
  return "?";
}

Json to_json(FeatureId f, const PatientPanel& names) {
  return {{"kind", kind_name(f.kind)}, {"index", f.index}, {"name", feature_name(names, f)}};
}

FeatureId feature_from_json(const Json& j) {
  try {
    return {parse_kind(j.at("kind").get<std::string>()), j.at("index").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad feature entry: ") + e.what());
  }
}

Json to_json(const ThetaVector& theta, const PatientPanel& names) {
  const auto& layout = theta.layout();
  Json features = Json::array();
  for (const auto& f : layout.features()) features.push_back(to_json(f, names));
  Json table = Json::array();
  table.push_back({{"name", "nu"}, {"lag", 0}, {"value", theta.nu()}});
  for (const auto& f : layout.features()) {
    const std::size_t off = *layout.offset(f);
    if (f.kind == FeatureKind::static_covariate) {
      table.push_back({{"name", feature_name(names, f)}, {"lag", 0}, {"value", theta.values()(static_cast<Eigen::Index>(off))}});
      continue;
    }
    for (std::size_t lag = 1; lag <= layout.depth(); ++lag)
      table.push_back({{"name", feature_name(names, f)},
                       {"lag", lag},
                       {"value", theta.values()(static_cast<Eigen::Index>(off + lag - 1))}});
  }
  std::vector<double> values(theta.values().data(), theta.values().data() + theta.values().size());
  return {{"layout",
           {{"nodes", layout.nodes()},
            {"exogenous", layout.exogenous()},
            {"statics", layout.statics()},
            {"depth", layout.depth()},
            {"features", features}}},
          {"values", values},
          {"coefficients", table}};
}

ThetaVector theta_from_json(const Json& j) {
  try {
    const auto& l = j.at("layout");
    std::vector<FeatureId> features;
    for (const auto& f : l.at("features")) features.push_back(feature_from_json(f));
    const ThetaLayout layout(l.at("nodes").get<std::size_t>(), l.at("exogenous").get<std::size_t>(),
                             l.at("statics").get<std::size_t>(), l.at("depth").get<std::size_t>(), features);
    const auto values = j.at("values").get<std::vector<double>>();
    return ThetaVector(layout, Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad theta entry: ") + e.what());
  }
}

Json to_json(const BoundReport& r) {
  return {{"epsilon", r.epsilon},         {"delta_inf_bound", r.delta_inf_bound},
          {"delta_l2_bound", r.delta_l2_bound}, {"theta_error_bound", r.theta_error_bound},
          {"m_g", r.m_g},                 {"M_w", r.M_w},
          {"lambda1", r.lambda1},         {"N", r.N},
          {"T", r.T},                     {"kappa", r.kappa}};
}

Json to_json(const Interval& i) {
  return {{"lower", i.lower},
          {"upper", i.upper},
          {"infeasible", i.infeasible},
          {"conservative", i.conservative},
          {"duality_gap", i.duality_gap},
          {"nominal_level", i.nominal_level},
          {"clamped_radicands", i.clamped_radicands}};
}

Json to_json(const SelectionTrace& trace, const PatientPanel& names) {
  Json initial = Json::array(), final_subset = Json::array(), steps = Json::array();
  for (const auto& f : trace.initial_subset) initial.push_back(to_json(f, names));
  for (const auto& f : trace.final_subset) final_subset.push_back(to_json(f, names));
  for (const auto& s : trace.steps) steps.push_back({{"feature", to_json(s.feature, names)}, {"value", s.value}});
  return {{"target", trace.target},
          {"target_name", feature_name(names, {FeatureKind::node, trace.target})},
          {"criterion", to_string(trace.criterion)},
          {"initial_subset", initial},
          {"initial_value", trace.initial_value},
          {"steps", steps},
          {"final_subset", final_subset},
          {"fits", trace.fits}};
}

std::vector<FeatureId> selected_features(const Json& trace) {
  if (!trace.contains("final_subset")) throw ConfigError("selection trace has no final_subset");
  std::vector<FeatureId> out;
  for (const auto& f : trace.at("final_subset")) out.push_back(feature_from_json(f));
  return out;
}

Json to_json(const Dendrogram& tree, const std::vector<std::string>& labels) {
  const auto name = [&](std::size_t id) {
    return id < labels.size() ? labels[id] : "cluster" + std::to_string(id);
  };
  Json merges = Json::array();
  for (const auto& m : tree.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  Json order = Json::array();
  for (auto leaf : tree.leaf_order()) order.push_back(name(leaf));
  Json leaves = Json::array();
  for (std::size_t i = 0; i < tree.leaves; ++i) leaves.push_back(name(i));
  return {{"leaves", leaves}, {"merges", merges}, {"leaf_order", order}};
}

Json to_json(const BlockClustering& b, const std::vector<std::string>& labels) {
  const auto name = [&](std::size_t id) { return id < labels.size() ? labels[id] : "node" + std::to_string(id + 1); };
  Json blocks = Json::array();
  for (std::size_t k = 0; k < b.K; ++k) {
    Json members = Json::array();
    for (std::size_t q = 0; q < b.assignment.size(); ++q)
      if (b.assignment[q] == static_cast<int>(k)) members.push_back(name(b.members[q]));
    Json entry = {{"label", k < b.block_labels.size() ? b.block_labels[k] : std::to_string(k)}, {"members", members}};
    if (k < b.children.size() && !b.children[k].assignment.empty()) entry["children"] = to_json(b.children[k], labels);
    blocks.push_back(entry);
  }
  Json unassigned = Json::array();
  for (std::size_t q = 0; q < b.assignment.size(); ++q)
    if (b.assignment[q] < 0) unassigned.push_back(name(b.members[q]));
  std::vector<double> sv(b.singular_values.data(), b.singular_values.data() + b.singular_values.size());
  return {{"K", b.K},
          {"d", b.d},
          {"explained_variance_ratio", b.explained_variance_ratio},
          {"singular_values", sv},
          {"blocks", blocks},
          {"unassigned", unassigned},
          {"warnings", b.warnings}};
}

// ---------------------------------------------------------------------------

GraphFormat parse_graph_format(std::string_view name) {
  if (name == "dot") return GraphFormat::dot;
  if (name == "json") return GraphFormat::json;
  throw ConfigError("unknown graph format '" + std::string(name) + "' (expected dot or json)");
}

GraphExport graph_from_adjacency(const Adjacency& adjacency) {
  GraphExport g;
  g.nodes = adjacency.labels;
  for (Eigen::Index i = 0; i < adjacency.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < adjacency.weights.cols(); ++j)
      if (adjacency.weights(i, j) != 0.0)
        g.edges.push_back({static_cast<std::size_t>(j), static_cast<std::size_t>(i), adjacency.weights(i, j),
                           std::nullopt, std::nullopt, true});
  return g;
}

GraphExport graph_from_intervals(const BootstrapResult& result, const std::vector<std::string>& labels,
                                 double threshold) {
  GraphExport g;
  g.nodes = labels;
  for (const auto& e : result.edges)
    if (e.exists && std::abs(e.weight) > threshold)
      g.edges.push_back({e.source, e.target, e.weight, e.lower, e.upper, e.exists});
  return g;
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

std::string short_number(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::string export_dot(const GraphExport& graph) {
  std::ostringstream os;
  os << "digraph sadgraph {\n";
  for (const auto& n : graph.nodes) os << "  " << quoted(n) << ";\n";
  for (const auto& e : graph.edges) {
    if (e.source >= graph.nodes.size() || e.target >= graph.nodes.size())
      throw ValidationError("graph edge references an unknown node");
    const bool positive = e.weight >= 0.0;
    os << "  " << quoted(graph.nodes[e.source]) << " -> " << quoted(graph.nodes[e.target]) << " [label="
       << quoted(short_number(e.weight)) << ", color=" << (positive ? "\"blue\"" : "\"red\"")
       << ", style=" << (positive ? "\"solid\"" : "\"dashed\"") << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string export_json(const GraphExport& graph) {
  Json edges = Json::array();
  for (const auto& e : graph.edges) {
    if (e.source >= graph.nodes.size() || e.target >= graph.nodes.size())
      throw ValidationError("graph edge references an unknown node");
    edges.push_back({{"source", graph.nodes[e.source]},
                     {"target", graph.nodes[e.target]},
                     {"weight", e.weight},
                     {"lower", optional_json(e.lower)},
                     {"upper", optional_json(e.upper)},
                     {"exists", e.exists}});
  }
  Json j = {{"nodes", graph.nodes}, {"edges", edges}};
  return j.dump(2) + "\n";
}

GraphExport import_graph_json(const std::string& text) {
  GraphExport g;
  try {
    const Json j = Json::parse(text);
    g.nodes = j.at("nodes").get<std::vector<std::string>>();
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) index.emplace(g.nodes[k], k);
    for (const auto& e : j.at("edges")) {
      GraphEdge edge;
      const auto s = index.find(e.at("source").get<std::string>());
      const auto t = index.find(e.at("target").get<std::string>());
      if (s == index.end() || t == index.end()) throw ConfigError("graph edge references an unknown node");
      edge.source = s->second;
      edge.target = t->second;
      edge.weight = e.at("weight").get<double>();
      read(e, "lower", edge.lower);
      read(e, "upper", edge.upper);
      edge.exists = e.value("exists", true);
      g.edges.push_back(edge);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad graph JSON: ") + e.what(), 0);
  }
  return g;
}

std::string export_graph(const GraphExport& graph, GraphFormat format) {
  return format == GraphFormat::dot ? export_dot(graph) : export_json(graph);
}

// ---------------------------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_panel_archive(const std::filesystem::path& dir, const std::vector<PatientPanel>& panels, const Json& extra) {
  Json listing = Json::array();
  std::set<std::string> used;
  for (std::size_t k = 0; k < panels.size(); ++k) {
    std::string stem;
    for (char c : panels[k].id) stem.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
    std::ostringstream name;
    name << "panels/" << std::setw(5) << std::setfill('0') << k << '_' << stem << ".psv";
    std::ostringstream body;
    write_panel_psv(body, panels[k]);
    write_text(dir / name.str(), body.str());
    listing.push_back({{"id", panels[k].id}, {"file", name.str()}, {"length", panels[k].length()}});
  }
  Json j = {{"format", "sadgraph-panel-archive"}, {"version", 1}, {"panels", listing}};
  for (const auto& [key, value] : extra.items()) j[key] = value;
  write_text(dir / "archive.json", j.dump(2) + "\n");
}

std::vector<PatientPanel> read_panel_archive(const std::filesystem::path& dir) {
  const auto index = dir / "archive.json";
  if (!std::filesystem::exists(index))
    throw ConfigError("'" + dir.string() + "' is not a panel archive (run `ingest` or `simulate` first)");
  Json j;
  try {
    j = Json::parse(read_text(index));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad archive index: ") + e.what(), 0);
  }
  if (j.value("format", "") != "sadgraph-panel-archive") throw ConfigError("unrecognized archive format");
  std::vector<PatientPanel> panels;
  for (const auto& entry : j.at("panels")) {
    const auto file = dir / entry.at("file").get<std::string>();
    std::ifstream in(file);
    if (!in) throw ConfigError("archive lists missing panel file '" + file.string() + "'");
    panels.push_back(read_panel_psv(in, entry.at("id").get<std::string>()));
  }
  return panels;
}

}  // namespace sadgraph

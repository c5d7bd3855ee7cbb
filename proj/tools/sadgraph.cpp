// sadgraph command-line front end.
//
// Exit codes: 0 success, 1 computational failure, 2 usage or input error.

#include "sadgraph/error.hpp"
#include "sadgraph/graph.hpp"
#include "sadgraph/inference.hpp"
#include "sadgraph/ingest.hpp"
#include "sadgraph/io.hpp"
#include "sadgraph/model.hpp"
#include "sadgraph/random.hpp"
#include "sadgraph/selection.hpp"
#include "sadgraph/vi.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sadgraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// Hashing and manifests

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int{digest[k]};
  return os.str();
}

/// Records the files a command read and wrote, with their hashes.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config) : command_(std::move(command)), config_(to_json(config)) {}

  void input(const fs::path& path) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) inputs_[f.generic_string()] = sha256_hex(read_text(f));
      return;
    }
    inputs_[path.generic_string()] = sha256_hex(read_text(path));
  }

  void write(const fs::path& path, const std::string& text) {
    write_text(path, text);
    outputs_[path.generic_string()] = sha256_hex(text);
  }

  void write_json(const fs::path& path, const Json& j) { write(path, j.dump(2) + "\n"); }

  void finish(const fs::path& out_dir) const {
    Json j;
    j["command"] = command_;
    j["config_sha256"] = sha256_hex(config_.dump());
    j["config"] = config_;
    Json in = Json::array(), out = Json::array();
    for (const auto& [p, h] : inputs_) in.push_back({{"path", p}, {"sha256", h}});
    for (const auto& [p, h] : outputs_) out.push_back({{"path", p}, {"sha256", h}});
    j["inputs"] = in;
    j["outputs"] = out;
    write_text(out_dir / ("manifest_" + command_ + ".json"), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  Json config_;
  std::map<std::string, std::string> inputs_, outputs_;
};

// ---------------------------------------------------------------------------
// Flags mirroring RunConfig

struct Overrides {
  std::string config_file;
  std::optional<std::string> data_dir, output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> sex;
  std::optional<double> age_above;
  std::optional<int> horizon_hours, window_hours;
  std::optional<bool> include_demographics;
  std::optional<std::size_t> depth;
  std::optional<std::string> link;
  std::optional<double> link_bound, theta_max;
  std::optional<bool> class_weighting;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> metric;
  std::optional<std::string> criterion;
  std::optional<double> split, cv_threshold, min_gain;
  std::optional<bool> cv_class_weighting;
  std::vector<int> max_iter_grid;
  std::optional<double> epsilon, s, ci_level, level, threshold;
  std::optional<std::size_t> replicates;
  std::optional<std::string> aggregation;
  std::optional<std::string> linkage;
  std::optional<double> far_constant, cluster_threshold;
  std::optional<std::size_t> clusters, cluster_depth, min_block_size, embedding_dim;
  std::optional<std::size_t> nodes, exogenous, statics, patients, length;
  std::optional<double> edge_probability, edge_scale, baseline, decay;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "RunConfig JSON file; flags override its values");
  app->add_option("--data-dir", o.data_dir, "Directory of hourly .psv records");
  app->add_option("--out", o.output_dir, "Output directory");
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--sex", o.sex, "Subgroup: keep patients with this Gender code");
  app->add_option("--age-above", o.age_above, "Subgroup: keep patients older than this");
  app->add_option("--horizon-hours", o.horizon_hours, "Forward-fill horizon");
  app->add_option("--window-hours", o.window_hours, "Vital-sign summary window");
  app->add_option("--demographics", o.include_demographics, "Include Age/Gender as static covariates");
  app->add_option("--depth", o.depth, "Memory depth d");
  app->add_option("--link", o.link, "Link function: linear or sigmoid");
  app->add_option("--link-bound", o.link_bound, "Sigmoid domain bound M");
  app->add_option("--theta-max", o.theta_max, "Box bound on every coefficient");
  app->add_option("--class-weighting", o.class_weighting, "Balance class weights when fitting");
  app->add_option("--tol", o.tol, "Solver tolerance");
  app->add_option("--max-iter", o.max_iter, "Solver iteration cap");
  app->add_option("--metric", o.metric, "Solver metric: gram or euclidean");
  app->add_option("--criterion", o.criterion, "Selection criterion: tp_rate, classification_error or auc");
  app->add_option("--split", o.split, "Training fraction for selection");
  app->add_option("--cv-threshold", o.cv_threshold, "Decision threshold for selection criteria");
  app->add_option("--cv-class-weighting", o.cv_class_weighting, "Balance classes in the selection criterion");
  app->add_option("--max-iter-grid", o.max_iter_grid, "Grid for tuning the solver iteration cap");
  app->add_option("--min-gain", o.min_gain, "Smallest accepted criterion improvement");
  app->add_option("--epsilon", o.epsilon, "Failure probability of the error bound");
  app->add_option("--s", o.s, "Confidence parameter s (> 1)");
  app->add_option("--ci-level", o.ci_level, "Nominal level used to calibrate s when --s is absent");
  app->add_option("--replicates", o.replicates, "Bootstrap replicates B");
  app->add_option("--level", o.level, "Bootstrap interval level");
  app->add_option("--threshold", o.threshold, "Edge weight threshold for exported graphs");
  app->add_option("--aggregation", o.aggregation, "Lag aggregation: sum, max_abs or first_lag");
  app->add_option("--linkage", o.linkage, "Linkage: average, complete or single");
  app->add_option("--far-constant", o.far_constant, "Distance for nonpositive correlations");
  app->add_option("--clusters", o.clusters, "Number of clusters or blocks K");
  app->add_option("--cluster-depth", o.cluster_depth, "Levels of hierarchical blockmodelling");
  app->add_option("--min-block-size", o.min_block_size, "Smallest block split further");
  app->add_option("--embedding-dim", o.embedding_dim, "Spectral embedding dimension (auto when absent)");
  app->add_option("--cluster-threshold", o.cluster_threshold, "Edge threshold before blockmodelling");
  app->add_option("--nodes", o.nodes, "Simulation: node series");
  app->add_option("--exogenous", o.exogenous, "Simulation: exogenous series");
  app->add_option("--statics", o.statics, "Simulation: static covariates");
  app->add_option("--patients", o.patients, "Simulation: patients");
  app->add_option("--length", o.length, "Simulation: steps per patient");
  app->add_option("--edge-probability", o.edge_probability, "Simulation: probability of a planted edge");
  app->add_option("--edge-scale", o.edge_scale, "Simulation: magnitude of planted edges");
  app->add_option("--baseline", o.baseline, "Simulation: baseline intensity nu");
  app->add_option("--decay", o.decay, "Simulation: exponential decay rate");
}

template <typename T, typename U>
void apply(const std::optional<T>& v, U& field) {
  if (v) field = *v;
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig c;
  if (!o.config_file.empty()) {
    if (!fs::exists(o.config_file)) throw ConfigError("config file '" + o.config_file + "' not found");
    Json j;
    try {
      j = Json::parse(read_text(o.config_file));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    c = run_config_from_json(j);
  }
  apply(o.data_dir, c.data_dir);
  apply(o.output_dir, c.output_dir);
  apply(o.seed, c.seed);
  if (o.sex) c.subgroup.sex = *o.sex;
  if (o.age_above) c.subgroup.age_above = *o.age_above;
  apply(o.horizon_hours, c.ingest.horizon_hours);
  apply(o.window_hours, c.ingest.window_hours);
  apply(o.include_demographics, c.ingest.include_demographics);
  apply(o.depth, c.model.depth);
  if (o.link) c.model.link = parse_link_kind(*o.link);
  apply(o.link_bound, c.model.link_bound);
  apply(o.theta_max, c.model.theta_max);
  apply(o.class_weighting, c.model.class_weighting);
  apply(o.tol, c.solver.tol);
  apply(o.max_iter, c.solver.max_iter);
  if (o.metric) {
    if (*o.metric == "gram") c.solver.metric = SolverMetric::gram;
    else if (*o.metric == "euclidean") c.solver.metric = SolverMetric::euclidean;
    else throw ConfigError("unknown metric '" + *o.metric + "'");
  }
  if (o.criterion) c.selection.criterion = parse_criterion(*o.criterion);
  apply(o.split, c.selection.split);
  apply(o.cv_threshold, c.selection.threshold);
  apply(o.cv_class_weighting, c.selection.class_weighting);
  if (!o.max_iter_grid.empty()) c.selection.max_iter_grid = o.max_iter_grid;
  apply(o.min_gain, c.selection.min_gain);
  apply(o.epsilon, c.inference.epsilon);
  if (o.s) c.inference.s = *o.s;
  apply(o.ci_level, c.inference.ci_level);
  apply(o.replicates, c.inference.replicates);
  apply(o.level, c.inference.level);
  apply(o.threshold, c.inference.threshold);
  if (o.aggregation) c.inference.aggregation = parse_lag_aggregation(*o.aggregation);
  if (o.linkage) c.clustering.linkage = parse_linkage(*o.linkage);
  apply(o.far_constant, c.clustering.far_constant);
  apply(o.clusters, c.clustering.K);
  apply(o.cluster_depth, c.clustering.depth);
  apply(o.min_block_size, c.clustering.min_block_size);
  if (o.embedding_dim) c.clustering.d = *o.embedding_dim;
  apply(o.cluster_threshold, c.clustering.threshold);
  apply(o.nodes, c.simulation.nodes);
  apply(o.exogenous, c.simulation.exogenous);
  apply(o.statics, c.simulation.statics);
  apply(o.patients, c.simulation.patients);
  apply(o.length, c.simulation.length);
  apply(o.edge_probability, c.simulation.edge_probability);
  apply(o.edge_scale, c.simulation.edge_scale);
  apply(o.baseline, c.simulation.baseline);
  apply(o.decay, c.simulation.decay);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Shared helpers

fs::path archive_dir(const RunConfig& c, const std::string& archive) {
  return archive.empty() ? fs::path(c.output_dir) / "archive" : fs::path(archive);
}

Json read_json_file(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw ConfigError("missing '" + path.string() + "' (run `" + producer + "` first)");
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::size_t> node_targets(const std::vector<PatientPanel>& panels, const std::optional<std::size_t>& node) {
  const std::size_t n = panels.front().node_count();
  if (node) {
    if (*node >= n) throw ConfigError("--node must be below " + std::to_string(n));
    return {*node};
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return all;
}

/// Coefficient rows ordered by `order` (selection order), then any remaining series.
Json coefficient_table(const ThetaVector& theta, const PatientPanel& names, const std::vector<FeatureId>& order) {
  const auto& layout = theta.layout();
  std::vector<FeatureId> seq = order;
  for (const auto& f : layout.features())
    if (std::find(seq.begin(), seq.end(), f) == seq.end()) seq.push_back(f);
  Json table = Json::array();
  table.push_back({{"name", "nu"}, {"lag", 0}, {"value", theta.nu()}});
  for (const auto& f : seq) {
    const auto off = layout.offset(f);
    if (!off) continue;
    const std::size_t width = layout.width(f);
    for (std::size_t q = 0; q < width; ++q)
      table.push_back({{"name", feature_name(names, f)},
                       {"lag", f.kind == FeatureKind::static_covariate ? 0 : q + 1},
                       {"value", theta.values()(static_cast<Eigen::Index>(*off + q))}});
  }
  return table;
}

struct FeatureChoice {
  std::vector<std::optional<std::vector<FeatureId>>> per_node;
  std::vector<std::vector<FeatureId>> order;
};

FeatureChoice load_feature_files(const std::vector<std::string>& files, std::size_t nodes, Manifest& manifest) {
  FeatureChoice out;
  out.per_node.assign(nodes, std::nullopt);
  out.order.assign(nodes, {});
  for (const auto& file : files) {
    const Json trace = read_json_file(file, "select");
    manifest.input(file);
    const auto target = trace.at("target").get<std::size_t>();
    if (target >= nodes) throw ConfigError("selection trace '" + file + "' targets an unknown node");
    std::vector<FeatureId> seq;
    for (const auto& f : trace.at("initial_subset")) seq.push_back(feature_from_json(f));
    for (const auto& s : trace.at("steps")) seq.push_back(feature_from_json(s.at("feature")));
    out.per_node[target] = selected_features(trace);
    out.order[target] = seq;
  }
  return out;
}

std::vector<std::string> node_labels(const PatientPanel& p) {
  std::vector<std::string> labels = p.y_names;
  for (std::size_t i = labels.size(); i < p.node_count(); ++i) labels.push_back("node" + std::to_string(i + 1));
  return labels;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(const RunConfig& c) {
  if (c.data_dir.empty()) throw ConfigError("ingest needs --data-dir");
  if (!fs::is_directory(c.data_dir)) throw ConfigError("data directory '" + c.data_dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(c.data_dir))
    if (e.is_regular_file() && e.path().extension() == ".psv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .psv files in '" + c.data_dir + "'");

  Manifest manifest("ingest", c);
  const fs::path out(c.output_dir);
  SubgroupFilter filter;
  filter.sex = c.subgroup.sex;
  filter.age_above = c.subgroup.age_above;
  IngestOptions opts;
  opts.fill.horizon_hours = c.ingest.horizon_hours;
  opts.fill.required_columns = default_required_columns();
  opts.window_hours = c.ingest.window_hours;
  opts.include_demographics = c.ingest.include_demographics;

  std::vector<PatientPanel> panels;
  Json per_file = Json::array();
  std::size_t failed = 0, excluded = 0, before = 0, after = 0;
  for (const auto& f : files) {
    Json entry = {{"file", f.filename().generic_string()}};
    try {
      manifest.input(f);
      const RawRecord rec = parse_psv_file(f.string());
      entry["rows"] = rec.size();
      if (!filter.matches(rec)) {
        ++excluded;
        entry["status"] = "excluded";
        per_file.push_back(entry);
        continue;
      }
      IngestCounts counts;
      PatientPanel panel = assemble_panel(rec, default_sad_rules(), opts, &counts);
      before += counts.rows_before;
      after += counts.rows_after;
      entry["status"] = "ok";
      entry["rows_before"] = counts.rows_before;
      entry["rows_after"] = counts.rows_after;
      panels.push_back(std::move(panel));
    } catch (const std::exception& e) {
      ++failed;
      entry["status"] = "error";
      entry["error"] = e.what();
      std::cerr << "ingest: " << f.filename().string() << ": " << e.what() << "\n";
    }
    per_file.push_back(entry);
  }
  if (failed == files.size()) throw ConfigError("every input file failed to ingest");

  const fs::path archive = out / "archive";
  write_panel_archive(archive, panels, {{"source", "ingest"}});
  for (const auto& e : fs::recursive_directory_iterator(archive))
    if (e.is_regular_file()) manifest.write(e.path(), read_text(e.path()));

  Json report;
  report["files"] = files.size();
  report["patients"] = panels.size();
  report["excluded_by_subgroup"] = excluded;
  report["failed"] = failed;
  report["rows_before"] = before;
  report["rows_after"] = after;
  report["per_file"] = per_file;
  manifest.write_json(out / "ingest_report.json", report);
  manifest.finish(out);
  std::cout << "ingested " << panels.size() << " patients (" << after << " of " << before << " rows kept)\n";
  return kExitOk;
}

int cmd_simulate(const RunConfig& c) {
  const auto& sc = c.simulation;
  if (sc.nodes == 0 || sc.length == 0 || sc.patients == 0)
    throw ConfigError("simulation needs nodes, length and patients >= 1");
  SimulationSpec spec = SimulationSpec::zeros(sc.nodes, sc.exogenous, sc.statics, c.model.depth, sc.length);
  spec.link = c.model.link;
  spec.link_bound = c.model.link_bound;
  std::mt19937_64 rng(derive_seed(c.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw = [&](double scale) {
    if (unit(rng) >= sc.edge_probability) return 0.0;
    return (unit(rng) < 0.5 ? -1.0 : 1.0) * scale;
  };
  for (Eigen::Index i = 0; i < spec.alpha.rows(); ++i)
    for (Eigen::Index j = 0; j < spec.alpha.cols(); ++j) spec.alpha(i, j) = draw(sc.edge_scale);
  for (Eigen::Index i = 0; i < spec.beta.rows(); ++i)
    for (Eigen::Index j = 0; j < spec.beta.cols(); ++j) spec.beta(i, j) = draw(0.5 * sc.edge_scale);
  for (Eigen::Index i = 0; i < spec.gamma.rows(); ++i)
    for (Eigen::Index j = 0; j < spec.gamma.cols(); ++j) spec.gamma(i, j) = draw(0.5 * sc.edge_scale);
  for (Eigen::Index j = 0; j < spec.z.size(); ++j) spec.z(j) = unit(rng);
  spec.nu.setConstant(sc.baseline);
  spec.decay.setConstant(sc.decay);
  spec.decay_exo.setConstant(sc.decay);

  Manifest manifest("simulate", c);
  const fs::path out(c.output_dir);
  const auto panels = simulate_panels(spec, sc.patients, derive_seed(c.seed, 1));
  const fs::path archive = out / "archive";
  write_panel_archive(archive, panels, {{"source", "simulate"}});
  for (const auto& e : fs::recursive_directory_iterator(archive))
    if (e.is_regular_file()) manifest.write(e.path(), read_text(e.path()));

  Json truth;
  const auto matrix = [](const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
      rows.push_back(r);
    }
    return rows;
  };
  truth["link"] = to_string(spec.link);
  truth["depth"] = spec.depth;
  truth["alpha"] = matrix(spec.alpha);
  truth["beta"] = matrix(spec.beta);
  truth["gamma"] = matrix(spec.gamma);
  Json thetas = Json::array();
  for (const auto& th : spec.true_thetas()) thetas.push_back(to_json(th, panels.front()));
  truth["thetas"] = thetas;
  manifest.write_json(out / "ground_truth.json", truth);
  manifest.finish(out);
  std::cout << "simulated " << panels.size() << " patients of " << sc.length << " steps\n";
  return kExitOk;
}

int cmd_fit(const RunConfig& c, const std::string& archive, const std::vector<std::string>& feature_files,
            const std::optional<std::string>& truth_file) {
  const fs::path dir = archive_dir(c, archive);
  const auto panels = read_panel_archive(dir);
  if (panels.empty()) throw InsufficientDataError("archive holds no patients");
  Manifest manifest("fit", c);
  manifest.input(dir);
  const std::size_t n = panels.front().node_count();
  const FeatureChoice choice = load_feature_files(feature_files, n, manifest);

  std::optional<Json> truth;
  const fs::path truth_path = truth_file ? fs::path(*truth_file) : dir.parent_path() / "ground_truth.json";
  if (fs::exists(truth_path)) {
    truth = read_json_file(truth_path, "simulate");
    manifest.input(truth_path);
  }

  const NodeFitConfig fit = c.fit_config();
  const LinkFunction link = fit.link_function();
  const auto results = fit_network(panels, fit, choice.per_node);
  Json nodes = Json::array();
  std::vector<ThetaVector> thetas;
  bool all_converged = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = results[i];
    thetas.push_back(r.theta_hat);
    all_converged = all_converged && r.converged;
    Json entry;
    entry["target"] = i;
    entry["name"] = feature_name(panels.front(), {FeatureKind::node, i});
    entry["converged"] = r.converged;
    entry["iterations"] = r.iterations;
    entry["residual"] = r.residual;
    entry["field_norm"] = r.field_norm;
    entry["coefficients"] = coefficient_table(r.theta_hat, panels.front(), choice.order[i]);
    entry["theta"] = to_json(r.theta_hat, panels.front());
    try {
      const DesignMatrix design = build_design(panels, i, fit.depth, choice.per_node[i]);
      const BoundReport bound = theorem1_bound(design, link, c.inference.epsilon);
      entry["bound"] = to_json(bound);
      if (truth && i < truth->at("thetas").size()) {
        const ThetaVector t = theta_from_json(truth->at("thetas")[i]);
        if (t.layout() == r.theta_hat.layout()) {
          const double err = (r.theta_hat.values() - t.values()).norm();
          entry["truth_error"] = err;
          entry["within_bound"] = err <= bound.theta_error_bound;
        }
      }
    } catch (const RankDeficiencyError& e) {
      entry["bound"] = nullptr;
      entry["bound_error"] = e.what();
    }
    nodes.push_back(entry);
  }
  const Adjacency adj = extract_adjacency(thetas, c.inference.aggregation, node_labels(panels.front()),
                                          panels.front().x_names.size() == panels.front().exogenous_count()
                                              ? panels.front().x_names
                                              : std::vector<std::string>{});
  Json weights = Json::array();
  for (Eigen::Index i = 0; i < adj.weights.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(adj.weights.cols()));
    for (Eigen::Index j = 0; j < adj.weights.cols(); ++j) row[static_cast<std::size_t>(j)] = adj.weights(i, j);
    weights.push_back(row);
  }
  Json report;
  report["link"] = to_string(fit.link);
  report["depth"] = fit.depth;
  report["patients"] = panels.size();
  report["labels"] = adj.labels;
  report["nodes"] = nodes;
  report["adjacency"] = {{"aggregation", to_string(c.inference.aggregation)}, {"weights", weights}};
  const fs::path out(c.output_dir);
  manifest.write_json(out / "fit.json", report);
  manifest.finish(out);
  std::cout << "fitted " << n << " node models" << (all_converged ? "" : " (some did not converge)") << "\n";
  return kExitOk;
}

int cmd_select(const RunConfig& c, const std::string& archive, const std::optional<std::size_t>& node) {
  const fs::path dir = archive_dir(c, archive);
  const auto panels = read_panel_archive(dir);
  if (panels.empty()) throw InsufficientDataError("archive holds no patients");
  Manifest manifest("select", c);
  manifest.input(dir);
  const fs::path out(c.output_dir);
  for (std::size_t target : node_targets(panels, node)) {
    const SelectionTrace trace = forward_select(panels, target, std::nullopt, std::nullopt, c.selection, c.fit_config());
    manifest.write_json(out / ("selection_" + std::to_string(target) + ".json"), to_json(trace, panels.front()));
    std::cout << "node " << target << ": " << trace.final_subset.size() << " features selected\n";
  }
  manifest.finish(out);
  return kExitOk;
}

int cmd_ci(const RunConfig& c, const std::string& archive, const std::optional<std::size_t>& node,
           const std::vector<std::string>& feature_files) {
  const fs::path dir = archive_dir(c, archive);
  const auto panels = read_panel_archive(dir);
  if (panels.empty()) throw InsufficientDataError("archive holds no patients");
  Manifest manifest("ci", c);
  manifest.input(dir);
  const FeatureChoice choice = load_feature_files(feature_files, panels.front().node_count(), manifest);
  const NodeFitConfig fit = c.fit_config();
  const LinkFunction link = fit.link_function();
  Json nodes = Json::array();
  for (std::size_t target : node_targets(panels, node)) {
    const DesignMatrix design = build_design(panels, target, fit.depth, choice.per_node[target]);
    const FeasibleSet set = build_feasible_set(design, link, fit.theta_max);
    const double s = c.inference.s ? *c.inference.s : calibrate_s(c.inference.ci_level, design.dimension(), design.size());
    const auto intervals = ci_coordinates(design, set, link, s);
    const ThetaVector names(design.layout);
    const Json table = coefficient_table(names, panels.front(), {});
    Json coords = Json::array();
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      Json entry = to_json(intervals[k]);
      entry["name"] = table[k]["name"];
      entry["lag"] = table[k]["lag"];
      coords.push_back(entry);
    }
    nodes.push_back({{"target", target},
                     {"name", feature_name(panels.front(), {FeatureKind::node, target})},
                     {"s", s},
                     {"nominal_level", nominal_level(s, design.dimension(), design.size())},
                     {"intervals", coords}});
  }
  const fs::path out(c.output_dir);
  manifest.write_json(out / "ci.json", {{"link", to_string(fit.link)}, {"nodes", nodes}});
  manifest.finish(out);
  std::cout << "confidence intervals for " << nodes.size() << " node models\n";
  return kExitOk;
}

Json intervals_json(const BootstrapResult& res, const std::vector<std::string>& labels) {
  Json edges = Json::array();
  for (const auto& e : res.edges)
    edges.push_back({{"source", labels[e.source]},
                     {"target", labels[e.target]},
                     {"lower", e.lower},
                     {"median", e.median},
                     {"upper", e.upper},
                     {"exists", e.exists},
                     {"weight", e.weight}});
  return edges;
}

int cmd_bootstrap(const RunConfig& c, const std::string& archive, const std::vector<std::string>& feature_files,
                  const std::string& format) {
  const GraphFormat fmt = parse_graph_format(format);
  const fs::path dir = archive_dir(c, archive);
  const auto panels = read_panel_archive(dir);
  if (panels.empty()) throw InsufficientDataError("archive holds no patients");
  Manifest manifest("bootstrap", c);
  manifest.input(dir);
  const FeatureChoice choice = load_feature_files(feature_files, panels.front().node_count(), manifest);
  BootstrapConfig cfg;
  cfg.replicates = c.inference.replicates;
  cfg.level = c.inference.level;
  cfg.seed = c.seed;
  cfg.fit = c.fit_config();
  cfg.aggregation = c.inference.aggregation;
  cfg.features = choice.per_node;
  const BootstrapResult res = bootstrap_edges(panels, cfg);
  const auto labels = node_labels(panels.front());
  Json report;
  report["replicates"] = res.replicates;
  report["failures"] = res.failures;
  report["level"] = cfg.level;
  report["aggregation"] = to_string(cfg.aggregation);
  report["labels"] = labels;
  report["edges"] = intervals_json(res, labels);
  const fs::path out(c.output_dir);
  manifest.write_json(out / "bootstrap.json", report);
  const GraphExport graph = graph_from_intervals(res, labels, c.inference.threshold);
  manifest.write(out / (fmt == GraphFormat::dot ? "graph.dot" : "graph.json"), export_graph(graph, fmt));
  manifest.finish(out);
  std::cout << graph.edges.size() << " edges with |w| > " << c.inference.threshold << "\n";
  return kExitOk;
}

int cmd_cluster(const RunConfig& c, const std::string& archive) {
  const fs::path dir = archive_dir(c, archive);
  const auto panels = read_panel_archive(dir);
  if (panels.empty()) throw InsufficientDataError("archive holds no patients");
  Manifest manifest("cluster", c);
  manifest.input(dir);
  const std::size_t n = panels.front().node_count();
  std::vector<Eigen::VectorXd> cols;
  for (const auto& p : panels)
    for (Eigen::Index t = 0; t < p.y.cols(); ++t)
      if (p.y_valid.col(t).all()) cols.push_back(p.y.col(t));
  Eigen::MatrixXd series(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t t = 0; t < cols.size(); ++t) series.col(static_cast<Eigen::Index>(t)) = cols[t];
  std::size_t flat = 0;
  const Eigen::MatrixXd corr = abnormality_correlation(series, &flat);
  const Eigen::MatrixXd dist = correlation_to_distance(corr, c.clustering.far_constant);
  const Dendrogram tree = hierarchical_cluster(dist, c.clustering.linkage);
  const auto labels = node_labels(panels.front());
  Json report;
  report["linkage"] = to_string(c.clustering.linkage);
  report["zero_variance_series"] = flat;
  report["dendrogram"] = to_json(tree, labels);
  const std::size_t k = std::min(c.clustering.K, n);
  const auto cut = tree.cut(k);
  Json clusters = Json::object();
  for (std::size_t i = 0; i < n; ++i) clusters[labels[i]] = cut[i];
  report["clusters"] = {{"K", k}, {"assignment", clusters}};
  const fs::path out(c.output_dir);
  manifest.write_json(out / "cluster.json", report);
  manifest.finish(out);
  std::cout << "clustered " << n << " series into " << k << " groups\n";
  return kExitOk;
}

int cmd_blockmodel(const RunConfig& c, const std::string& graph_file) {
  const fs::path out(c.output_dir);
  const fs::path path = graph_file.empty() ? out / "graph.json" : fs::path(graph_file);
  if (!fs::exists(path)) throw ConfigError("missing graph '" + path.string() + "' (run `export_graph --format json` first)");
  Manifest manifest("blockmodel", c);
  manifest.input(path);
  const GraphExport graph = import_graph_json(read_text(path));
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : graph.edges)
    if (e.exists && std::abs(e.weight) > c.clustering.threshold)
      w(static_cast<Eigen::Index>(e.source), static_cast<Eigen::Index>(e.target)) = 1.0;
  HierarchicalOptions opts;
  opts.level.K = c.clustering.K;
  opts.level.d = c.clustering.d;
  opts.level.seed = c.seed;
  opts.max_depth = c.clustering.depth;
  opts.min_block_size = c.clustering.min_block_size;
  const BlockClustering blocks = hierarchical_blockmodel(w, opts);
  Json report = to_json(blocks, graph.nodes);
  Json leaves = Json::object();
  const auto leaf = blocks.leaf_labels();
  for (Eigen::Index i = 0; i < n; ++i) leaves[graph.nodes[static_cast<std::size_t>(i)]] = leaf[static_cast<std::size_t>(i)];
  report["leaf_labels"] = leaves;
  manifest.write_json(out / "blockmodel.json", report);
  manifest.finish(out);
  std::cout << "blockmodel with " << blocks.K << " top-level blocks\n";
  return kExitOk;
}

int cmd_export_graph(const RunConfig& c, const std::string& input, const std::string& format) {
  const GraphFormat fmt = parse_graph_format(format);
  const fs::path out(c.output_dir);
  const fs::path path = input.empty() ? out / "fit.json" : fs::path(input);
  const Json j = read_json_file(path, "fit` or `bootstrap");
  Manifest manifest("export_graph", c);
  manifest.input(path);
  GraphExport graph;
  graph.nodes = j.at("labels").get<std::vector<std::string>>();
  if (j.contains("adjacency")) {
    const auto& rows = j.at("adjacency").at("weights");
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t s = 0; s < rows[i].size(); ++s) {
        const double w = rows[i][s].get<double>();
        if (std::abs(w) > c.inference.threshold) graph.edges.push_back({s, i, w, std::nullopt, std::nullopt, true});
      }
  } else if (j.contains("edges")) {
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) index.emplace(graph.nodes[k], k);
    for (const auto& e : j.at("edges")) {
      const double w = e.at("weight").get<double>();
      if (!e.at("exists").get<bool>() || !(std::abs(w) > c.inference.threshold)) continue;
      graph.edges.push_back({index.at(e.at("source").get<std::string>()), index.at(e.at("target").get<std::string>()), w,
                             e.at("lower").get<double>(), e.at("upper").get<double>(), true});
    }
  } else {
    throw ConfigError("'" + path.string() + "' holds neither adjacency weights nor bootstrap edges");
  }
  manifest.write(out / (fmt == GraphFormat::dot ? "graph.dot" : "graph.json"), export_graph(graph, fmt));
  manifest.finish(out);
  std::cout << graph.edges.size() << " edges exported\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete Hawkes network estimation for sepsis-associated derangements"};
  app.require_subcommand(1);
  Overrides o;
  std::string archive, graph_file, input, format{"json"};
  std::vector<std::string> features;
  std::optional<std::size_t> node;
  std::optional<std::string> truth;

  auto* ingest = app.add_subcommand("ingest", "Parse .psv records into a panel archive");
  auto* simulate = app.add_subcommand("simulate", "Simulate a panel archive with a planted network");
  auto* fit = app.add_subcommand("fit", "Fit every node model");
  auto* select = app.add_subcommand("select", "Forward feature selection");
  auto* ci = app.add_subcommand("ci", "LP confidence intervals for every coefficient");
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap edge intervals and a thresholded graph");
  auto* cluster = app.add_subcommand("cluster", "Hierarchical clustering of node series");
  auto* block = app.add_subcommand("blockmodel", "Spectral blockmodel of an exported graph");
  auto* exp = app.add_subcommand("export_graph", "Export a fitted or bootstrapped graph");
  for (auto* sub : {ingest, simulate, fit, select, ci, boot, cluster, block, exp}) add_config_flags(sub, o);
  for (auto* sub : {fit, select, ci, boot, cluster})
    sub->add_option("--archive", archive, "Panel archive directory (default <out>/archive)");
  for (auto* sub : {fit, ci, boot}) sub->add_option("--features", features, "Selection trace JSON files");
  fit->add_option("--truth", truth, "Ground-truth JSON from simulate");
  for (auto* sub : {select, ci}) sub->add_option("--node", node, "Restrict to one target node");
  for (auto* sub : {boot, exp}) sub->add_option("--format", format, "Graph format: dot or json");
  block->add_option("--graph", graph_file, "Graph JSON (default <out>/graph.json)");
  exp->add_option("--input", input, "fit.json or bootstrap.json (default <out>/fit.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig c = resolve_config(o);
    if (*ingest) return cmd_ingest(c);
    if (*simulate) return cmd_simulate(c);
    if (*fit) return cmd_fit(c, archive, features, truth);
    if (*select) return cmd_select(c, archive, node);
    if (*ci) return cmd_ci(c, archive, node, features);
    if (*boot) return cmd_bootstrap(c, archive, features, format);
    if (*cluster) return cmd_cluster(c, archive);
    if (*block) return cmd_blockmodel(c, graph_file);
    if (*exp) return cmd_export_graph(c, input, format);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitUsage;
}

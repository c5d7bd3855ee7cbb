#include "sadgraph/graph.hpp"

#include "sadgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace sadgraph {

Adjacency extract_adjacency(std::span<const ThetaVector> models, LagAggregation aggregation,
                            const std::vector<std::string>& labels, const std::vector<std::string>& exogenous_labels) {
  if (models.empty()) throw ValidationError("extract_adjacency: no models");
  const auto& ref = models.front().layout();
  const std::size_t n = models.size();
  if (ref.nodes() != n) throw ValidationError("extract_adjacency: need one model per node");
  for (const auto& m : models) {
    const auto& l = m.layout();
    if (l.nodes() != ref.nodes() || l.exogenous() != ref.exogenous() || l.statics() != ref.statics() ||
        l.depth() != ref.depth())
      throw ValidationError("extract_adjacency: models disagree on the series roster");
  }
  if (!labels.empty() && labels.size() != n) throw ValidationError("extract_adjacency: label count mismatch");
  const std::size_t n2 = ref.exogenous();
  if (!exogenous_labels.empty() && exogenous_labels.size() != n2)
    throw ValidationError("extract_adjacency: exogenous label count mismatch");

  Adjacency adj;
  adj.weights.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  adj.exogenous.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      adj.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = edge_weight(models[i], j, aggregation);
    for (std::size_t j = 0; j < n2; ++j)
      adj.exogenous(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          exogenous_weight(models[i], j, aggregation);
  }
  adj.labels = labels;
  if (adj.labels.empty())
    for (std::size_t i = 0; i < n; ++i) adj.labels.push_back("node" + std::to_string(i + 1));
  adj.exogenous_labels = exogenous_labels;
  if (adj.exogenous_labels.empty())
    for (std::size_t j = 0; j < n2; ++j) adj.exogenous_labels.push_back("exo" + std::to_string(j + 1));
  return adj;
}

Adjacency threshold_graph(const Adjacency& adjacency, double c) {
  if (!(c >= 0.0)) throw ValidationError("threshold must be nonnegative");
  Adjacency out = adjacency;
  const auto cut = [c](double w) { return std::abs(w) <= c ? 0.0 : w; };
  out.weights = adjacency.weights.unaryExpr(cut);
  out.exogenous = adjacency.exogenous.unaryExpr(cut);
  return out;
}

Eigen::MatrixXd binarize(const Eigen::MatrixXd& weights) {
  return weights.unaryExpr([](double w) { return w != 0.0 ? 1.0 : 0.0; });
}

Eigen::MatrixXd abnormality_correlation(const Eigen::MatrixXd& series, std::size_t* zero_variance) {
  const Eigen::Index n = series.rows();
  if (series.cols() < 2) throw InsufficientDataError("correlation needs at least two time points");
  const Eigen::MatrixXd centered = series.colwise() - series.rowwise().mean();
  const Eigen::VectorXd norms = centered.rowwise().norm();
  Eigen::MatrixXd corr = centered * centered.transpose();
  std::size_t flat = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(norms(i) > 0.0)) ++flat;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) corr(i, j) = 1.0;
      else if (norms(i) > 0.0 && norms(j) > 0.0)
        corr(i, j) = std::clamp(corr(i, j) / (norms(i) * norms(j)), -1.0, 1.0);
      else corr(i, j) = 0.0;
    }
  }
  if (zero_variance) *zero_variance = flat;
  return corr;
}

Eigen::MatrixXd correlation_to_distance(const Eigen::MatrixXd& corr, double far_constant) {
  if (corr.rows() != corr.cols()) throw ValidationError("correlation matrix must be square");
  Eigen::MatrixXd d(corr.rows(), corr.cols());
  for (Eigen::Index i = 0; i < corr.rows(); ++i)
    for (Eigen::Index j = 0; j < corr.cols(); ++j)
      d(i, j) = i == j ? 0.0 : corr(i, j) > 0.0 ? 1.0 / corr(i, j) : far_constant;
  return d;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ValidationError("symmetrize needs a square matrix");
  return a + a.transpose();
}

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "average") return Linkage::average;
  if (name == "complete") return Linkage::complete;
  if (name == "single") return Linkage::single;
  throw ConfigError("unknown linkage '" + std::string(name) + "'");
}

Dendrogram hierarchical_cluster(const Eigen::MatrixXd& distance, Linkage linkage) {
  const Eigen::Index n = distance.rows();
  if (distance.cols() != n) throw ValidationError("distance matrix must be square");
  if ((distance.array() < 0.0).any()) throw ValidationError("distances must be nonnegative");
  if (!distance.isApprox(distance.transpose(), 1e-12) && n > 0)
    throw ValidationError("distance matrix must be symmetric");
  Dendrogram tree;
  tree.leaves = static_cast<std::size_t>(n);
  if (n < 2) return tree;

  // Active clusters: id and size; dist holds the current inter-cluster distances.
  std::vector<std::size_t> ids(static_cast<std::size_t>(n));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n), 1);
  for (Eigen::Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
  Eigen::MatrixXd dist = distance;
  std::vector<char> alive(static_cast<std::size_t>(n), 1);

  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    Eigen::Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        const double v = dist(i, j);
        const auto key = std::minmax(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
        bool take = v < best;
        if (!take && v == best && bi >= 0) {
          const auto cur = std::minmax(ids[static_cast<std::size_t>(bi)], ids[static_cast<std::size_t>(bj)]);
          take = key < cur;
        }
        if (take) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    const auto si = static_cast<double>(sizes[static_cast<std::size_t>(bi)]);
    const auto sj = static_cast<double>(sizes[static_cast<std::size_t>(bj)]);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!alive[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
      double v = 0.0;
      switch (linkage) {
        case Linkage::average: v = (si * dist(bi, k) + sj * dist(bj, k)) / (si + sj); break;
        case Linkage::complete: v = std::max(dist(bi, k), dist(bj, k)); break;
        case Linkage::single: v = std::min(dist(bi, k), dist(bj, k)); break;
      }
      dist(bi, k) = dist(k, bi) = v;
    }
    Merge m;
    m.left = std::min(ids[static_cast<std::size_t>(bi)], ids[static_cast<std::size_t>(bj)]);
    m.right = std::max(ids[static_cast<std::size_t>(bi)], ids[static_cast<std::size_t>(bj)]);
    m.height = best;
    m.size = sizes[static_cast<std::size_t>(bi)] + sizes[static_cast<std::size_t>(bj)];
    tree.merges.push_back(m);
    ids[static_cast<std::size_t>(bi)] = static_cast<std::size_t>(n + step);
    sizes[static_cast<std::size_t>(bi)] = m.size;
    alive[static_cast<std::size_t>(bj)] = 0;
  }
  return tree;
}

std::vector<int> Dendrogram::cut(std::size_t k) const {
  if (k == 0 || k > leaves) throw ValidationError("cluster count must lie in [1, leaves]");
  // Union-find over the first leaves - k merges.
  std::vector<std::size_t> parent(leaves + merges.size());
  for (std::size_t q = 0; q < parent.size(); ++q) parent[q] = q;
  const std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t q = 0; q + k < leaves; ++q) {
    parent[root(merges[q].left)] = leaves + q;
    parent[root(merges[q].right)] = leaves + q;
  }
  std::vector<int> labels(leaves, -1);
  std::map<std::size_t, int> names;
  for (std::size_t i = 0; i < leaves; ++i) {
    const auto r = root(i);
    const auto it = names.emplace(r, static_cast<int>(names.size())).first;
    labels[i] = it->second;
  }
  return labels;
}

std::vector<std::size_t> Dendrogram::leaf_order() const {
  std::vector<std::size_t> out;
  if (leaves == 0) return out;
  if (merges.empty()) {
    for (std::size_t i = 0; i < leaves; ++i) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> stack{leaves + merges.size() - 1};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (node < leaves) {
      out.push_back(node);
      continue;
    }
    const auto& m = merges[node - leaves];
    stack.push_back(m.right);
    stack.push_back(m.left);
  }
  return out;
}

}  // namespace sadgraph

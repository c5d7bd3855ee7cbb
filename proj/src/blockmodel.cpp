#include "sadgraph/error.hpp"
#include "sadgraph/graph.hpp"
#include "sadgraph/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace sadgraph {

namespace {

KMeansResult lloyd(const Eigen::MatrixXd& points, std::size_t k, std::mt19937_64& rng, int max_iter) {
  const Eigen::Index n = points.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  KMeansResult r;
  r.centers.resize(kk, points.cols());
  // k-means++ seeding.
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  r.centers.row(0) = points.row(first(rng));
  Eigen::VectorXd nearest = (points.rowwise() - r.centers.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < kk; ++c) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= nearest(pick);
        if (target <= 0.0 && nearest(pick) > 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    r.centers.row(c) = points.row(pick);
    nearest = nearest.cwiseMin((points.rowwise() - r.centers.row(c)).rowwise().squaredNorm());
  }

  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    Eigen::VectorXd dmin(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < kk; ++c) {
        const double dd = (points.row(i) - r.centers.row(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      dmin(i) = bd;
      if (r.labels[static_cast<std::size_t>(i)] != best) {
        r.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(kk);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(r.labels[static_cast<std::size_t>(i)]) += points.row(i);
      counts(r.labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (counts(c) > 0.0) {
        r.centers.row(c) = sums.row(c) / counts(c);
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Eigen::Index far = 0;
        dmin.maxCoeff(&far);
        r.centers.row(c) = points.row(far);
        dmin(far) = 0.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (points.row(i) - r.centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return r;
}

// Renumber labels by first appearance so ids do not depend on seeding order.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> names;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      out[i] = labels[i];
      continue;
    }
    out[i] = names.emplace(labels[i], static_cast<int>(names.size())).first->second;
  }
  return out;
}

std::string top_label(std::size_t b) {
  std::string s;
  ++b;
  while (b > 0) {
    --b;
    s.insert(s.begin(), static_cast<char>('A' + b % 26));
    b /= 26;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, int restarts, int max_iter) {
  if (k == 0 || static_cast<Eigen::Index>(k) > points.rows())
    throw ValidationError("k-means needs 1 <= K <= number of points");
  if (restarts < 1) throw ValidationError("k-means needs at least one restart");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    KMeansResult cur = lloyd(points, k, rng, max_iter);
    if (cur.inertia < best.inertia - 1e-12) best = std::move(cur);
  }
  best.labels = canonical(best.labels);
  return best;
}

std::size_t auto_dimension(const Eigen::VectorXd& singular_values, double ratio) {
  if (singular_values.size() == 0) return 0;
  const double total = singular_values.squaredNorm();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index q = 0; q < singular_values.size(); ++q) {
    acc += singular_values(q) * singular_values(q);
    if (acc >= ratio * total * (1.0 - 1e-12)) return static_cast<std::size_t>(q + 1);
  }
  return static_cast<std::size_t>(singular_values.size());
}

Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& w, std::size_t d, Eigen::VectorXd* singular_values) {
  if (w.rows() != w.cols()) throw ValidationError("adjacency must be square");
  if (d < 1 || static_cast<Eigen::Index>(d) > w.rows()) throw ValidationError("embedding dimension must lie in [1, n]");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto dd = static_cast<Eigen::Index>(d);
  const Eigen::VectorXd root = svd.singularValues().head(dd).cwiseSqrt();
  Eigen::MatrixXd z(w.rows(), 2 * dd);
  z.leftCols(dd) = svd.matrixU().leftCols(dd) * root.asDiagonal();
  z.rightCols(dd) = svd.matrixV().leftCols(dd) * root.asDiagonal();
  if (singular_values) *singular_values = svd.singularValues();
  return z;
}

BlockClustering spectral_blockmodel(const Eigen::MatrixXd& w, const BlockmodelOptions& options) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n) throw ValidationError("adjacency must be square");
  if (options.K < 1) throw ValidationError("block count must be >= 1");
  if (static_cast<Eigen::Index>(options.K) > n)
    throw ValidationError("block count " + std::to_string(options.K) + " exceeds node count " + std::to_string(n));
  if (!((w.array() == 0.0) || (w.array() == 1.0)).all()) throw ValidationError("blockmodel needs a 0/1 adjacency");

  BlockClustering out;
  for (Eigen::Index i = 0; i < n; ++i) out.members.push_back(static_cast<std::size_t>(i));
  if (w.isZero(0.0)) {
    out.assignment.assign(static_cast<std::size_t>(n), 0);
    out.K = 1;
    out.d = 0;
    out.singular_values = Eigen::VectorXd::Zero(n);
    out.block_labels = {"A"};
    out.warnings.push_back("adjacency has no edges; all nodes form one block");
    return out;
  }

  // Nodes without in- or out-edges stay unassigned.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w.row(i).sum() + w.col(i).sum() > 0.0) active.push_back(i);
  if (options.K > active.size())
    throw ValidationError("block count " + std::to_string(options.K) + " exceeds the " +
                          std::to_string(active.size()) + " connected nodes");

  Eigen::VectorXd sv;
  const Eigen::JacobiSVD<Eigen::MatrixXd> probe(w);
  sv = probe.singularValues();
  std::size_t d = options.d ? *options.d : auto_dimension(sv, options.variance_ratio);
  if (d < 1 || static_cast<Eigen::Index>(d) > n) throw ValidationError("embedding dimension must lie in [1, n]");
  const Eigen::MatrixXd z = spectral_embedding(w, d, &sv);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(active.size()), z.cols());
  for (std::size_t q = 0; q < active.size(); ++q) pts.row(static_cast<Eigen::Index>(q)) = z.row(active[q]);
  const KMeansResult km = kmeans(pts, options.K, options.seed, options.restarts);

  out.assignment.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t q = 0; q < active.size(); ++q) out.assignment[static_cast<std::size_t>(active[q])] = km.labels[q];
  out.K = options.K;
  out.d = d;
  out.singular_values = sv;
  const double total = sv.squaredNorm();
  out.explained_variance_ratio = total > 0.0 ? sv.head(static_cast<Eigen::Index>(d)).squaredNorm() / total : 0.0;
  for (std::size_t b = 0; b < out.K; ++b) out.block_labels.push_back(top_label(b));
  if (active.size() < static_cast<std::size_t>(n))
    out.warnings.push_back(std::to_string(static_cast<std::size_t>(n) - active.size()) +
                           " isolated node(s) left unassigned");
  return out;
}

namespace {

void recurse(BlockClustering& node, const Eigen::MatrixXd& w, const HierarchicalOptions& options, std::size_t depth) {
  node.children.assign(node.K, BlockClustering{});
  if (depth >= options.max_depth) return;
  for (std::size_t b = 0; b < node.K; ++b) {
    std::vector<std::size_t> local;
    for (std::size_t q = 0; q < node.assignment.size(); ++q)
      if (node.assignment[q] == static_cast<int>(b)) local.push_back(q);
    if (local.size() < options.min_block_size || local.size() < options.level.K) continue;
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(local.size()), static_cast<Eigen::Index>(local.size()));
    for (std::size_t r = 0; r < local.size(); ++r)
      for (std::size_t c = 0; c < local.size(); ++c)
        sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            w(static_cast<Eigen::Index>(local[r]), static_cast<Eigen::Index>(local[c]));
    if (sub.isZero(0.0)) continue;
    BlockClustering child;
    try {
      child = spectral_blockmodel(sub, options.level);
    } catch (const ValidationError&) {
      continue;  // too few connected nodes to split
    }
    for (auto& m : child.members) m = node.members[local[m]];
    for (std::size_t cb = 0; cb < child.K; ++cb) child.block_labels[cb] = node.block_labels[b] + std::to_string(cb + 1);
    recurse(child, sub, options, depth + 1);
    node.children[b] = std::move(child);
  }
}

}  // namespace

BlockClustering hierarchical_blockmodel(const Eigen::MatrixXd& w, const HierarchicalOptions& options) {
  if (options.max_depth < 1) throw ValidationError("hierarchy depth must be >= 1");
  BlockClustering root = spectral_blockmodel(w, options.level);
  recurse(root, w, options, 1);
  return root;
}

std::vector<std::string> BlockClustering::leaf_labels() const {
  std::size_t total = 0;
  for (auto m : members) total = std::max(total, m + 1);
  std::vector<std::string> out(total, "NA");
  // Top-level assignment first, then overwrite with deeper labels.
  const auto fill = [&](const BlockClustering& node, const auto& self) -> void {
    for (std::size_t q = 0; q < node.assignment.size(); ++q) {
      const int b = node.assignment[q];
      out[node.members[q]] = b < 0 ? (node.members.size() == total ? "NA" : out[node.members[q]])
                                   : node.block_labels[static_cast<std::size_t>(b)];
    }
    for (const auto& c : node.children)
      if (!c.assignment.empty()) self(c, self);
  };
  fill(*this, fill);
  return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  const auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(n));
  const double maximum = 0.5 * (sa + sb);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace sadgraph

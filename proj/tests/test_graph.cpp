#include "oracles.hpp"
#include "sadgraph/error.hpp"
#include "sadgraph/graph.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace sadgraph;

namespace {

Eigen::MatrixXd random_points_distance(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd p(n, 2);
  for (auto& e : p.reshaped()) e = g(rng);
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (p.row(i) - p.row(j)).norm();
  return d;
}

Eigen::MatrixXd planted_blocks(std::mt19937_64& rng, const std::vector<int>& truth, double p_in, double p_out) {
  const auto n = static_cast<Eigen::Index>(truth.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        const double p = truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)] ? p_in : p_out;
        w(i, j) = u(rng) < p ? 1.0 : 0.0;
      }
  return w;
}

}  // namespace

TEST_CASE("adjacency aggregates lag coefficients") {
  const ThetaLayout layout(2, 1, 0, 2);
  std::vector<ThetaVector> models(2, ThetaVector(layout));
  models[0].set({FeatureKind::node, 1}, 1, 0.5);
  models[0].set({FeatureKind::node, 1}, 2, 0.25);
  models[1].set({FeatureKind::node, 0}, 1, -0.4);
  models[1].set({FeatureKind::exogenous, 0}, 2, 0.3);
  const auto sum = extract_adjacency(models, LagAggregation::sum);
  CHECK(sum.weights(0, 1) == 0.75);
  CHECK(sum.weights(1, 0) == -0.4);
  CHECK(sum.exogenous(1, 0) == 0.3);
  CHECK(extract_adjacency(models, LagAggregation::max_abs).weights(0, 1) == 0.5);
  std::vector<ThetaVector> bad{ThetaVector(layout), ThetaVector(ThetaLayout(3, 1, 0, 2))};
  CHECK_THROWS_AS((void)extract_adjacency(bad), ValidationError);
}

TEST_CASE("single-lag adjacency is the coefficient matrix for every aggregator") {
  const ThetaLayout layout(3, 0, 0, 1);
  std::vector<ThetaVector> models(3, ThetaVector(layout));
  Eigen::MatrixXd a(3, 3);
  a << 0.1, -0.2, 0.3, 0.0, 0.5, -0.6, 0.7, 0.8, -0.9;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      models[i].set({FeatureKind::node, j}, 1, a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (auto agg : {LagAggregation::sum, LagAggregation::max_abs, LagAggregation::first_lag})
    CHECK(extract_adjacency(models, agg).weights == a);
}

TEST_CASE("threshold keeps entries strictly above c with their sign") {
  Adjacency adj;
  adj.weights = Eigen::RowVector3d(0.2, -0.16, 0.1);
  const auto t = threshold_graph(adj, 0.15);
  CHECK(t.weights(0, 0) == 0.2);
  CHECK(t.weights(0, 1) == -0.16);
  CHECK(t.weights(0, 2) == 0.0);
  CHECK(threshold_graph(adj, 0.0).weights == adj.weights);
  CHECK(threshold_graph(adj, std::numeric_limits<double>::infinity()).weights.isZero());
}

TEST_CASE("threshold is idempotent and monotone in c") {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    Adjacency adj;
    adj.weights.resize(5, 5);
    for (auto& e : adj.weights.reshaped()) e = g(rng);
    const double c1 = 0.05 * (trial % 5), c2 = c1 + 0.1;
    const auto t1 = threshold_graph(adj, c1), t2 = threshold_graph(adj, c2);
    CHECK(threshold_graph(t1, c1).weights == t1.weights);
    CHECK((binarize(t2.weights).array() <= binarize(t1.weights).array()).all());
  }
}

TEST_CASE("correlation of binary series") {
  Eigen::MatrixXd s(3, 6);
  s << 1, 0, 1, 0, 1, 0,  //
      0, 1, 0, 1, 0, 1,   //
      1, 1, 1, 1, 1, 1;
  std::size_t zero_var = 0;
  const auto c = abnormality_correlation(s, &zero_var);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK(c(0, 1) == doctest::Approx(-1.0));
  CHECK(c(2, 0) == 0.0);
  CHECK(c(2, 2) == 1.0);
  CHECK(zero_var == 1);
  CHECK((c - c.transpose()).isZero());
}

TEST_CASE("independent series are nearly uncorrelated") {
  std::mt19937_64 rng(82);
  std::bernoulli_distribution coin(0.3);
  Eigen::MatrixXd s(4, 10000);
  for (auto& e : s.reshaped()) e = coin(rng) ? 1.0 : 0.0;
  const auto c = abnormality_correlation(s);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(c(i, j)) <= 0.05);
}

TEST_CASE("correlation to distance") {
  Eigen::Matrix3d c;
  c << 1.0, 0.5, -0.3,  //
      0.5, 1.0, 1.0,    //
      -0.3, 1.0, 1.0;
  const auto d = correlation_to_distance(c, 1e3);
  CHECK(d(0, 1) == 2.0);
  CHECK(d(0, 2) == 1e3);
  CHECK(d(1, 2) == 1.0);
  CHECK(d.diagonal().isZero());
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int k = 0; k < 100; ++k) {
    Eigen::Matrix2d m;
    const double a = u(rng), b = u(rng);
    m << 1.0, a, b, 1.0;
    const auto dm = correlation_to_distance(m);
    if (a > b) CHECK(dm(0, 1) < dm(1, 0));
    if (a < b) CHECK(dm(0, 1) > dm(1, 0));
  }
}

TEST_CASE("symmetrize adds the transpose") {
  Eigen::Matrix2d a;
  a << 0.0, 0.3, 0.1, 0.0;
  const auto s = symmetrize(a);
  CHECK(s(0, 1) == doctest::Approx(0.4));
  CHECK(s(1, 0) == doctest::Approx(0.4));
  CHECK((s - s.transpose()).isZero(0.0));
  const Eigen::Matrix2d sym = Eigen::Matrix2d::Ones();
  CHECK(symmetrize(sym) == 2.0 * sym);
}

TEST_CASE("agglomerative clustering basics") {
  Eigen::Matrix2d two;
  two << 0.0, 3.5, 3.5, 0.0;
  const auto t = hierarchical_cluster(two);
  REQUIRE(t.merges.size() == 1);
  CHECK(t.merges[0].height == 3.5);
  Eigen::Matrix3d three;
  three << 0, 1, 100, 1, 0, 100, 100, 100, 0;
  const auto u = hierarchical_cluster(three);
  CHECK(std::min(u.merges[0].left, u.merges[0].right) == 0);
  CHECK(std::max(u.merges[0].left, u.merges[0].right) == 1);
  CHECK(u.merges[0].height == 1.0);
  CHECK(u.merges[1].size == 3);
}

TEST_CASE("merge heights match an independent agglomerative implementation") {
  std::mt19937_64 rng(84);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_points_distance(rng, 10);
    for (int link = 0; link < 3; ++link) {
      const auto kind = link == 0 ? Linkage::average : link == 1 ? Linkage::complete : Linkage::single;
      const auto tree = hierarchical_cluster(d, kind);
      const auto expect = oracle::naive_merge_heights(d, link);
      REQUIRE(tree.merges.size() == expect.size());
      for (std::size_t k = 0; k < expect.size(); ++k) CHECK(tree.merges[k].height == doctest::Approx(expect[k]));
    }
  }
}

TEST_CASE("dendrogram cuts and leaf order") {
  Eigen::MatrixXd d(4, 4);
  d << 0, 1, 10, 10,  //
      1, 0, 10, 10,   //
      10, 10, 0, 2,   //
      10, 10, 2, 0;
  const auto tree = hierarchical_cluster(d);
  CHECK(tree.cut(2) == std::vector<int>{0, 0, 1, 1});
  CHECK(tree.cut(4) == std::vector<int>{0, 1, 2, 3});
  CHECK(tree.cut(1) == std::vector<int>{0, 0, 0, 0});
  auto order = tree.leaf_order();
  CHECK(order.size() == 4);
  std::sort(order.begin(), order.end());
  CHECK(order == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("far constant does not change the dendrogram topology") {
  std::mt19937_64 rng(85);
  std::bernoulli_distribution coin(0.3);
  Eigen::MatrixXd s(8, 300);
  for (auto& e : s.reshaped()) e = coin(rng) ? 1.0 : 0.0;
  s.row(1) = s.row(0);
  s.row(3).head(200) = s.row(2).head(200);
  const auto corr = abnormality_correlation(s);
  const auto a = hierarchical_cluster(correlation_to_distance(corr, 1e3));
  const auto b = hierarchical_cluster(correlation_to_distance(corr, 1e6));
  for (std::size_t k = 1; k <= 8; ++k) CHECK(a.cut(k) == b.cut(k));
}

TEST_CASE("disconnected complete blocks are recovered exactly") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(8, 8);
  w.topLeftCorner(4, 4).setOnes();
  w.bottomRightCorner(4, 4).setOnes();
  const auto r = spectral_blockmodel(w, BlockmodelOptions{2, std::nullopt, 0.95, 0, 20});
  const std::vector<int> truth{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(adjusted_rand_index(r.assignment, truth) == doctest::Approx(1.0));
  CHECK(r.explained_variance_ratio >= 0.95);
  CHECK(r.explained_variance_ratio <= 1.0);
}

TEST_CASE("blockmodel assignment is permutation invariant") {
  std::mt19937_64 rng(86);
  std::vector<int> truth(20);
  for (std::size_t i = 0; i < 20; ++i) truth[i] = i < 10 ? 0 : 1;
  const auto w = planted_blocks(rng, truth, 0.7, 0.05);
  std::vector<Eigen::Index> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd wp(20, 20);
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 20; ++j) wp(i, j) = w(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  const auto a = spectral_blockmodel(w, BlockmodelOptions{2, 2, 0.95, 1, 20});
  const auto b = spectral_blockmodel(wp, BlockmodelOptions{2, 2, 0.95, 1, 20});
  std::vector<int> back(20);
  for (std::size_t i = 0; i < 20; ++i) back[static_cast<std::size_t>(perm[i])] = b.assignment[i];
  CHECK(adjusted_rand_index(a.assignment, back) == doctest::Approx(1.0));
}

TEST_CASE("spectral embedding shape and truncation error") {
  std::mt19937_64 rng(87);
  std::bernoulli_distribution coin(0.4);
  Eigen::MatrixXd w(12, 12);
  for (auto& e : w.reshaped()) e = coin(rng) ? 1.0 : 0.0;
  for (std::size_t d : {1u, 3u, 6u}) {
    Eigen::VectorXd sv;
    const auto z = spectral_embedding(w, d, &sv);
    CHECK(z.rows() == 12);
    CHECK(z.cols() == static_cast<Eigen::Index>(2 * d));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto di = static_cast<Eigen::Index>(d);
    const Eigen::MatrixXd approx = svd.matrixU().leftCols(di) * svd.singularValues().head(di).asDiagonal() *
                                   svd.matrixV().leftCols(di).transpose();
    CHECK((approx - w).squaredNorm() == doctest::Approx(svd.singularValues().tail(12 - di).squaredNorm()));
    // U S^{1/2} (V S^{1/2})^T reconstructs the rank-d approximation.
    const Eigen::MatrixXd left = z.leftCols(di), right = z.rightCols(di);
    CHECK((left * right.transpose() - approx).norm() <= 1e-9);
    for (Eigen::Index k = 1; k < sv.size(); ++k) CHECK(sv(k) <= sv(k - 1));
  }
}

TEST_CASE("auto dimension reaches the variance ratio") {
  Eigen::VectorXd sv(4);
  sv << 3.0, 2.0, 1.0, 0.5;
  const double total = sv.squaredNorm();
  const std::size_t d = auto_dimension(sv, 0.95);
  CHECK(sv.head(static_cast<Eigen::Index>(d)).squaredNorm() / total >= 0.95);
  CHECK(sv.head(static_cast<Eigen::Index>(d) - 1).squaredNorm() / total < 0.95);
}

namespace {

BlockmodelOptions with_k(std::size_t k) {
  BlockmodelOptions o;
  o.K = k;
  return o;
}

}  // namespace

TEST_CASE("blockmodel errors and degenerate inputs") {
  CHECK_THROWS_AS((void)spectral_blockmodel(Eigen::MatrixXd::Ones(3, 3), with_k(4)), ValidationError);
  const auto z = spectral_blockmodel(Eigen::MatrixXd::Zero(5, 5), with_k(2));
  CHECK_FALSE(z.warnings.empty());
  std::set<int> ids(z.assignment.begin(), z.assignment.end());
  CHECK(ids.size() == 1);
}

TEST_CASE("isolated nodes stay unassigned") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(9, 9);
  w.topLeftCorner(4, 4).setOnes();
  w.block(4, 4, 4, 4).setOnes();
  const auto r = spectral_blockmodel(w, with_k(2));
  CHECK(r.assignment[8] == -1);
  CHECK(r.leaf_labels()[8] == "NA");
}

TEST_CASE("hierarchical blockmodel") {
  std::mt19937_64 rng(88);
  std::vector<int> truth(24);
  for (std::size_t i = 0; i < 24; ++i) truth[i] = static_cast<int>(i / 12);
  const auto w = planted_blocks(rng, truth, 0.6, 0.02);
  HierarchicalOptions opts;
  opts.max_depth = 1;
  const auto flat = spectral_blockmodel(w, opts.level);
  const auto one = hierarchical_blockmodel(w, opts);
  CHECK(one.assignment == flat.assignment);
  for (const auto& c : one.children) CHECK(c.assignment.empty());
  opts.max_depth = 2;
  opts.min_block_size = 100;
  const auto guarded = hierarchical_blockmodel(w, opts);
  for (const auto& c : guarded.children) CHECK(c.assignment.empty());
  opts.min_block_size = 4;
  const auto deep = hierarchical_blockmodel(w, opts);
  const auto labels = deep.leaf_labels();
  CHECK(labels.size() == 24);
  for (const auto& l : labels) CHECK(l.size() == 2);
}

TEST_CASE("adjusted Rand index") {
  const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index(a, c) < 0.0);
}

#pragma once

// Graph artifacts from fitted node models: adjacency, thresholding,
// correlation distances, agglomerative clustering and spectral blockmodels.

#include "sadgraph/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sadgraph {

/// weights(i, j) is the aggregated effect of series j on node i.
struct Adjacency {
  Eigen::MatrixXd weights;
  std::vector<std::string> labels;
  bool directed{true};
  /// exogenous(i, j): effect of exogenous series j on node i.
  Eigen::MatrixXd exogenous;
  std::vector<std::string> exogenous_labels;
};

/// Throws ValidationError when the models disagree on the series roster.
[[nodiscard]] Adjacency extract_adjacency(std::span<const ThetaVector> models,
                                          LagAggregation aggregation = LagAggregation::sum,
                                          const std::vector<std::string>& labels = {},
                                          const std::vector<std::string>& exogenous_labels = {});

/// Zeroes entries with |w| <= c (exogenous block included).
[[nodiscard]] Adjacency threshold_graph(const Adjacency& adjacency, double c);

/// 1 where the entry is nonzero.
[[nodiscard]] Eigen::MatrixXd binarize(const Eigen::MatrixXd& weights);

/// Pearson correlation between rows of `series` (one series per row).
/// Rows with zero variance correlate 0 with everything except themselves;
/// their count goes to `zero_variance`.
[[nodiscard]] Eigen::MatrixXd abnormality_correlation(const Eigen::MatrixXd& series,
                                                      std::size_t* zero_variance = nullptr);

/// 1/corr for positive correlations, `far_constant` otherwise, zero diagonal.
[[nodiscard]] Eigen::MatrixXd correlation_to_distance(const Eigen::MatrixXd& corr, double far_constant = 1e3);

/// A + A^T.
[[nodiscard]] Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

enum class Linkage { average, complete, single };

[[nodiscard]] std::string to_string(Linkage linkage);
[[nodiscard]] Linkage parse_linkage(std::string_view name);

/// Leaves are 0..n-1; merge k creates cluster n + k.
struct Merge {
  std::size_t left{0};
  std::size_t right{0};
  double height{0.0};
  std::size_t size{0};
};

struct Dendrogram {
  std::size_t leaves{0};
  std::vector<Merge> merges;

  /// Flat labels for k clusters (0..k-1, numbered by smallest member).
  [[nodiscard]] std::vector<int> cut(std::size_t k) const;
  /// Leaves in left-to-right plotting order.
  [[nodiscard]] std::vector<std::size_t> leaf_order() const;
};

/// Agglomerative clustering by Lance-Williams updates. Ties between equal
/// distances go to the pair with the smaller cluster ids.
[[nodiscard]] Dendrogram hierarchical_cluster(const Eigen::MatrixXd& distance, Linkage linkage = Linkage::average);

// ---------------------------------------------------------------------------
// Spectral blockmodels

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double inertia{0.0};
};

/// Lloyd iterations from k-means++ seeds; best inertia over `restarts`.
[[nodiscard]] KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                                  int restarts = 20, int max_iter = 300);

/// Smallest d whose cumulative squared singular values reach `ratio` of the total.
[[nodiscard]] std::size_t auto_dimension(const Eigen::VectorXd& singular_values, double ratio = 0.95);

/// Rows [U_d S_d^{1/2} | V_d S_d^{1/2}] of the SVD of W.
[[nodiscard]] Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& w, std::size_t d,
                                                 Eigen::VectorXd* singular_values = nullptr);

struct BlockClustering {
  /// Block id per node, -1 for nodes with no edges.
  std::vector<int> assignment;
  std::size_t K{0};
  std::size_t d{0};
  double explained_variance_ratio{0.0};
  Eigen::VectorXd singular_values;
  /// Global node ids covered by this clustering.
  std::vector<std::size_t> members;
  /// Block labels: "A", "B", ... at the top, "A1", "A2", ... below.
  std::vector<std::string> block_labels;
  /// One entry per block; empty when the block was not split further.
  std::vector<BlockClustering> children;
  std::vector<std::string> warnings;

  /// Leaf label of every node ("NA" when unassigned).
  [[nodiscard]] std::vector<std::string> leaf_labels() const;
};

struct BlockmodelOptions {
  std::size_t K{2};
  std::optional<std::size_t> d;  // auto when empty
  double variance_ratio{0.95};
  std::uint64_t seed{0};
  int restarts{20};
};

/// Throws ValidationError when K exceeds the number of nodes or K < 1.
[[nodiscard]] BlockClustering spectral_blockmodel(const Eigen::MatrixXd& w, const BlockmodelOptions& options = {});

struct HierarchicalOptions {
  BlockmodelOptions level{};
  std::size_t max_depth{2};
  std::size_t min_block_size{4};
};

[[nodiscard]] BlockClustering hierarchical_blockmodel(const Eigen::MatrixXd& w, const HierarchicalOptions& options = {});

/// Adjusted Rand index between two labelings of the same items.
[[nodiscard]] double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace sadgraph

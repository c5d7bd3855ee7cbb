#pragma once

// Discrete Hawkes GLM: link functions, parameter layout, lag-window design
// matrices and a ground-truth simulator.

#include "sadgraph/ingest.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sadgraph {

enum class LinkKind { linear, sigmoid };

/// Monotone link g with derivative bounds m_g <= g' <= M_g on its domain.
/// Linear: identity on [0,1]. Sigmoid: logistic on [-M, M].
class LinkFunction {
 public:
  [[nodiscard]] static LinkFunction linear() { return LinkFunction(LinkKind::linear, 1.0); }
  [[nodiscard]] static LinkFunction sigmoid(double domain_bound = 10.0);

  [[nodiscard]] LinkKind kind() const noexcept { return kind_; }
  [[nodiscard]] double domain_bound() const noexcept { return bound_; }
  [[nodiscard]] double domain_lower() const noexcept { return kind_ == LinkKind::linear ? 0.0 : -bound_; }
  [[nodiscard]] double domain_upper() const noexcept { return kind_ == LinkKind::linear ? 1.0 : bound_; }
  [[nodiscard]] bool in_domain(double x, double tol = 1e-9) const noexcept {
    return x >= domain_lower() - tol && x <= domain_upper() + tol;
  }

  [[nodiscard]] double operator()(double x) const noexcept;
  [[nodiscard]] double derivative(double x) const noexcept;
  [[nodiscard]] double lower_slope() const noexcept;  // m_g
  [[nodiscard]] double upper_slope() const noexcept;  // M_g

 private:
  LinkFunction(LinkKind kind, double bound) : kind_(kind), bound_(bound) {}
  LinkKind kind_;
  double bound_;
};

[[nodiscard]] std::string to_string(LinkKind kind);
[[nodiscard]] LinkKind parse_link_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Parameter layout

enum class FeatureKind { static_covariate, exogenous, node };

/// A whole series used as a regressor (all lags of it, for dynamic series).
struct FeatureId {
  FeatureKind kind{FeatureKind::node};
  std::size_t index{0};

  friend auto operator<=>(const FeatureId&, const FeatureId&) = default;
};

/// Coordinates of theta: nu, then gamma per static covariate, then beta per
/// exogenous series by lag 1..d, then alpha per node series by lag 1..d.
/// `features` restricts which series appear; the order is always canonical.
class ThetaLayout {
 public:
  ThetaLayout() = default;
  ThetaLayout(std::size_t nodes, std::size_t exogenous, std::size_t statics, std::size_t depth,
              std::optional<std::vector<FeatureId>> features = std::nullopt);

  [[nodiscard]] std::size_t nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t exogenous() const noexcept { return exogenous_; }
  [[nodiscard]] std::size_t statics() const noexcept { return statics_; }
  [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
  [[nodiscard]] const std::vector<FeatureId>& features() const noexcept { return features_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool contains(FeatureId f) const;
  /// Index of the first coordinate of a feature (lag 1 for dynamic series).
  [[nodiscard]] std::optional<std::size_t> offset(FeatureId f) const;
  [[nodiscard]] std::size_t width(FeatureId f) const noexcept {
    return f.kind == FeatureKind::static_covariate ? 1 : depth_;
  }
  /// Every series of the panel, in canonical order.
  [[nodiscard]] std::vector<FeatureId> all_features() const;

  friend bool operator==(const ThetaLayout&, const ThetaLayout&) = default;

 private:
  std::size_t nodes_{0}, exogenous_{0}, statics_{0}, depth_{1};
  std::vector<FeatureId> features_;
  std::vector<std::size_t> offsets_;
  std::size_t size_{1};
};

/// Parameter vector of one node model, addressed through its layout.
/// Coefficients of series missing from the layout read as zero.
class ThetaVector {
 public:
  ThetaVector() = default;
  explicit ThetaVector(ThetaLayout layout);
  ThetaVector(ThetaLayout layout, Eigen::VectorXd values);

  [[nodiscard]] const ThetaLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::VectorXd& values() noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  [[nodiscard]] double nu() const { return values_(0); }
  [[nodiscard]] double gamma(std::size_t j) const;
  [[nodiscard]] double beta(std::size_t j, std::size_t lag) const;
  [[nodiscard]] double alpha(std::size_t j, std::size_t lag) const;
  void set(FeatureId f, std::size_t lag, double value);
  void set_nu(double v) { values_(0) = v; }

  [[nodiscard]] Eigen::VectorXd flatten() const { return values_; }
  [[nodiscard]] static ThetaVector unflatten(const ThetaLayout& layout, const Eigen::VectorXd& flat);

 private:
  [[nodiscard]] double get(FeatureId f, std::size_t lag) const;
  ThetaLayout layout_;
  Eigen::VectorXd values_;
};

/// How the lag coefficients alpha_ij1..alpha_ijd collapse into one edge weight.
enum class LagAggregation { sum, max_abs, first_lag };

[[nodiscard]] std::string to_string(LagAggregation agg);
[[nodiscard]] LagAggregation parse_lag_aggregation(std::string_view name);
/// Aggregated effect of node series `source` in a node model (0 when absent).
[[nodiscard]] double edge_weight(const ThetaVector& theta, std::size_t source, LagAggregation agg = LagAggregation::sum);
/// Same for an exogenous series.
[[nodiscard]] double exogenous_weight(const ThetaVector& theta, std::size_t source,
                                      LagAggregation agg = LagAggregation::sum);

// ---------------------------------------------------------------------------
// Design matrix

/// Stacked lag windows for one target node. Row t is
/// (1, z, x^(1)_{t-1..t-d}, ..., y^(1)_{t-1..t-d}, ...) restricted to the layout.
struct DesignMatrix {
  ThetaLayout layout;
  std::size_t target{0};
  Eigen::MatrixXd rows;       // T x N
  Eigen::VectorXd response;   // T, binarized
  Eigen::VectorXd weights;    // T, sums to T
  double max_abs{1.0};        // M_w
  Eigen::MatrixXd gram;       // weighted (1/T) sum w w^T
  double lambda_min{0.0};     // lambda_1
  double lambda_max{0.0};

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(rows.rows()); }
  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(rows.cols()); }
  /// Replaces the row weights (rescaled to sum to T) and refreshes the Gram matrix.
  void set_weights(const Eigen::VectorXd& w);
  void refresh();
  /// (1/T) sum_t weight_t w_t y_t.
  [[nodiscard]] Eigen::VectorXd response_moment() const;
};

/// Builds the design of `target` over all panels. Rows whose window or
/// response touches an invalid cell are skipped. Throws InsufficientDataError
/// when no panel is longer than `depth`.
[[nodiscard]] DesignMatrix build_design(std::span<const PatientPanel> panels, std::size_t target, std::size_t depth,
                                        const std::optional<std::vector<FeatureId>>& features = std::nullopt);
[[nodiscard]] DesignMatrix build_design(const PatientPanel& panel, std::size_t target, std::size_t depth,
                                        const std::optional<std::vector<FeatureId>>& features = std::nullopt);

/// g(w^T theta). Throws DomainError when the predictor is outside the link domain.
[[nodiscard]] double predict(const ThetaVector& theta, const Eigen::Ref<const Eigen::VectorXd>& window,
                             const LinkFunction& link);
/// Probabilities for every design row, clamping the predictor into the domain.
[[nodiscard]] Eigen::VectorXd predict_rows(const Eigen::VectorXd& theta, const DesignMatrix& design,
                                           const LinkFunction& link);

// ---------------------------------------------------------------------------
// Simulation

struct SimulationSpec {
  std::size_t nodes{1}, exogenous{0}, statics{0}, depth{1}, length{100};
  Eigen::MatrixXd alpha;         // N1 x N1
  Eigen::MatrixXd beta;          // N1 x N2
  Eigen::MatrixXd decay;         // R, N1 x N1, > 0
  Eigen::MatrixXd decay_exo;     // R~, N1 x N2, > 0
  Eigen::MatrixXd gamma;         // N1 x N3
  Eigen::VectorXd nu;            // N1
  Eigen::VectorXd z;             // N3 static covariate values
  LinkKind link{LinkKind::sigmoid};
  double link_bound{10.0};
  double ar_coefficient{0.5};
  double noise_scale{1.0};
  double clip{3.0};
  /// Generate with the full history sum instead of truncating at depth d.
  bool full_history{false};

  /// Zero-filled spec of the given shape with unit decays.
  [[nodiscard]] static SimulationSpec zeros(std::size_t nodes, std::size_t exogenous, std::size_t statics,
                                            std::size_t depth, std::size_t length);
  /// Throws ValidationError on shape errors or non-positive decays.
  void validate() const;
  [[nodiscard]] LinkFunction link_function() const;
  /// Lag-expanded true parameters of every node: alpha_ij e^{-R_ij tau}, ...
  [[nodiscard]] std::vector<ThetaVector> true_thetas() const;
};

struct SimulationResult {
  PatientPanel panel;  // length d + T; the first d steps are the zero history
  std::vector<ThetaVector> thetas;
  std::size_t clamped{0};
};

[[nodiscard]] SimulationResult simulate_panel(const SimulationSpec& spec, std::uint64_t seed);
/// Independent patients, each with its own seed derived from `seed`.
[[nodiscard]] std::vector<PatientPanel> simulate_panels(const SimulationSpec& spec, std::size_t count,
                                                        std::uint64_t seed);

}  // namespace sadgraph

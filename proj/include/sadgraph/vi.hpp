#pragma once

// Variational-inequality estimator of a node model: find theta_hat in Theta
// with <F(theta_hat), theta - theta_hat> >= 0 for every theta in Theta, where
// F(theta) = (1/T) sum_t w_t (g(w_t^T theta) - y_t) is the empirical field.

#include "sadgraph/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace sadgraph {

enum class FeasibleKind { linear_link_polytope, sigmoid_box_polytope };

/// Theta = { lower_k <= a_k^T theta <= upper_k } intersected with the box
/// ||theta||_inf <= theta_max. The a_k are the distinct design rows.
struct FeasibleSet {
  FeasibleKind kind{FeasibleKind::sigmoid_box_polytope};
  Eigen::MatrixXd normals;  // one halfspace pair per row
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double theta_max{100.0};

  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(normals.cols()); }
  /// Largest constraint violation (0 when feasible), box included.
  [[nodiscard]] double max_violation(const Eigen::VectorXd& theta) const;
  [[nodiscard]] bool contains(const Eigen::VectorXd& theta, double tol = 1e-9) const {
    return max_violation(theta) <= tol;
  }
  /// A point strictly inside: nu = 1/2 for the linear link, 0 for the sigmoid.
  [[nodiscard]] Eigen::VectorXd interior_point() const;
};

/// Throws InfeasibleError when the constructed set has no interior point.
[[nodiscard]] FeasibleSet build_feasible_set(const DesignMatrix& design, const LinkFunction& link,
                                             double theta_max = 100.0);

struct ProjectionOptions {
  int max_sweeps{500};
  double tol{1e-12};
};

/// Euclidean projection onto an intersection of slabs l_k <= h_k^T x <= u_k
/// by Dykstra's alternating projections. Only slabs violated at the input
/// (plus any found violated afterwards) enter the Dykstra cycle.
class SlabProjector {
 public:
  SlabProjector() = default;
  SlabProjector(Eigen::MatrixXd normals, Eigen::VectorXd lower, Eigen::VectorXd upper,
                ProjectionOptions options = {});

  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& y) const;
  [[nodiscard]] double max_violation(const Eigen::VectorXd& x) const;
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(normals_.rows()); }

 private:
  [[nodiscard]] Eigen::VectorXd dykstra(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& active) const;

  Eigen::MatrixXd normals_;
  Eigen::VectorXd lower_, upper_, norm2_;
  ProjectionOptions options_;
};

/// Geometry in which the extragradient steps and projections are taken.
/// `gram` whitens by the Cholesky factor of the (regularized) Gram matrix so
/// the field has unit curvature scale; `euclidean` uses the plain inner
/// product with step 1/(M_g lambda_max).
enum class SolverMetric { gram, euclidean };

struct SolverOptions {
  double tol{1e-8};
  int max_iter{5000};
  SolverMetric metric{SolverMetric::gram};
  ProjectionOptions projection{};
  std::optional<Eigen::VectorXd> initial;
  /// When set, one line "iter residual field_norm" per iteration.
  std::ostream* trace{nullptr};
};

struct VIResult {
  ThetaVector theta_hat;
  double residual{0.0};
  int iterations{0};
  double field_norm{0.0};
  double lambda1{0.0};
  bool converged{false};
};

/// (1/T) sum_t weight_t w_t (g(w_t^T theta) - y_t). Throws DomainError when a
/// predictor leaves the link domain.
[[nodiscard]] Eigen::VectorXd empirical_field(const DesignMatrix& design, const Eigen::VectorXd& theta,
                                              const LinkFunction& link);
[[nodiscard]] Eigen::VectorXd empirical_field(const DesignMatrix& design, const ThetaVector& theta,
                                              const LinkFunction& link);

/// Extragradient iteration with Dykstra projections. Stops when the natural
/// residual ||theta - theta_plus||_2 drops below `tol`, where theta_plus is
/// the projected field step in the chosen metric. Running out of iterations
/// returns converged = false with the last iterate.
[[nodiscard]] VIResult solve_vi(const DesignMatrix& design, const LinkFunction& link, const FeasibleSet& feasible,
                                const SolverOptions& options = {});

/// Constrained least squares min (1/2T) sum (y - w^T theta)^2 over Theta by
/// accelerated projected gradient. Reference route for the linear link.
[[nodiscard]] VIResult fit_lse_linear(const DesignMatrix& design, const FeasibleSet& feasible,
                                      const SolverOptions& options = {});

// ---------------------------------------------------------------------------
// Node-by-node fitting

struct NodeFitConfig {
  std::size_t depth{1};
  LinkKind link{LinkKind::sigmoid};
  double link_bound{10.0};
  double theta_max{100.0};
  bool class_weighting{false};
  SolverOptions solver{};

  [[nodiscard]] LinkFunction link_function() const {
    return link == LinkKind::linear ? LinkFunction::linear() : LinkFunction::sigmoid(link_bound);
  }
};

/// Builds the design of `target`, optionally balances class weights, and solves the VI.
[[nodiscard]] VIResult fit_node(std::span<const PatientPanel> panels, std::size_t target,
                                const std::optional<std::vector<FeatureId>>& features, const NodeFitConfig& config);
[[nodiscard]] VIResult fit_design(DesignMatrix design, const NodeFitConfig& config);

/// Every node fitted independently; `features[i]` restricts node i when given.
[[nodiscard]] std::vector<VIResult> fit_network(
    std::span<const PatientPanel> panels, const NodeFitConfig& config,
    const std::vector<std::optional<std::vector<FeatureId>>>& features = {});

// ---------------------------------------------------------------------------
// Stochastic gradient fitters on the least-squares objective

enum class SgdLoss { least_squares, zero_one };

struct SgdConfig {
  std::size_t depth{1};
  LinkKind link{LinkKind::sigmoid};
  double link_bound{10.0};
  double step{5e-3};
  double tolerance{1e-2};
  int max_iter{1000};
  std::size_t batch_size{1};
  /// Guarded updates on a held-out split instead of plain SGD.
  bool modified{false};
  double test_fraction{0.2};
  SgdLoss loss{SgdLoss::least_squares};
  double threshold{0.5};
  /// Keep static-covariate coefficients at zero (subgroup analysis).
  bool freeze_static{false};
  std::uint64_t seed{0};
  std::optional<std::vector<ThetaVector>> initial;
};

struct SgdResult {
  std::vector<ThetaVector> thetas;
  /// Training objective (mean squared error) after each iteration, starting at iteration 0.
  std::vector<double> objective;
  /// Held-out loss of the stored parameters per node (modified fitter only).
  std::vector<std::vector<double>> stored_loss;
  int iterations{0};
};

/// Throws InsufficientDataError when no training rows remain.
[[nodiscard]] SgdResult fit_sgd(std::span<const PatientPanel> panels, const SgdConfig& config);

/// Mean over rows of (y - g(w^T theta))^2.
[[nodiscard]] double least_squares_objective(const DesignMatrix& design, const Eigen::VectorXd& theta,
                                             const LinkFunction& link);

}  // namespace sadgraph

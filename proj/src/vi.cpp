#include "sadgraph/vi.hpp"

#include "sadgraph/error.hpp"
#include "sadgraph/parallel.hpp"
#include "sadgraph/selection.hpp"

#include <algorithm>
#include <cmath>

namespace sadgraph {

namespace {

void check_dimensions(const DesignMatrix& design, const FeasibleSet& feasible) {
  if (design.rows.rows() == 0) throw InsufficientDataError("design has no rows");
  if (design.dimension() != feasible.dimension())
    throw ValidationError("design and feasible set dimensions differ");
  if (design.response.size() != design.rows.rows() || design.weights.size() != design.rows.rows())
    throw ValidationError("design response/weights do not match its rows");
}

// Field with predictors clamped into the link domain; used inside the solver
// where projections are only accurate to the Dykstra tolerance.
Eigen::VectorXd field_clamped(const DesignMatrix& design, const Eigen::VectorXd& theta, const LinkFunction& link) {
  Eigen::VectorXd eta = design.rows * theta;
  for (Eigen::Index t = 0; t < eta.size(); ++t)
    eta(t) = link(std::clamp(eta(t), link.domain_lower(), link.domain_upper())) - design.response(t);
  return design.rows.transpose() * design.weights.cwiseProduct(eta) / static_cast<double>(design.rows.rows());
}

// theta = map * phi; the feasible set expressed in phi coordinates.
SlabProjector make_projector(const FeasibleSet& feasible, const Eigen::MatrixXd& map, const ProjectionOptions& opts) {
  const Eigen::Index n = map.rows();
  const Eigen::Index u = feasible.normals.rows();
  Eigen::MatrixXd normals(u + n, n);
  normals.topRows(u) = feasible.normals * map;
  normals.bottomRows(n) = map;
  Eigen::VectorXd lower(u + n), upper(u + n);
  lower << feasible.lower, Eigen::VectorXd::Constant(n, -feasible.theta_max);
  upper << feasible.upper, Eigen::VectorXd::Constant(n, feasible.theta_max);
  return SlabProjector(std::move(normals), std::move(lower), std::move(upper), opts);
}

struct Geometry {
  Eigen::MatrixXd map;      // theta = map * phi
  Eigen::MatrixXd inverse;  // phi = inverse * theta
  double step{1.0};
};

// Extragradient makes no progress along directions whose curvature equals
// exactly 1/step, which is every direction of the whitened linear-link field.
constexpr double kStepFraction = 0.5;

Geometry make_geometry(const DesignMatrix& design, const LinkFunction& link, SolverMetric metric) {
  const Eigen::Index n = static_cast<Eigen::Index>(design.dimension());
  Geometry g;
  if (metric == SolverMetric::euclidean) {
    g.map = Eigen::MatrixXd::Identity(n, n);
    g.inverse = g.map;
    const double lmax = std::max(design.lambda_max, 1e-12);
    g.step = kStepFraction / (link.upper_slope() * lmax);
    return g;
  }
  const double ridge = 1e-9 * std::max(design.gram.trace() / static_cast<double>(n), 1e-12);
  const Eigen::MatrixXd p = design.gram + ridge * Eigen::MatrixXd::Identity(n, n);
  const Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) throw RankDeficiencyError("Gram matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  g.inverse = l.transpose();
  g.map = l.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
  g.step = kStepFraction / link.upper_slope();
  return g;
}

Eigen::VectorXd feasible_start(const FeasibleSet& feasible, const SolverOptions& options) {
  if (!options.initial) return feasible.interior_point();
  if (static_cast<std::size_t>(options.initial->size()) != feasible.dimension())
    throw ValidationError("initial point has the wrong dimension");
  return *options.initial;
}

}  // namespace

Eigen::VectorXd empirical_field(const DesignMatrix& design, const Eigen::VectorXd& theta, const LinkFunction& link) {
  if (static_cast<std::size_t>(theta.size()) != design.dimension())
    throw ValidationError("theta and design dimensions differ");
  if (design.rows.rows() == 0) throw InsufficientDataError("design has no rows");
  Eigen::VectorXd eta = design.rows * theta;
  for (Eigen::Index t = 0; t < eta.size(); ++t) {
    if (!link.in_domain(eta(t)))
      throw DomainError("linear predictor " + std::to_string(eta(t)) + " at row " + std::to_string(t) +
                        " leaves the link domain");
    eta(t) = link(eta(t)) - design.response(t);
  }
  return design.rows.transpose() * design.weights.cwiseProduct(eta) / static_cast<double>(design.rows.rows());
}

Eigen::VectorXd empirical_field(const DesignMatrix& design, const ThetaVector& theta, const LinkFunction& link) {
  if (!(theta.layout() == design.layout)) throw ValidationError("theta layout does not match the design");
  return empirical_field(design, theta.values(), link);
}

VIResult solve_vi(const DesignMatrix& design, const LinkFunction& link, const FeasibleSet& feasible,
                  const SolverOptions& options) {
  check_dimensions(design, feasible);
  const Geometry geo = make_geometry(design, link, options.metric);
  const SlabProjector proj = make_projector(feasible, geo.map, options.projection);
  const auto field_phi = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    return geo.map.transpose() * field_clamped(design, geo.map * phi, link);
  };

  Eigen::VectorXd phi = proj.project(geo.inverse * feasible_start(feasible, options));
  VIResult result;
  result.lambda1 = design.lambda_min;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd f0 = field_phi(phi);
    const Eigen::VectorXd half = proj.project(phi - geo.step * f0);
    result.residual = (geo.map * (phi - half)).norm();
    result.iterations = iter;
    if (options.trace) *options.trace << iter << ' ' << result.residual << ' ' << f0.norm() << '\n';
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
    const Eigen::VectorXd f1 = field_phi(half);
    phi = proj.project(phi - geo.step * f1);
    result.iterations = iter + 1;
  }
  if (!result.converged) {
    // Report the residual at the returned iterate.
    const Eigen::VectorXd half = proj.project(phi - geo.step * field_phi(phi));
    result.residual = (geo.map * (phi - half)).norm();
    result.converged = result.residual <= options.tol;
  }
  const Eigen::VectorXd theta = geo.map * phi;
  result.field_norm = field_clamped(design, theta, link).norm();
  result.theta_hat = ThetaVector(design.layout, theta);
  return result;
}

VIResult fit_lse_linear(const DesignMatrix& design, const FeasibleSet& feasible, const SolverOptions& options) {
  check_dimensions(design, feasible);
  const Eigen::Index n = static_cast<Eigen::Index>(design.dimension());
  const SlabProjector proj =
      make_projector(feasible, Eigen::MatrixXd::Identity(n, n), options.projection);
  const Eigen::VectorXd moment = design.response_moment();
  const auto grad = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd { return design.gram * theta - moment; };
  const double step = 1.0 / std::max(design.lambda_max, 1e-12);

  Eigen::VectorXd x = proj.project(feasible_start(feasible, options));
  Eigen::VectorXd y = x;
  double t = 1.0;
  VIResult result;
  result.lambda1 = design.lambda_min;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd next = proj.project(y - step * grad(y));
    const Eigen::VectorXd check = proj.project(next - step * grad(next));
    result.residual = (next - check).norm();
    result.iterations = iter + 1;
    if (options.trace) *options.trace << iter << ' ' << result.residual << ' ' << grad(next).norm() << '\n';
    // Gradient-based restart keeps the momentum monotone.
    if ((y - next).dot(next - x) > 0.0) t = 1.0;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    x = next;
    t = t_next;
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  result.field_norm = grad(x).norm();
  result.theta_hat = ThetaVector(design.layout, x);
  return result;
}

// ---------------------------------------------------------------------------

VIResult fit_design(DesignMatrix design, const NodeFitConfig& config) {
  if (config.class_weighting) design.set_weights(class_weights(design.response));
  const LinkFunction link = config.link_function();
  const FeasibleSet feasible = build_feasible_set(design, link, config.theta_max);
  return solve_vi(design, link, feasible, config.solver);
}

VIResult fit_node(std::span<const PatientPanel> panels, std::size_t target,
                  const std::optional<std::vector<FeatureId>>& features, const NodeFitConfig& config) {
  return fit_design(build_design(panels, target, config.depth, features), config);
}

std::vector<VIResult> fit_network(std::span<const PatientPanel> panels, const NodeFitConfig& config,
                                  const std::vector<std::optional<std::vector<FeatureId>>>& features) {
  if (panels.empty()) throw InsufficientDataError("fit_network: no panels");
  const std::size_t nodes = panels.front().node_count();
  if (!features.empty() && features.size() != nodes)
    throw ValidationError("fit_network: need one feature list per node");
  std::vector<VIResult> out(nodes);
  parallel_for(nodes, [&](std::size_t i) {
    out[i] = fit_node(panels, i, features.empty() ? std::nullopt : features[i], config);
  });
  return out;
}

}  // namespace sadgraph

#include "sadgraph/error.hpp"
#include "sadgraph/vi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sadgraph {

namespace {

// Indices of the distinct rows of `m`, in order of first appearance after sorting.
std::vector<Eigen::Index> distinct_rows(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto less = [&m](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(a, c) < m(b, c)) return true;
      if (m(a, c) > m(b, c)) return false;
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<Eigen::Index> keep;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && m.row(order[k]) == m.row(order[k - 1])) continue;
    keep.push_back(order[k]);
  }
  return keep;
}

}  // namespace

double FeasibleSet::max_violation(const Eigen::VectorXd& theta) const {
  double worst = std::max(0.0, theta.cwiseAbs().maxCoeff() - theta_max);
  if (normals.rows() > 0) {
    const Eigen::VectorXd s = normals * theta;
    worst = std::max(worst, (s - upper).maxCoeff());
    worst = std::max(worst, (lower - s).maxCoeff());
  }
  return worst;
}

Eigen::VectorXd FeasibleSet::interior_point() const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(normals.cols());
  if (kind == FeasibleKind::linear_link_polytope && theta.size() > 0) theta(0) = 0.5;
  return theta;
}

FeasibleSet build_feasible_set(const DesignMatrix& design, const LinkFunction& link, double theta_max) {
  if (!(theta_max > 0.0)) throw ValidationError("coefficient box bound must be positive");
  if (design.rows.rows() == 0) throw InsufficientDataError("feasible set needs at least one design row");
  FeasibleSet set;
  set.kind = link.kind() == LinkKind::linear ? FeasibleKind::linear_link_polytope : FeasibleKind::sigmoid_box_polytope;
  set.theta_max = theta_max;
  const auto keep = distinct_rows(design.rows);
  set.normals.resize(static_cast<Eigen::Index>(keep.size()), design.rows.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) set.normals.row(static_cast<Eigen::Index>(k)) = design.rows.row(keep[k]);
  set.lower = Eigen::VectorXd::Constant(set.normals.rows(), link.domain_lower());
  set.upper = Eigen::VectorXd::Constant(set.normals.rows(), link.domain_upper());
  // The intercept column is constant 1, so the interior point sits mid-domain
  // unless the layout lost its intercept.
  if (!set.contains(set.interior_point(), 0.0))
    throw InfeasibleError("feasible set has no interior point at the default start");
  return set;
}

// ---------------------------------------------------------------------------

SlabProjector::SlabProjector(Eigen::MatrixXd normals, Eigen::VectorXd lower, Eigen::VectorXd upper,
                             ProjectionOptions options)
    : normals_(std::move(normals)), lower_(std::move(lower)), upper_(std::move(upper)), options_(options) {
  if (lower_.size() != normals_.rows() || upper_.size() != normals_.rows())
    throw ValidationError("slab bounds do not match the number of normals");
  if ((lower_.array() > upper_.array()).any()) throw InfeasibleError("slab with lower bound above upper bound");
  norm2_ = normals_.rowwise().squaredNorm();
  if ((norm2_.array() <= 0.0).any()) throw ValidationError("slab normal is zero");
}

double SlabProjector::max_violation(const Eigen::VectorXd& x) const {
  if (normals_.rows() == 0) return 0.0;
  const Eigen::VectorXd s = normals_ * x;
  const Eigen::VectorXd over = ((s - upper_).array().max((lower_ - s).array())).matrix();
  return std::max(0.0, (over.array() / norm2_.array().sqrt()).maxCoeff());
}

Eigen::VectorXd SlabProjector::dykstra(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& active) const {
  Eigen::VectorXd x = y;
  // Dykstra increments are multiples of the slab normal; keep the multipliers.
  std::vector<double> inc(active.size(), 0.0);
  const double scale = 1.0 + y.norm();
  for (int sweep = 0; sweep < options_.max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Eigen::Index r = active[k];
      const auto a = normals_.row(r);
      // z = x + inc_k a; project z onto the slab.
      const double s = a.dot(x) + inc[k] * norm2_(r);
      double next = 0.0;
      if (s > upper_(r)) next = (s - upper_(r)) / norm2_(r);
      else if (s < lower_(r)) next = (s - lower_(r)) / norm2_(r);
      // p = z - next a = x + (inc - next) a
      x.noalias() += (inc[k] - next) * a.transpose();
      change += (next - inc[k]) * (next - inc[k]) * norm2_(r);
      inc[k] = next;
    }
    if (std::sqrt(change) <= options_.tol * scale) break;
  }
  return x;
}

Eigen::VectorXd SlabProjector::project(const Eigen::VectorXd& y) const {
  if (normals_.rows() == 0) return y;
  const double feas_tol = options_.tol * (1.0 + y.norm());
  std::vector<char> in_set(static_cast<std::size_t>(normals_.rows()), 0);
  std::vector<Eigen::Index> active;
  const auto add_violated = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd s = normals_ * x;
    bool added = false;
    for (Eigen::Index r = 0; r < s.size(); ++r) {
      if (in_set[static_cast<std::size_t>(r)]) continue;
      const double over = std::max(s(r) - upper_(r), lower_(r) - s(r)) / std::sqrt(norm2_(r));
      if (over > feas_tol) {
        in_set[static_cast<std::size_t>(r)] = 1;
        active.push_back(r);
        added = true;
      }
    }
    return added;
  };
  if (!add_violated(y)) return y;
  Eigen::VectorXd x = y;
  // Each restart adds at least one slab, so this terminates.
  while (true) {
    x = dykstra(y, active);
    if (!add_violated(x)) return x;
  }
}

}  // namespace sadgraph

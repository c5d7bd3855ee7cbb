#include "sadgraph/lp.hpp"

#include "sadgraph/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sadgraph {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

// The primal  min c^T x, R x <= r  (R stacks A and the box rows) has the dual
//   min r^T l  subject to  R^T l = -c,  l >= 0,
// whose simplex multipliers are exactly the primal x. The box rows give a
// feasible starting basis, so no phase one is needed. An unbounded dual ray
// certifies primal infeasibility.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const Eigen::Index n = lp.objective.size();
  if (lp.a.cols() != n && lp.a.rows() > 0) throw ValidationError("LP constraint matrix has the wrong width");
  if (lp.b.size() != lp.a.rows()) throw ValidationError("LP right-hand side has the wrong length");
  if (lp.lower.size() != n || lp.upper.size() != n) throw ValidationError("LP box has the wrong length");
  if (!lp.lower.allFinite() || !lp.upper.allFinite()) throw ValidationError("LP box bounds must be finite");
  if ((lp.lower.array() > lp.upper.array()).any()) {
    LpResult out;
    out.status = LpStatus::infeasible;
    out.x = lp.lower;
    return out;
  }

  const Eigen::Index m0 = lp.a.rows();
  const Eigen::Index m = m0 + 2 * n;
  Eigen::MatrixXd rows(m, n);
  Eigen::VectorXd rhs(m);
  if (m0 > 0) rows.topRows(m0) = lp.a;
  rhs.head(m0) = lp.b;
  rows.middleRows(m0, n) = Eigen::MatrixXd::Identity(n, n);
  rhs.segment(m0, n) = lp.upper;
  rows.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  rhs.tail(n) = -lp.lower;

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(n));
  std::vector<char> in_basis(static_cast<std::size_t>(m), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index r = lp.objective(j) < 0.0 ? m0 + j : m0 + n + j;
    basis[static_cast<std::size_t>(j)] = r;
    in_basis[static_cast<std::size_t>(r)] = 1;
  }

  // bmat columns are R^T restricted to the basis; keep its inverse.
  Eigen::MatrixXd binv(n, n);
  Eigen::VectorXd lambda(n);
  const Eigen::VectorXd target = -lp.objective;
  const auto refactor = [&] {
    Eigen::MatrixXd bmat(n, n);
    for (Eigen::Index k = 0; k < n; ++k) bmat.col(k) = rows.row(basis[static_cast<std::size_t>(k)]).transpose();
    binv = bmat.partialPivLu().inverse();
    lambda = binv * target;
    for (Eigen::Index k = 0; k < n; ++k) lambda(k) = std::max(lambda(k), 0.0);
  };
  refactor();

  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  LpResult out;
  out.status = LpStatus::iteration_limit;
  Eigen::VectorXd x(n);
  double best_value = std::numeric_limits<double>::infinity();
  int stall = 0;
  bool bland = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (iter > 0 && iter % options.refactor_every == 0) refactor();
    Eigen::VectorXd rb(n);
    for (Eigen::Index k = 0; k < n; ++k) rb(k) = rhs(basis[static_cast<std::size_t>(k)]);
    x = binv.transpose() * rb;  // solves bmat^T x = r_B
    const Eigen::VectorXd reduced = rhs - rows * x;

    Eigen::Index enter = -1;
    double most = -options.tol * scale;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (in_basis[static_cast<std::size_t>(r)]) continue;
      if (reduced(r) < most) {
        enter = r;
        if (bland) break;
        most = reduced(r);
      }
    }
    if (enter < 0) {
      out.status = LpStatus::optimal;
      break;
    }

    const Eigen::VectorXd u = binv * rows.row(enter).transpose();
    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (u(k) <= options.tol) continue;
      const double q = lambda(k) / u(k);
      if (q < ratio - 1e-12 ||
          (bland && std::abs(q - ratio) <= 1e-12 && leave >= 0 &&
           basis[static_cast<std::size_t>(k)] < basis[static_cast<std::size_t>(leave)])) {
        ratio = q;
        leave = k;
      }
    }
    if (leave < 0) {
      out.status = LpStatus::infeasible;
      break;
    }

    // Pivot: lambda_B -= ratio * u, entering variable takes value ratio.
    lambda -= ratio * u;
    lambda(leave) = ratio;
    for (Eigen::Index k = 0; k < n; ++k) lambda(k) = std::max(lambda(k), 0.0);
    const double piv = u(leave);
    const Eigen::RowVectorXd pivot_row = binv.row(leave) / piv;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == leave) continue;
      binv.row(k) -= u(k) * pivot_row;
    }
    binv.row(leave) = pivot_row;
    in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave)])] = 0;
    basis[static_cast<std::size_t>(leave)] = enter;
    in_basis[static_cast<std::size_t>(enter)] = 1;

    // Anti-cycling: fall back to Bland's rule when the dual objective stalls.
    double value = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) value += rhs(basis[static_cast<std::size_t>(k)]) * lambda(k);
    if (value < best_value - 1e-12 * scale) {
      best_value = value;
      stall = 0;
      bland = false;
    } else if (++stall > 50) {
      bland = true;
    }
  }
  out.iterations = iter;
  if (out.status != LpStatus::optimal) {
    refactor();
    Eigen::VectorXd rb(n);
    for (Eigen::Index k = 0; k < n; ++k) rb(k) = rhs(basis[static_cast<std::size_t>(k)]);
    x = binv.transpose() * rb;
  }
  out.x = x;
  out.value = lp.objective.dot(x);
  double dual_value = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) dual_value += rhs(basis[static_cast<std::size_t>(k)]) * lambda(k);
  out.duality_gap = std::abs(out.value + dual_value);
  out.primal_infeasibility = std::max(0.0, (rows * x - rhs).maxCoeff());
  return out;
}

}  // namespace sadgraph

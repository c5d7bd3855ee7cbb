#pragma once

// Dense linear programming: minimize c^T x subject to A x <= b and
// lower <= x <= upper (finite box), by a revised simplex on the dual.

#include <Eigen/Dense>

#include <string>

namespace sadgraph {

struct LinearProgram {
  Eigen::VectorXd objective;  // c
  Eigen::MatrixXd a;          // m x n, may have zero rows
  Eigen::VectorXd b;
  Eigen::VectorXd lower;      // finite
  Eigen::VectorXd upper;      // finite
};

enum class LpStatus { optimal, infeasible, iteration_limit };

[[nodiscard]] std::string to_string(LpStatus status);

struct LpOptions {
  int max_iter{50000};
  double tol{1e-9};
  int refactor_every{50};
};

struct LpResult {
  LpStatus status{LpStatus::iteration_limit};
  Eigen::VectorXd x;
  double value{0.0};
  int iterations{0};
  /// c^T x minus the dual objective; zero at an exact optimum.
  double duality_gap{0.0};
  /// max over constraints of the violation of x.
  double primal_infeasibility{0.0};
};

/// Throws ValidationError on shape errors or non-finite box bounds.
[[nodiscard]] LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace sadgraph

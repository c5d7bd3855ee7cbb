#include "sadgraph/error.hpp"
#include "sadgraph/random.hpp"
#include "sadgraph/vi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sadgraph {

namespace {

// Per-row mean squared error gradient: (2/T) sum_t (g(eta) - y) g'(eta) w_t.
Eigen::VectorXd ls_gradient(const DesignMatrix& design, const Eigen::VectorXd& theta, const LinkFunction& link) {
  const Eigen::VectorXd eta = design.rows * theta;
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index t = 0; t < eta.size(); ++t) r(t) = (link(eta(t)) - design.response(t)) * link.derivative(eta(t));
  return 2.0 * design.rows.transpose() * r / static_cast<double>(design.rows.rows());
}

double last_step_loss(const DesignMatrix& design, const Eigen::VectorXd& theta, const LinkFunction& link,
                      const SgdConfig& config) {
  const Eigen::Index last = design.rows.rows() - 1;
  const double p = link(design.rows.row(last).dot(theta));
  const double y = design.response(last);
  if (config.loss == SgdLoss::least_squares) return (y - p) * (y - p);
  return std::abs(y - (p >= config.threshold ? 1.0 : 0.0));
}

}  // namespace

double least_squares_objective(const DesignMatrix& design, const Eigen::VectorXd& theta, const LinkFunction& link) {
  if (design.rows.rows() == 0) throw InsufficientDataError("objective of an empty design");
  const Eigen::VectorXd eta = design.rows * theta;
  double total = 0.0;
  for (Eigen::Index t = 0; t < eta.size(); ++t) {
    const double r = design.response(t) - link(eta(t));
    total += r * r;
  }
  return total / static_cast<double>(eta.size());
}

SgdResult fit_sgd(std::span<const PatientPanel> panels, const SgdConfig& config) {
  if (panels.empty()) throw InsufficientDataError("fit_sgd: no panels");
  if (!(config.step > 0.0) || config.batch_size == 0 || config.max_iter < 0)
    throw ConfigError("fit_sgd: step and batch size must be positive");
  if (config.modified && !(config.test_fraction > 0.0 && config.test_fraction < 1.0))
    throw ConfigError("fit_sgd: test fraction must lie in (0,1)");
  const LinkFunction link =
      config.link == LinkKind::linear ? LinkFunction::linear() : LinkFunction::sigmoid(config.link_bound);
  const std::size_t nodes = panels.front().node_count();

  // designs[m][i]: node i on panel m; panels without a usable window drop out.
  std::vector<std::vector<DesignMatrix>> designs;
  for (const auto& panel : panels) {
    std::vector<DesignMatrix> per_node;
    try {
      for (std::size_t i = 0; i < nodes; ++i) per_node.push_back(build_design(panel, i, config.depth));
    } catch (const InsufficientDataError&) {
      continue;
    }
    designs.push_back(std::move(per_node));
  }

  std::mt19937_64 rng(derive_seed(config.seed, 0));
  std::vector<std::size_t> order(designs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> train = order, test;
  if (config.modified) {
    std::shuffle(order.begin(), order.end(), rng);
    auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * static_cast<double>(order.size())));
    n_test = std::max<std::size_t>(n_test, 1);
    if (n_test >= order.size()) throw InsufficientDataError("fit_sgd: too few panels for a train/test split");
    test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
  }
  if (train.empty()) throw InsufficientDataError("fit_sgd: no training panels with rows beyond the memory depth");

  const ThetaLayout layout(nodes, panels.front().exogenous_count(), panels.front().static_count(), config.depth);
  std::vector<Eigen::VectorXd> theta(nodes, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size())));
  if (config.initial) {
    if (config.initial->size() != nodes) throw ValidationError("fit_sgd: need one initial theta per node");
    for (std::size_t i = 0; i < nodes; ++i) {
      if (!((*config.initial)[i].layout() == layout)) throw ValidationError("fit_sgd: initial theta layout mismatch");
      theta[i] = (*config.initial)[i].values();
    }
  }
  // Static coefficients sit right after the intercept.
  const auto frozen = static_cast<Eigen::Index>(config.freeze_static ? layout.statics() : 0);
  for (auto& v : theta) v.segment(1, frozen).setZero();

  const auto objective = [&](const std::vector<Eigen::VectorXd>& th) {
    double total = 0.0;
    for (std::size_t m : train)
      for (std::size_t i = 0; i < nodes; ++i) total += least_squares_objective(designs[m][i], th[i], link);
    return total / static_cast<double>(train.size());
  };
  const auto test_loss = [&](std::size_t i, const Eigen::VectorXd& th) {
    double total = 0.0;
    for (std::size_t m : test) total += last_step_loss(designs[m][i], th, link, config);
    return total;
  };

  SgdResult result;
  std::vector<Eigen::VectorXd> stored = theta;
  std::vector<double> best(nodes, 0.0);
  result.stored_loss.assign(config.modified ? nodes : 0, {});
  double prev = std::numeric_limits<double>::infinity();
  double current = 0.0;
  if (config.modified) {
    for (std::size_t i = 0; i < nodes; ++i) {
      best[i] = test_loss(i, theta[i]);
      result.stored_loss[i].push_back(best[i]);
      current += best[i];
    }
  } else {
    current = objective(theta);
  }
  result.objective.push_back(objective(theta));

  const std::size_t batch = std::min(config.batch_size, train.size());
  int j = 0;
  while (std::abs(prev - current) > config.tolerance && j < config.max_iter) {
    std::vector<std::size_t> pick = train;
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(batch);
    for (std::size_t i = 0; i < nodes; ++i) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta[i].size());
      for (std::size_t m : pick) grad += ls_gradient(designs[m][i], theta[i], link);
      grad.segment(1, frozen).setZero();
      theta[i] -= config.step * grad;
    }
    prev = current;
    if (config.modified) {
      current = 0.0;
      for (std::size_t i = 0; i < nodes; ++i) {
        const double loss = test_loss(i, theta[i]);
        current += loss;
        if (loss < best[i]) {
          best[i] = loss;
          stored[i] = theta[i];
        }
        result.stored_loss[i].push_back(best[i]);
      }
    } else {
      current = objective(theta);
    }
    result.objective.push_back(objective(config.modified ? stored : theta));
    ++j;
  }
  result.iterations = j;
  const auto& final_theta = config.modified ? stored : theta;
  for (std::size_t i = 0; i < nodes; ++i) result.thetas.emplace_back(layout, final_theta[i]);
  return result;
}

}  // namespace sadgraph

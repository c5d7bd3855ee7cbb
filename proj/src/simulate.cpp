#include "sadgraph/error.hpp"
#include "sadgraph/model.hpp"
#include "sadgraph/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sadgraph {

SimulationSpec SimulationSpec::zeros(std::size_t nodes, std::size_t exogenous, std::size_t statics, std::size_t depth,
                                     std::size_t length) {
  SimulationSpec s;
  s.nodes = nodes;
  s.exogenous = exogenous;
  s.statics = statics;
  s.depth = depth;
  s.length = length;
  const auto n1 = static_cast<Eigen::Index>(nodes);
  const auto n2 = static_cast<Eigen::Index>(exogenous);
  const auto n3 = static_cast<Eigen::Index>(statics);
  s.alpha = Eigen::MatrixXd::Zero(n1, n1);
  s.beta = Eigen::MatrixXd::Zero(n1, n2);
  s.decay = Eigen::MatrixXd::Ones(n1, n1);
  s.decay_exo = Eigen::MatrixXd::Ones(n1, n2);
  s.gamma = Eigen::MatrixXd::Zero(n1, n3);
  s.nu = Eigen::VectorXd::Zero(n1);
  s.z = Eigen::VectorXd::Zero(n3);
  return s;
}

void SimulationSpec::validate() const {
  const auto n1 = static_cast<Eigen::Index>(nodes);
  const auto n2 = static_cast<Eigen::Index>(exogenous);
  const auto n3 = static_cast<Eigen::Index>(statics);
  if (nodes == 0) throw ValidationError("simulation needs at least one node");
  if (depth == 0) throw ValidationError("simulation memory depth must be >= 1");
  if (alpha.rows() != n1 || alpha.cols() != n1 || decay.rows() != n1 || decay.cols() != n1)
    throw ValidationError("alpha/decay must be N1 x N1");
  if (beta.rows() != n1 || beta.cols() != n2 || decay_exo.rows() != n1 || decay_exo.cols() != n2)
    throw ValidationError("beta/decay_exo must be N1 x N2");
  if (gamma.rows() != n1 || gamma.cols() != n3 || z.size() != n3) throw ValidationError("gamma must be N1 x N3");
  if (nu.size() != n1) throw ValidationError("nu must have N1 entries");
  if ((decay.array() <= 0.0).any() || (decay_exo.array() <= 0.0).any())
    throw ValidationError("decay rates must be positive");
  if (!(clip > 0.0) || !(noise_scale >= 0.0) || std::abs(ar_coefficient) >= 1.0)
    throw ValidationError("exogenous process needs |ar| < 1, noise >= 0, clip > 0");
  if (link == LinkKind::sigmoid && !(link_bound > 0.0)) throw ValidationError("link bound must be positive");
}

LinkFunction SimulationSpec::link_function() const {
  return link == LinkKind::linear ? LinkFunction::linear() : LinkFunction::sigmoid(link_bound);
}

std::vector<ThetaVector> SimulationSpec::true_thetas() const {
  validate();
  const ThetaLayout layout(nodes, exogenous, statics, depth);
  std::vector<ThetaVector> out;
  for (std::size_t i = 0; i < nodes; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    ThetaVector theta(layout);
    theta.set_nu(nu(ii));
    for (std::size_t j = 0; j < statics; ++j)
      theta.set({FeatureKind::static_covariate, j}, 0, gamma(ii, static_cast<Eigen::Index>(j)));
    for (std::size_t lag = 1; lag <= depth; ++lag) {
      const double tau = static_cast<double>(lag);
      for (std::size_t j = 0; j < exogenous; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        theta.set({FeatureKind::exogenous, j}, lag, beta(ii, jj) * std::exp(-decay_exo(ii, jj) * tau));
      }
      for (std::size_t j = 0; j < nodes; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        theta.set({FeatureKind::node, j}, lag, alpha(ii, jj) * std::exp(-decay(ii, jj) * tau));
      }
    }
    out.push_back(std::move(theta));
  }
  return out;
}

SimulationResult simulate_panel(const SimulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  const LinkFunction g = spec.link_function();
  const auto n1 = static_cast<Eigen::Index>(spec.nodes);
  const auto n2 = static_cast<Eigen::Index>(spec.exogenous);
  const auto d = static_cast<Eigen::Index>(spec.depth);
  const auto total = d + static_cast<Eigen::Index>(spec.length);

  SimulationResult result;
  auto& panel = result.panel;
  panel.id = "sim-" + std::to_string(seed);
  for (Eigen::Index i = 0; i < n1; ++i) panel.y_names.push_back("node" + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < n2; ++j) panel.x_names.push_back("exo" + std::to_string(j + 1));
  for (std::size_t j = 0; j < spec.statics; ++j) panel.z_names.push_back("static" + std::to_string(j + 1));
  panel.y = Eigen::MatrixXd::Zero(n1, total);
  panel.x = Eigen::MatrixXd::Zero(n2, total);
  panel.z = spec.z;
  panel.y_valid = decltype(panel.y_valid)::Constant(n1, total, true);
  panel.x_valid = decltype(panel.x_valid)::Constant(n2, total, true);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Eigen::VectorXd baseline = spec.nu + spec.gamma * spec.z;
  for (Eigen::Index t = d; t < total; ++t) {
    for (Eigen::Index i = 0; i < n1; ++i) {
      const Eigen::Index max_lag = spec.full_history ? t : d;
      double eta = baseline(i);
      for (Eigen::Index lag = 1; lag <= max_lag; ++lag) {
        const double tau = static_cast<double>(lag);
        for (Eigen::Index j = 0; j < n2; ++j)
          eta += spec.beta(i, j) * std::exp(-spec.decay_exo(i, j) * tau) * panel.x(j, t - lag);
        for (Eigen::Index j = 0; j < n1; ++j)
          eta += spec.alpha(i, j) * std::exp(-spec.decay(i, j) * tau) * panel.y(j, t - lag);
      }
      if (eta < g.domain_lower() || eta > g.domain_upper()) {
        ++result.clamped;
        eta = std::clamp(eta, g.domain_lower(), g.domain_upper());
      }
      panel.y(i, t) = unit(rng) < g(eta) ? 1.0 : 0.0;
    }
    for (Eigen::Index j = 0; j < n2; ++j) {
      const double next = spec.ar_coefficient * panel.x(j, t - 1) + spec.noise_scale * noise(rng);
      panel.x(j, t) = std::clamp(next, -spec.clip, spec.clip);
    }
  }
  result.thetas = spec.true_thetas();
  return result;
}

std::vector<PatientPanel> simulate_panels(const SimulationSpec& spec, std::size_t count, std::uint64_t seed) {
  std::vector<PatientPanel> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto sim = simulate_panel(spec, derive_seed(seed, k));
    sim.panel.id = "sim-" + std::to_string(seed) + "-" + std::to_string(k + 1);
    out.push_back(std::move(sim.panel));
  }
  return out;
}

}  // namespace sadgraph

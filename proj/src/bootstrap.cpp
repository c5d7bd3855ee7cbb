#include "sadgraph/error.hpp"
#include "sadgraph/inference.hpp"
#include "sadgraph/parallel.hpp"
#include "sadgraph/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sadgraph {

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<EdgeInterval> edge_intervals_from_samples(std::span<const Eigen::MatrixXd> samples, double level) {
  if (samples.empty()) throw ValidationError("no bootstrap samples");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap level must lie in (0,1)");
  const Eigen::Index n = samples.front().rows();
  for (const auto& s : samples)
    if (s.rows() != n || s.cols() != n) throw ValidationError("bootstrap samples must all be N x N");
  std::vector<EdgeInterval> out;
  out.reserve(static_cast<std::size_t>(n * n));
  std::vector<double> column(samples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (std::size_t b = 0; b < samples.size(); ++b) column[b] = samples[b](i, j);
      EdgeInterval e;
      e.target = static_cast<std::size_t>(i);
      e.source = static_cast<std::size_t>(j);
      e.lower = quantile(column, (1.0 - level) / 2.0);
      e.upper = quantile(column, (1.0 + level) / 2.0);
      e.median = quantile(column, 0.5);
      e.exists = !(e.lower <= 0.0 && 0.0 <= e.upper);
      e.weight = e.exists ? e.median : 0.0;
      out.push_back(e);
    }
  }
  return out;
}

BootstrapResult bootstrap_edges(std::span<const PatientPanel> panels, const BootstrapConfig& config) {
  if (panels.empty()) throw InsufficientDataError("bootstrap needs at least one patient");
  if (config.replicates < 2) throw ConfigError("bootstrap needs at least 2 replicates");
  const std::size_t nodes = panels.front().node_count();
  if (!config.features.empty() && config.features.size() != nodes)
    throw ConfigError("bootstrap: need one feature list per node");

  const std::size_t B = config.replicates;
  std::vector<Eigen::MatrixXd> samples(B);
  std::vector<char> ok(B, 0);
  parallel_for(B, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(config.seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, panels.size() - 1);
    std::vector<PatientPanel> resample;
    resample.reserve(panels.size());
    for (std::size_t k = 0; k < panels.size(); ++k) resample.push_back(panels[pick(rng)]);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(nodes));
    try {
      for (std::size_t i = 0; i < nodes; ++i) {
        const auto fit = fit_node(resample, i, config.features.empty() ? std::nullopt : config.features[i], config.fit);
        for (std::size_t j = 0; j < nodes; ++j)
          weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              edge_weight(fit.theta_hat, j, config.aggregation);
      }
    } catch (const Error&) {
      return;
    }
    samples[b] = std::move(weights);
    ok[b] = 1;
  });

  std::vector<Eigen::MatrixXd> kept;
  for (std::size_t b = 0; b < B; ++b)
    if (ok[b]) kept.push_back(std::move(samples[b]));
  BootstrapResult result;
  result.nodes = nodes;
  result.replicates = kept.size();
  result.failures = B - kept.size();
  if (static_cast<double>(result.failures) > 0.1 * static_cast<double>(B) || kept.size() < 2)
    throw InsufficientDataError("bootstrap: " + std::to_string(result.failures) + " of " + std::to_string(B) +
                                " replicate fits failed");
  result.edges = edge_intervals_from_samples(kept, config.level);
  return result;
}

}  // namespace sadgraph

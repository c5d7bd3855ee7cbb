#include "sadgraph/selection.hpp"

#include "sadgraph/error.hpp"
#include "sadgraph/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sadgraph {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::tp_rate: return "tp_rate";
    case Criterion::classification_error: return "classification_error";
    case Criterion::auc: return "auc";
  }
  return "tp_rate";
}

Criterion parse_criterion(std::string_view name) {
  if (name == "tp_rate" || name == "tp") return Criterion::tp_rate;
  if (name == "classification_error" || name == "error") return Criterion::classification_error;
  if (name == "auc") return Criterion::auc;
  throw ConfigError("unknown selection criterion '" + std::string(name) + "'");
}

void CvConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("decision threshold must lie in (0,1)");
  if (!(min_gain >= 0.0)) throw ConfigError("min_gain must be nonnegative");
}

std::pair<double, double> class_weight_values(std::size_t positives, std::size_t total) {
  if (positives == 0 || positives >= total)
    throw ValidationError("class weights need both classes present (" + std::to_string(positives) + " positives of " +
                          std::to_string(total) + ")");
  const double t = static_cast<double>(total);
  return {t / (2.0 * static_cast<double>(positives)), t / (2.0 * static_cast<double>(total - positives))};
}

Eigen::VectorXd class_weights(const Eigen::VectorXd& labels) {
  const auto positives = static_cast<std::size_t>((labels.array() > 0.5).count());
  const auto [wp, wn] = class_weight_values(positives, static_cast<std::size_t>(labels.size()));
  return (labels.array() > 0.5).select(Eigen::VectorXd::Constant(labels.size(), wp),
                                       Eigen::VectorXd::Constant(labels.size(), wn));
}

namespace {

double auc_statistic(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b));
  });
  // Mann-Whitney: sum of average ranks of the positives.
  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && scores(static_cast<Eigen::Index>(order[end])) == scores(static_cast<Eigen::Index>(order[k])))
      ++end;
    const double avg_rank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t q = k; q < end; ++q) {
      if (labels(static_cast<Eigen::Index>(order[q])) > 0.5) {
        rank_sum += avg_rank;
        positives += 1.0;
      }
    }
    k = end;
  }
  const double negatives = static_cast<double>(n) - positives;
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

}  // namespace

double evaluate_scores(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels, Criterion criterion,
                       double threshold, const std::optional<Eigen::VectorXd>& weights) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  if (scores.size() == 0) throw CriterionUndefinedError(to_string(criterion) + " is undefined on an empty test set");
  const auto positives = (labels.array() > 0.5).count();
  const auto negatives = labels.size() - positives;
  switch (criterion) {
    case Criterion::tp_rate: {
      if (positives == 0) throw CriterionUndefinedError("tp_rate is undefined without positive test rows");
      Eigen::Index hits = 0;
      for (Eigen::Index t = 0; t < scores.size(); ++t)
        if (labels(t) > 0.5 && scores(t) >= threshold) ++hits;
      return static_cast<double>(hits) / static_cast<double>(positives);
    }
    case Criterion::classification_error: {
      const Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(scores.size());
      if (w.size() != scores.size()) throw ValidationError("weights and scores differ in length");
      double wrong = 0.0;
      for (Eigen::Index t = 0; t < scores.size(); ++t) {
        const bool predicted = scores(t) >= threshold;
        if (predicted != (labels(t) > 0.5)) wrong += w(t);
      }
      return wrong / w.sum();
    }
    case Criterion::auc:
      if (positives == 0 || negatives == 0)
        throw CriterionUndefinedError("auc is undefined unless both classes appear in the test set");
      return auc_statistic(scores, labels);
  }
  return 0.0;
}

double evaluate(const ThetaVector& theta, const DesignMatrix& test, const LinkFunction& link, Criterion criterion,
                double threshold, bool class_weighting) {
  if (!(theta.layout() == test.layout)) throw ValidationError("model and test design layouts differ");
  const Eigen::VectorXd scores = predict_rows(theta.values(), test, link);
  std::optional<Eigen::VectorXd> weights;
  if (class_weighting && criterion == Criterion::classification_error) {
    const auto positives = (test.response.array() > 0.5).count();
    if (positives > 0 && positives < test.response.size()) weights = class_weights(test.response);
  }
  return evaluate_scores(scores, test.response, criterion, threshold, weights);
}

DataSplit split_panels(std::span<const PatientPanel> panels, double fraction, std::size_t depth) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
  DataSplit out;
  if (panels.size() >= 2) {
    auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(panels.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, panels.size() - 1);
    out.train.assign(panels.begin(), panels.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(panels.begin() + static_cast<std::ptrdiff_t>(n_train), panels.end());
    return out;
  }
  if (panels.empty()) throw InsufficientDataError("no panels to split");
  const auto& p = panels.front();
  const std::size_t T = p.length();
  const auto cut = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(T)));
  if (cut <= depth || cut >= T) throw InsufficientDataError("panel too short for a chronological split");
  out.train.push_back(p.slice(0, cut));
  out.test.push_back(p.slice(cut - depth, T));
  return out;
}

std::vector<FeatureId> default_initial_subset(std::span<const PatientPanel> panels, std::size_t target,
                                              std::span<const FeatureId> candidates, std::size_t depth, std::size_t k) {
  const std::vector<FeatureId> cand(candidates.begin(), candidates.end());
  const DesignMatrix design = build_design(panels, target, depth, cand);
  const Eigen::VectorXd y = design.response.array() - design.response.mean();
  const double y_norm = y.norm();
  std::vector<std::pair<double, FeatureId>> scored;
  for (const auto& f : design.layout.features()) {
    const auto col = static_cast<Eigen::Index>(*design.layout.offset(f));
    const Eigen::VectorXd x = design.rows.col(col).array() - design.rows.col(col).mean();
    const double denom = x.norm() * y_norm;
    scored.emplace_back(denom > 0.0 ? std::abs(x.dot(y)) / denom : 0.0, f);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<FeatureId> out;
  for (std::size_t q = 0; q < std::min(k, scored.size()); ++q) out.push_back(scored[q].second);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct SubsetScorer {
  const DataSplit& split;
  std::size_t target;
  const CvConfig& cv;
  const NodeFitConfig& fit;

  double operator()(const std::vector<FeatureId>& features, const NodeFitConfig& config) const {
    const VIResult model = fit_node(split.train, target, features, config);
    const DesignMatrix test = build_design(split.test, target, config.depth, features);
    return evaluate(model.theta_hat, test, config.link_function(), cv.criterion, cv.threshold, cv.class_weighting);
  }
};

bool improves(double candidate, double current, const CvConfig& cv) {
  return higher_is_better(cv.criterion) ? candidate >= current + cv.min_gain : candidate <= current - cv.min_gain;
}

bool better(double a, double b, Criterion c) { return higher_is_better(c) ? a > b : a < b; }

}  // namespace

SelectionTrace forward_select(std::span<const PatientPanel> panels, std::size_t target,
                              const std::optional<std::vector<FeatureId>>& candidates,
                              const std::optional<std::vector<FeatureId>>& initial, const CvConfig& cv,
                              const NodeFitConfig& fit) {
  cv.validate();
  if (panels.empty()) throw InsufficientDataError("forward selection needs panels");
  const auto& first = panels.front();
  std::vector<FeatureId> pool =
      candidates ? *candidates
                 : ThetaLayout(first.node_count(), first.exogenous_count(), first.static_count(), fit.depth)
                       .all_features();
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  const DataSplit split = split_panels(panels, cv.split, fit.depth);
  NodeFitConfig config = fit;
  config.class_weighting = cv.class_weighting;

  SelectionTrace trace;
  trace.target = target;
  trace.criterion = cv.criterion;
  trace.initial_subset = initial ? *initial : default_initial_subset(split.train, target, pool, fit.depth);
  std::sort(trace.initial_subset.begin(), trace.initial_subset.end());
  for (const auto& f : trace.initial_subset)
    if (!std::binary_search(pool.begin(), pool.end(), f))
      throw ValidationError("initial subset must be drawn from the candidates");
  trace.final_subset = trace.initial_subset;
  if (pool.empty()) return trace;

  const SubsetScorer score{split, target, cv, config};
  double current = score(trace.final_subset, config);
  ++trace.fits;
  trace.initial_value = current;

  while (true) {
    std::vector<FeatureId> remaining;
    for (const auto& f : pool)
      if (!std::binary_search(trace.final_subset.begin(), trace.final_subset.end(), f)) remaining.push_back(f);
    if (remaining.empty()) break;
    std::vector<double> values(remaining.size());
    parallel_for(remaining.size(), [&](std::size_t q) {
      auto subset = trace.final_subset;
      subset.push_back(remaining[q]);
      std::sort(subset.begin(), subset.end());
      values[q] = score(subset, config);
    });
    trace.fits += remaining.size();
    std::size_t best = 0;
    for (std::size_t q = 1; q < values.size(); ++q)
      if (better(values[q], values[best], cv.criterion)) best = q;
    if (!improves(values[best], current, cv)) break;
    current = values[best];
    trace.final_subset.push_back(remaining[best]);
    std::sort(trace.final_subset.begin(), trace.final_subset.end());
    trace.steps.push_back({remaining[best], current});
  }
  return trace;
}

TuneResult tune_max_iter(std::span<const PatientPanel> panels, std::size_t target,
                         const std::optional<std::vector<FeatureId>>& features, std::span<const int> grid,
                         const CvConfig& cv, const NodeFitConfig& fit) {
  cv.validate();
  if (grid.empty()) throw ConfigError("max_iter grid is empty");
  for (int g : grid)
    if (g < 1) throw ConfigError("max_iter grid values must be positive");
  const DataSplit split = split_panels(panels, cv.split, fit.depth);
  NodeFitConfig config = fit;
  config.class_weighting = cv.class_weighting;
  TuneResult result;
  result.values.resize(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    NodeFitConfig c = config;
    c.solver.max_iter = grid[q];
    const VIResult model = fit_node(split.train, target, features, c);
    const DesignMatrix test = build_design(split.test, target, c.depth, features);
    result.values[q] = evaluate(model.theta_hat, test, c.link_function(), cv.criterion, cv.threshold, cv.class_weighting);
    ++result.fits;
  }
  std::size_t best = 0;
  for (std::size_t q = 1; q < grid.size(); ++q) {
    if (better(result.values[q], result.values[best], cv.criterion) ||
        (result.values[q] == result.values[best] && grid[q] < grid[best]))
      best = q;
  }
  result.best = grid[best];
  return result;
}

}  // namespace sadgraph

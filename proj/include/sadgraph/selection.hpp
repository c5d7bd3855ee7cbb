#pragma once

// Held-out evaluation, class balancing, forward feature selection and
// iteration-cap tuning for node models.

#include "sadgraph/model.hpp"
#include "sadgraph/vi.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sadgraph {

enum class Criterion { tp_rate, classification_error, auc };

[[nodiscard]] std::string to_string(Criterion c);
[[nodiscard]] Criterion parse_criterion(std::string_view name);
[[nodiscard]] constexpr bool higher_is_better(Criterion c) noexcept { return c != Criterion::classification_error; }

struct CvConfig {
  Criterion criterion{Criterion::tp_rate};
  double split{0.8};
  double threshold{0.5};
  bool class_weighting{true};
  std::vector<int> max_iter_grid{100, 1000, 5000};
  double min_gain{1e-4};

  /// Throws ConfigError when split or threshold leave (0,1).
  void validate() const;
};

/// Per-class weights T/(2 T_c) as (positive, negative). Throws ValidationError
/// when either class is empty.
[[nodiscard]] std::pair<double, double> class_weight_values(std::size_t positives, std::size_t total);
/// Per-row weights for binary labels.
[[nodiscard]] Eigen::VectorXd class_weights(const Eigen::VectorXd& labels);

/// Criterion value of scores against binary labels. `weights` (per row) only
/// affects the classification error. Ties at the threshold predict positive.
/// Throws CriterionUndefinedError when tp_rate/auc lack a class.
[[nodiscard]] double evaluate_scores(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels, Criterion criterion,
                                     double threshold = 0.5, const std::optional<Eigen::VectorXd>& weights = {});
/// Criterion value of a fitted node model on a held-out design.
[[nodiscard]] double evaluate(const ThetaVector& theta, const DesignMatrix& test, const LinkFunction& link,
                              Criterion criterion, double threshold = 0.5, bool class_weighting = true);

struct DataSplit {
  std::vector<PatientPanel> train;
  std::vector<PatientPanel> test;
};

/// Patients in order are split by `fraction` when there are at least two;
/// a single panel is split chronologically, the test part keeping `depth`
/// steps of history.
[[nodiscard]] DataSplit split_panels(std::span<const PatientPanel> panels, double fraction, std::size_t depth);

/// Top-k candidates by |point-biserial correlation| between the lag-1 column
/// and the response; ties go to the lower feature.
[[nodiscard]] std::vector<FeatureId> default_initial_subset(std::span<const PatientPanel> panels, std::size_t target,
                                                            std::span<const FeatureId> candidates, std::size_t depth,
                                                            std::size_t k = 3);

struct SelectionStep {
  FeatureId feature;
  double value{0.0};
};

struct SelectionTrace {
  std::size_t target{0};
  Criterion criterion{Criterion::tp_rate};
  std::vector<FeatureId> initial_subset;
  double initial_value{0.0};
  std::vector<SelectionStep> steps;
  std::vector<FeatureId> final_subset;
  std::size_t fits{0};
};

/// Greedy forward selection on a train/test split. `initial` defaults to
/// default_initial_subset on the training part; candidates default to every
/// series of the panel.
[[nodiscard]] SelectionTrace forward_select(std::span<const PatientPanel> panels, std::size_t target,
                                            const std::optional<std::vector<FeatureId>>& candidates,
                                            const std::optional<std::vector<FeatureId>>& initial, const CvConfig& cv,
                                            const NodeFitConfig& fit);

struct TuneResult {
  int best{0};
  std::vector<double> values;  // criterion per grid entry
  std::size_t fits{0};
};

/// Grid value of the solver iteration cap with the best held-out criterion;
/// ties go to the smallest value.
[[nodiscard]] TuneResult tune_max_iter(std::span<const PatientPanel> panels, std::size_t target,
                                       const std::optional<std::vector<FeatureId>>& features, std::span<const int> grid,
                                       const CvConfig& cv, const NodeFitConfig& fit);

}  // namespace sadgraph

#include "sadgraph/error.hpp"
#include "sadgraph/selection.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace sadgraph;

namespace {

/// Pairwise AUC: fraction of (positive, negative) pairs ranked correctly, ties 1/2.
double pairwise_auc(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  double good = 0.0, pairs = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = 0; j < s.size(); ++j)
      if (y(i) > 0.5 && y(j) < 0.5) {
        pairs += 1.0;
        good += s(i) > s(j) ? 1.0 : s(i) == s(j) ? 0.5 : 0.0;
      }
  return good / pairs;
}

std::vector<PatientPanel> planted_panels(std::uint64_t seed, std::size_t patients = 12, std::size_t length = 150) {
  auto spec = SimulationSpec::zeros(3, 2, 0, 1, length);
  spec.nu.setConstant(-1.0);
  spec.alpha(0, 1) = 3.0 * std::exp(1.0);
  spec.beta(2, 0) = 1.0;
  return simulate_panels(spec, patients, seed);
}

NodeFitConfig quick_fit() {
  NodeFitConfig fit;
  fit.solver.tol = 1e-6;
  fit.solver.max_iter = 2000;
  return fit;
}

}  // namespace

TEST_CASE("hand example: tp rate 0.5 and AUC 0.75") {
  Eigen::VectorXd s(4), y(4);
  s << 0.9, 0.6, 0.4, 0.2;
  y << 1, 0, 1, 0;
  CHECK(evaluate_scores(s, y, Criterion::tp_rate) == 0.5);
  CHECK(evaluate_scores(s, y, Criterion::auc) == doctest::Approx(0.75));
  CHECK(evaluate_scores(s, y, Criterion::classification_error) == doctest::Approx(0.5));
}

TEST_CASE("perfect and constant classifiers") {
  Eigen::VectorXd y(4);
  y << 1, 1, 0, 0;
  Eigen::VectorXd perfect(4);
  perfect << 0.9, 0.8, 0.1, 0.2;
  CHECK(evaluate_scores(perfect, y, Criterion::tp_rate) == 1.0);
  CHECK(evaluate_scores(perfect, y, Criterion::classification_error) == 0.0);
  CHECK(evaluate_scores(perfect, y, Criterion::auc) == 1.0);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 0.5);
  CHECK(evaluate_scores(flat, y, Criterion::tp_rate) == 1.0);
  CHECK(evaluate_scores(flat, y, Criterion::auc) == 0.5);
}

TEST_CASE("criteria agree with direct counts on random scores") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> level(0, 10);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 5 + trial % 40;
    Eigen::VectorXd s(n), y(n), w(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      s(t) = level(rng) / 10.0;  // coarse grid to force ties
      y(t) = coin(rng) ? 1.0 : 0.0;
      w(t) = 0.5 + level(rng);
    }
    y(0) = 1.0;
    y(1) = 0.0;
    double fn = 0.0, pos = 0.0, wrong = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool pred = s(t) >= 0.5;
      if (y(t) > 0.5) {
        pos += 1.0;
        if (!pred) fn += 1.0;
      }
      if (pred != (y(t) > 0.5)) wrong += w(t);
    }
    CHECK(evaluate_scores(s, y, Criterion::tp_rate) == doctest::Approx(1.0 - fn / pos));
    CHECK(evaluate_scores(s, y, Criterion::auc) == doctest::Approx(pairwise_auc(s, y)));
    CHECK(evaluate_scores(s, y, Criterion::classification_error, 0.5, w) == doctest::Approx(wrong / w.sum()));
  }
}

TEST_CASE("criteria without both classes are undefined") {
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(3, 0.7);
  CHECK_THROWS_AS((void)evaluate_scores(s, Eigen::VectorXd::Zero(3), Criterion::tp_rate), CriterionUndefinedError);
  CHECK_THROWS_AS((void)evaluate_scores(s, Eigen::VectorXd::Ones(3), Criterion::auc), CriterionUndefinedError);
  CHECK(evaluate_scores(s, Eigen::VectorXd::Zero(3), Criterion::classification_error) == 1.0);
}

TEST_CASE("balanced class weights") {
  const auto [wp, wn] = class_weight_values(450, 5222);
  CHECK(wp == doctest::Approx(5222.0 / 900.0));
  CHECK(wp == doctest::Approx(5.802).epsilon(1e-3));
  CHECK(wn == doctest::Approx(5222.0 / 9544.0));
  CHECK(wn == doctest::Approx(0.547).epsilon(1e-3));
  CHECK(wp * 450 == doctest::Approx(wn * 4772));
  const auto [bp, bn] = class_weight_values(5, 10);
  CHECK(bp == 1.0);
  CHECK(bn == 1.0);
  CHECK_THROWS_AS((void)class_weight_values(0, 10), ValidationError);
  CHECK_THROWS_AS((void)class_weight_values(10, 10), ValidationError);
}

TEST_CASE("per-row class weights equalize the class masses") {
  std::mt19937_64 rng(72);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd y(30);
    for (auto& e : y) e = coin(rng) ? 1.0 : 0.0;
    y(0) = 1.0;
    y(1) = 0.0;
    const Eigen::VectorXd w = class_weights(y);
    const double pos = (y.array() > 0.5).select(w, 0.0).sum();
    const double neg = (y.array() < 0.5).select(w, 0.0).sum();
    CHECK(pos == doctest::Approx(neg));
    CHECK(w.sum() == doctest::Approx(30.0));
  }
}

TEST_CASE("configuration validation") {
  CvConfig cv;
  CHECK_NOTHROW(cv.validate());
  cv.split = 1.0;
  CHECK_THROWS_AS(cv.validate(), ConfigError);
  cv.split = 0.8;
  cv.threshold = 0.0;
  CHECK_THROWS_AS(cv.validate(), ConfigError);
  CHECK(parse_criterion("auc") == Criterion::auc);
  CHECK_THROWS_AS((void)parse_criterion("f1"), ConfigError);
}

TEST_CASE("patients split in order; a single patient splits in time") {
  const auto panels = planted_panels(3, 10, 40);
  const auto split = split_panels(panels, 0.8, 1);
  REQUIRE(split.train.size() == 8);
  REQUIRE(split.test.size() == 2);
  CHECK(split.train.front().id == panels.front().id);
  CHECK(split.test.back().id == panels.back().id);
  const std::vector<PatientPanel> one{panels.front()};
  const auto chrono = split_panels(one, 0.75, 2);
  CHECK(chrono.train.front().length() == 31);
  CHECK(chrono.test.front().length() == 41 - 31 + 2);
}

TEST_CASE("initial subset ranks by correlation with the response") {
  const auto panels = planted_panels(4);
  const ThetaLayout layout(3, 2, 0, 1);
  const auto all = layout.all_features();
  const auto top1 = default_initial_subset(panels, 0, all, 1, 1);
  REQUIRE(top1.size() == 1);
  CHECK(top1.front() == FeatureId{FeatureKind::node, 1});
  CHECK(default_initial_subset(panels, 0, all, 1, 3).size() == 3);
}

TEST_CASE("a single improving candidate gives a one-step trace") {
  const auto panels = planted_panels(5);
  CvConfig cv;
  cv.criterion = Criterion::auc;
  const std::vector<FeatureId> cand{{FeatureKind::node, 1}};
  const auto trace = forward_select(panels, 0, cand, std::vector<FeatureId>{}, cv, quick_fit());
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].feature == cand[0]);
  CHECK(trace.steps[0].value > trace.initial_value);
  CHECK(trace.final_subset == cand);
  CHECK(trace.fits == 2);
}

TEST_CASE("empty candidate pool gives an empty trace") {
  const auto panels = planted_panels(6, 6, 60);
  const auto trace = forward_select(panels, 0, std::vector<FeatureId>{}, std::vector<FeatureId>{}, CvConfig{}, quick_fit());
  CHECK(trace.steps.empty());
  CHECK(trace.final_subset.empty());
}

TEST_CASE("selection traces improve strictly and never drop features") {
  for (const auto crit : {Criterion::auc, Criterion::classification_error, Criterion::tp_rate}) {
    for (std::uint64_t seed = 10; seed < 13; ++seed) {
      const auto panels = planted_panels(seed);
      CvConfig cv;
      cv.criterion = crit;
      const auto trace = forward_select(panels, 2, std::nullopt, std::vector<FeatureId>{{FeatureKind::node, 2}}, cv,
                                        quick_fit());
      double prev = trace.initial_value;
      std::vector<FeatureId> expect = trace.initial_subset;
      for (const auto& step : trace.steps) {
        if (higher_is_better(crit)) CHECK(step.value >= prev + cv.min_gain);
        else CHECK(step.value <= prev - cv.min_gain);
        prev = step.value;
        CHECK(std::find(expect.begin(), expect.end(), step.feature) == expect.end());
        expect.push_back(step.feature);
      }
      std::sort(expect.begin(), expect.end());
      CHECK(trace.final_subset == expect);
    }
  }
}

TEST_CASE("selection does not depend on candidate order") {
  const auto panels = planted_panels(14);
  CvConfig cv;
  cv.criterion = Criterion::auc;
  auto cand = ThetaLayout(3, 2, 0, 1).all_features();
  const auto a = forward_select(panels, 0, cand, std::vector<FeatureId>{}, cv, quick_fit());
  std::reverse(cand.begin(), cand.end());
  const auto b = forward_select(panels, 0, cand, std::vector<FeatureId>{}, cv, quick_fit());
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].feature == b.steps[k].feature);
    CHECK(a.steps[k].value == b.steps[k].value);
  }
}

TEST_CASE("initial subsets outside the candidates are rejected") {
  const auto panels = planted_panels(15, 6, 60);
  const std::vector<FeatureId> cand{{FeatureKind::node, 1}};
  const std::vector<FeatureId> init{{FeatureKind::node, 2}};
  CHECK_THROWS_AS((void)forward_select(panels, 0, cand, init, CvConfig{}, quick_fit()), ValidationError);
}

TEST_CASE("iteration-cap tuning") {
  const auto panels = planted_panels(16);
  CvConfig cv;
  cv.criterion = Criterion::auc;
  const std::vector<int> single{10};
  const auto one = tune_max_iter(panels, 0, std::nullopt, single, cv, quick_fit());
  CHECK(one.best == 10);
  CHECK(one.fits == 1);
  const std::vector<int> grid{5, 500};
  const auto a = tune_max_iter(panels, 0, std::nullopt, grid, cv, quick_fit());
  const auto b = tune_max_iter(panels, 0, std::nullopt, grid, cv, quick_fit());
  CHECK(a.fits == 2);
  CHECK(a.values.size() == 2);
  CHECK(a.best == b.best);
  CHECK(a.values == b.values);
  const std::vector<int> empty;
  CHECK_THROWS_AS((void)tune_max_iter(panels, 0, std::nullopt, empty, cv, quick_fit()), ConfigError);
}

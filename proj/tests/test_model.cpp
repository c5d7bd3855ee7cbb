#include "oracles.hpp"
#include "sadgraph/error.hpp"
#include "sadgraph/model.hpp"
#include "sadgraph/vi.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sadgraph;

namespace {

PatientPanel make_panel(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& z) {
  PatientPanel p;
  p.id = "test";
  for (Eigen::Index i = 0; i < y.rows(); ++i) p.y_names.push_back("y" + std::to_string(i));
  for (Eigen::Index i = 0; i < x.rows(); ++i) p.x_names.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < z.size(); ++i) p.z_names.push_back("z" + std::to_string(i));
  p.y = y;
  p.x = x;
  p.z = z;
  p.y_valid = decltype(p.y_valid)::Constant(y.rows(), y.cols(), true);
  p.x_valid = decltype(p.x_valid)::Constant(x.rows(), x.cols(), true);
  return p;
}

PatientPanel random_panel(std::mt19937_64& rng, Eigen::Index n1, Eigen::Index n2, Eigen::Index n3, Eigen::Index T) {
  std::bernoulli_distribution coin(0.4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd y(n1, T), x(n2, T);
  Eigen::VectorXd z(n3);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index t = 0; t < T; ++t) y(i, t) = coin(rng) ? 1.0 : 0.0;
  for (Eigen::Index i = 0; i < n2; ++i)
    for (Eigen::Index t = 0; t < T; ++t) x(i, t) = u(rng);
  for (Eigen::Index i = 0; i < n3; ++i) z(i) = u(rng);
  return make_panel(y, x, z);
}

}  // namespace

TEST_CASE("layout dimension is 1 + N3 + d N2 + d N1") {
  CHECK(ThetaLayout(1, 0, 0, 1).size() == 2);
  CHECK(ThetaLayout(2, 1, 1, 2).size() == 8);
  CHECK(ThetaLayout(3, 4, 2, 3).size() == 1 + 2 + 12 + 9);
}

TEST_CASE("layout offsets follow the canonical order") {
  const ThetaLayout l(2, 1, 1, 2);
  CHECK(*l.offset({FeatureKind::static_covariate, 0}) == 1);
  CHECK(*l.offset({FeatureKind::exogenous, 0}) == 2);
  CHECK(*l.offset({FeatureKind::node, 0}) == 4);
  CHECK(*l.offset({FeatureKind::node, 1}) == 6);
  const ThetaLayout sub(2, 1, 1, 2, std::vector<FeatureId>{{FeatureKind::node, 1}, {FeatureKind::exogenous, 0}});
  CHECK(sub.size() == 5);
  CHECK(*sub.offset({FeatureKind::exogenous, 0}) == 1);
  CHECK(*sub.offset({FeatureKind::node, 1}) == 3);
  CHECK_FALSE(sub.offset({FeatureKind::node, 0}).has_value());
}

TEST_CASE("theta accessors and flatten round-trip") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const ThetaLayout l(1 + trial % 3, trial % 2, trial % 2, 1 + trial % 3);
    Eigen::VectorXd v(static_cast<Eigen::Index>(l.size()));
    for (auto& e : v) e = n(rng);
    const auto theta = ThetaVector::unflatten(l, v);
    CHECK(theta.flatten() == v);
    CHECK(ThetaVector::unflatten(l, theta.flatten()).values() == theta.values());
  }
  ThetaVector t(ThetaLayout(2, 1, 1, 2));
  t.set({FeatureKind::node, 1}, 2, 0.7);
  t.set({FeatureKind::exogenous, 0}, 1, -0.3);
  t.set({FeatureKind::static_covariate, 0}, 0, 0.2);
  CHECK(t.alpha(1, 2) == 0.7);
  CHECK(t.values()(7) == 0.7);
  CHECK(t.beta(0, 1) == -0.3);
  CHECK(t.gamma(0) == 0.2);
}

TEST_CASE("edge weight aggregators") {
  ThetaVector t(ThetaLayout(2, 0, 0, 2));
  t.set({FeatureKind::node, 1}, 1, 0.5);
  t.set({FeatureKind::node, 1}, 2, 0.25);
  CHECK(edge_weight(t, 1, LagAggregation::sum) == 0.75);
  CHECK(edge_weight(t, 1, LagAggregation::max_abs) == 0.5);
  CHECK(edge_weight(t, 1, LagAggregation::first_lag) == 0.5);
  CHECK(edge_weight(t, 0) == 0.0);
}

TEST_CASE("single-node depth-1 design rows are (1, y_{t-1})") {
  Eigen::MatrixXd y(1, 5);
  y << 1, 0, 1, 1, 0;
  const auto d = build_design(make_panel(y, Eigen::MatrixXd(0, 5), Eigen::VectorXd(0)), 0, 1);
  REQUIRE(d.size() == 4);
  REQUIRE(d.dimension() == 2);
  for (Eigen::Index t = 0; t < 4; ++t) {
    CHECK(d.rows(t, 0) == 1.0);
    CHECK(d.rows(t, 1) == y(0, t));
    CHECK(d.response(t) == y(0, t + 1));
  }
}

TEST_CASE("design rows and Gram agree with an independent construction") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 2, T = 7;
    const auto panel = random_panel(rng, 2, 1, 1, T);
    const auto design = build_design(panel, 1, 2);
    REQUIRE(design.dimension() == 8);
    REQUIRE(design.size() == 5);
    Eigen::MatrixXd rows(T - d, 8);
    for (Eigen::Index t = d; t < T; ++t) {
      const Eigen::Index r = t - d;
      rows(r, 0) = 1.0;
      rows(r, 1) = panel.z(0);
      rows(r, 2) = panel.x(0, t - 1);
      rows(r, 3) = panel.x(0, t - 2);
      rows(r, 4) = panel.y(0, t - 1);
      rows(r, 5) = panel.y(0, t - 2);
      rows(r, 6) = panel.y(1, t - 1);
      rows(r, 7) = panel.y(1, t - 2);
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(8, 8);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) gram += rows.row(r).transpose() * rows.row(r);
    gram /= static_cast<double>(rows.rows());
    CHECK((design.rows - rows).cwiseAbs().maxCoeff() == 0.0);
    CHECK((design.gram - gram).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(design.max_abs == doctest::Approx(rows.cwiseAbs().maxCoeff()));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(design.lambda_min == doctest::Approx(std::max(es.eigenvalues()(0), 0.0)).epsilon(1e-9).scale(1.0));
    for (Eigen::Index t = 0; t < rows.rows(); ++t) CHECK(design.response(t) == (panel.y(1, t + d) > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("design binarizes score responses and skips invalid windows") {
  Eigen::MatrixXd y(1, 6);
  y << 0.0, 0.4, 0.0, 0.8, 0.0, 0.2;
  auto panel = make_panel(y, Eigen::MatrixXd(0, 6), Eigen::VectorXd(0));
  panel.y_valid(0, 2) = false;
  const auto d = build_design(panel, 0, 1);
  CHECK(d.size() == 3);
  CHECK((d.response.array() == 0.0 || d.response.array() == 1.0).all());
}

TEST_CASE("design needs more steps than the memory depth") {
  const auto panel = make_panel(Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  CHECK_THROWS_AS((void)build_design(panel, 0, 2), InsufficientDataError);
}

TEST_CASE("predict evaluates the link") {
  ThetaVector t(ThetaLayout(1, 0, 0, 1));
  Eigen::VectorXd w(2);
  w << 1.0, 1.0;
  t.set_nu(0.0);
  CHECK(predict(t, w, LinkFunction::sigmoid()) == 0.5);
  t.set_nu(2.0);
  CHECK(predict(t, Eigen::VectorXd::Unit(2, 0), LinkFunction::sigmoid()) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  t.set_nu(0.3);
  CHECK(predict(t, Eigen::VectorXd::Unit(2, 0), LinkFunction::linear()) == doctest::Approx(0.3));
  t.set_nu(1.3);
  CHECK_THROWS_AS((void)predict(t, Eigen::VectorXd::Unit(2, 0), LinkFunction::linear()), DomainError);
}

TEST_CASE("link difference quotients lie within the derivative bounds") {
  std::mt19937_64 rng(23);
  for (const auto& g : {LinkFunction::linear(), LinkFunction::sigmoid(4.0), LinkFunction::sigmoid(10.0)}) {
    std::uniform_real_distribution<double> u(g.domain_lower(), g.domain_upper());
    for (int k = 0; k < 1000; ++k) {
      const double a = u(rng), b = u(rng);
      if (a == b) continue;
      const double q = (g(a) - g(b)) / (a - b);
      CHECK(q >= g.lower_slope() * (1.0 - 1e-9));
      CHECK(q <= g.upper_slope() * (1.0 + 1e-9));
    }
  }
  const double M = 10.0;
  CHECK(LinkFunction::sigmoid(M).lower_slope() ==
        doctest::Approx(std::exp(-M) / ((1.0 + std::exp(-M)) * (1.0 + std::exp(-M)))));
  CHECK(LinkFunction::sigmoid(M).upper_slope() == 0.25);
}

TEST_CASE("empirical field is strongly monotone with modulus m_g lambda1") {
  std::mt19937_64 rng(24);
  for (const bool linear : {true, false}) {
    const LinkFunction g = linear ? LinkFunction::linear() : LinkFunction::sigmoid(4.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::MatrixXd rows = oracle::random_rows(rng, 40, 3);
      Eigen::VectorXd y(40);
      std::bernoulli_distribution coin(0.5);
      for (auto& e : y) e = coin(rng) ? 1.0 : 0.0;
      const auto design = oracle::make_design(rows, y);
      // Nonnegative coordinates summing to at most one keep 0 <= w^T theta <= 1.
      const auto draw = [&] {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Eigen::VectorXd th(3);
        for (auto& e : th) e = u(rng);
        th /= th.sum() * (1.0 + u(rng));
        return th;
      };
      const Eigen::VectorXd a = draw(), b = draw();
      const double lhs = (empirical_field(design, a, g) - empirical_field(design, b, g)).dot(a - b);
      CHECK(lhs >= g.lower_slope() * design.lambda_min * (a - b).squaredNorm() - 1e-14);
    }
  }
}

TEST_CASE("simulator without interactions draws fair coins") {
  auto spec = SimulationSpec::zeros(1, 0, 0, 1, 20000);
  spec.link = LinkKind::sigmoid;
  const auto sim = simulate_panel(spec, 5);
  const double mean = sim.panel.y.rightCols(20000).mean();
  CHECK(std::abs(mean - 0.5) <= 3.0 * std::sqrt(0.25 / 20000.0));
}

TEST_CASE("simulator lag coefficients decay exponentially") {
  auto spec = SimulationSpec::zeros(1, 0, 0, 3, 10);
  spec.alpha(0, 0) = 0.8;
  spec.decay(0, 0) = 1.0;
  const auto thetas = spec.true_thetas();
  for (std::size_t tau = 1; tau <= 3; ++tau)
    CHECK(thetas[0].alpha(0, tau) == doctest::Approx(0.8 * std::exp(-static_cast<double>(tau))));
}

TEST_CASE("simulator is deterministic per seed and rejects bad decays") {
  auto spec = SimulationSpec::zeros(2, 1, 0, 2, 50);
  spec.alpha(0, 1) = 1.0;
  spec.nu.setConstant(-0.5);
  const auto a = simulate_panel(spec, 9), b = simulate_panel(spec, 9), c = simulate_panel(spec, 10);
  CHECK(a.panel.y == b.panel.y);
  CHECK(a.panel.x == b.panel.x);
  CHECK(a.panel.y != c.panel.y);
  CHECK(a.panel.length() == 52);
  CHECK(a.panel.y.leftCols(2).isZero());
  spec.decay(1, 0) = 0.0;
  CHECK_THROWS_AS((void)simulate_panel(spec, 9), ValidationError);
}

TEST_CASE("simulated conditional frequencies match the link") {
  auto spec = SimulationSpec::zeros(1, 0, 0, 1, 40000);
  spec.nu(0) = -0.5;
  spec.alpha(0, 0) = 1.5 * std::exp(1.0);
  const auto sim = simulate_panel(spec, 3);
  double hits[2] = {0, 0}, counts[2] = {0, 0};
  for (Eigen::Index t = 1; t < sim.panel.y.cols(); ++t) {
    const int prev = sim.panel.y(0, t - 1) > 0 ? 1 : 0;
    counts[prev] += 1;
    hits[prev] += sim.panel.y(0, t);
  }
  const double p[2] = {oracle::logistic(-0.5), oracle::logistic(1.0)};
  for (int k = 0; k < 2; ++k) {
    REQUIRE(counts[k] > 1000);
    const double sd = std::sqrt(p[k] * (1 - p[k]) / counts[k]);
    CHECK(std::abs(hits[k] / counts[k] - p[k]) <= 4.0 * sd);
  }
}

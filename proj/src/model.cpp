#include "sadgraph/model.hpp"

#include "sadgraph/error.hpp"

#include <algorithm>
#include <cmath>

namespace sadgraph {

LinkFunction LinkFunction::sigmoid(double domain_bound) {
  if (!(domain_bound > 0.0)) throw ValidationError("sigmoid domain bound must be positive");
  return LinkFunction(LinkKind::sigmoid, domain_bound);
}

double LinkFunction::operator()(double x) const noexcept {
  if (kind_ == LinkKind::linear) return x;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LinkFunction::derivative(double x) const noexcept {
  if (kind_ == LinkKind::linear) return 1.0;
  const double g = (*this)(x);
  return g * (1.0 - g);
}

double LinkFunction::lower_slope() const noexcept {
  if (kind_ == LinkKind::linear) return 1.0;
  const double e = std::exp(-bound_);
  return e / ((1.0 + e) * (1.0 + e));
}

double LinkFunction::upper_slope() const noexcept { return kind_ == LinkKind::linear ? 1.0 : 0.25; }

std::string to_string(LinkKind kind) { return kind == LinkKind::linear ? "linear" : "sigmoid"; }

LinkKind parse_link_kind(std::string_view name) {
  if (name == "linear") return LinkKind::linear;
  if (name == "sigmoid" || name == "logistic") return LinkKind::sigmoid;
  throw ConfigError("unknown link function '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

ThetaLayout::ThetaLayout(std::size_t nodes, std::size_t exogenous, std::size_t statics, std::size_t depth,
                         std::optional<std::vector<FeatureId>> features)
    : nodes_(nodes), exogenous_(exogenous), statics_(statics), depth_(depth) {
  if (depth == 0) throw ValidationError("memory depth must be >= 1");
  features_ = features ? std::move(*features) : all_features();
  std::sort(features_.begin(), features_.end());
  features_.erase(std::unique(features_.begin(), features_.end()), features_.end());
  std::size_t next = 1;
  for (const auto& f : features_) {
    const std::size_t limit = f.kind == FeatureKind::static_covariate ? statics_
                              : f.kind == FeatureKind::exogenous      ? exogenous_
                                                                      : nodes_;
    if (f.index >= limit) throw ValidationError("feature index out of range for the panel");
    offsets_.push_back(next);
    next += width(f);
  }
  size_ = next;
}

std::vector<FeatureId> ThetaLayout::all_features() const {
  std::vector<FeatureId> out;
  for (std::size_t j = 0; j < statics_; ++j) out.push_back({FeatureKind::static_covariate, j});
  for (std::size_t j = 0; j < exogenous_; ++j) out.push_back({FeatureKind::exogenous, j});
  for (std::size_t j = 0; j < nodes_; ++j) out.push_back({FeatureKind::node, j});
  return out;
}

bool ThetaLayout::contains(FeatureId f) const { return std::binary_search(features_.begin(), features_.end(), f); }

std::optional<std::size_t> ThetaLayout::offset(FeatureId f) const {
  const auto it = std::lower_bound(features_.begin(), features_.end(), f);
  if (it == features_.end() || *it != f) return std::nullopt;
  return offsets_[static_cast<std::size_t>(it - features_.begin())];
}

ThetaVector::ThetaVector(ThetaLayout layout)
    : layout_(std::move(layout)), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.size()))) {}

ThetaVector::ThetaVector(ThetaLayout layout, Eigen::VectorXd values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != layout_.size())
    throw ValidationError("theta length does not match its layout");
}

ThetaVector ThetaVector::unflatten(const ThetaLayout& layout, const Eigen::VectorXd& flat) {
  return ThetaVector(layout, flat);
}

double ThetaVector::get(FeatureId f, std::size_t lag) const {
  const auto off = layout_.offset(f);
  if (!off) return 0.0;
  if (f.kind == FeatureKind::static_covariate) return values_(static_cast<Eigen::Index>(*off));
  if (lag < 1 || lag > layout_.depth()) throw ValidationError("lag out of range");
  return values_(static_cast<Eigen::Index>(*off + lag - 1));
}

double ThetaVector::gamma(std::size_t j) const { return get({FeatureKind::static_covariate, j}, 0); }
double ThetaVector::beta(std::size_t j, std::size_t lag) const { return get({FeatureKind::exogenous, j}, lag); }
double ThetaVector::alpha(std::size_t j, std::size_t lag) const { return get({FeatureKind::node, j}, lag); }

void ThetaVector::set(FeatureId f, std::size_t lag, double value) {
  const auto off = layout_.offset(f);
  if (!off) throw ValidationError("feature not present in layout");
  const std::size_t pos = f.kind == FeatureKind::static_covariate ? *off : *off + lag - 1;
  if (f.kind != FeatureKind::static_covariate && (lag < 1 || lag > layout_.depth()))
    throw ValidationError("lag out of range");
  values_(static_cast<Eigen::Index>(pos)) = value;
}

std::string to_string(LagAggregation agg) {
  switch (agg) {
    case LagAggregation::sum: return "sum";
    case LagAggregation::max_abs: return "max_abs";
    case LagAggregation::first_lag: return "first_lag";
  }
  return "sum";
}

LagAggregation parse_lag_aggregation(std::string_view name) {
  if (name == "sum") return LagAggregation::sum;
  if (name == "max_abs") return LagAggregation::max_abs;
  if (name == "first_lag") return LagAggregation::first_lag;
  throw ConfigError("unknown lag aggregation '" + std::string(name) + "'");
}

namespace {

double aggregate(const ThetaVector& theta, FeatureId f, LagAggregation agg) {
  if (!theta.layout().contains(f)) return 0.0;
  const std::size_t d = theta.layout().depth();
  const auto coef = [&](std::size_t lag) {
    return f.kind == FeatureKind::node ? theta.alpha(f.index, lag) : theta.beta(f.index, lag);
  };
  if (agg == LagAggregation::first_lag) return coef(1);
  double out = 0.0;
  for (std::size_t lag = 1; lag <= d; ++lag) {
    const double c = coef(lag);
    if (agg == LagAggregation::sum) out += c;
    else if (std::abs(c) > std::abs(out)) out = c;
  }
  return out;
}

}  // namespace

double edge_weight(const ThetaVector& theta, std::size_t source, LagAggregation agg) {
  return aggregate(theta, {FeatureKind::node, source}, agg);
}

double exogenous_weight(const ThetaVector& theta, std::size_t source, LagAggregation agg) {
  return aggregate(theta, {FeatureKind::exogenous, source}, agg);
}

// ---------------------------------------------------------------------------

void DesignMatrix::set_weights(const Eigen::VectorXd& w) {
  if (w.size() != rows.rows()) throw ValidationError("weight vector length does not match the design");
  if ((w.array() < 0.0).any()) throw ValidationError("row weights must be nonnegative");
  const double total = w.sum();
  if (!(total > 0.0)) throw ValidationError("row weights sum to zero");
  weights = w * (static_cast<double>(w.size()) / total);
  refresh();
}

void DesignMatrix::refresh() {
  const double T = static_cast<double>(rows.rows());
  if (weights.size() != rows.rows()) weights = Eigen::VectorXd::Ones(rows.rows());
  max_abs = rows.size() > 0 ? rows.cwiseAbs().maxCoeff() : 1.0;
  gram = rows.transpose() * weights.asDiagonal() * rows / T;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  lambda_min = std::max(0.0, eig.eigenvalues()(0));
  lambda_max = eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

Eigen::VectorXd DesignMatrix::response_moment() const {
  return rows.transpose() * weights.cwiseProduct(response) / static_cast<double>(rows.rows());
}

DesignMatrix build_design(std::span<const PatientPanel> panels, std::size_t target, std::size_t depth,
                          const std::optional<std::vector<FeatureId>>& features) {
  if (panels.empty()) throw InsufficientDataError("build_design: no panels");
  const auto& first = panels.front();
  for (const auto& p : panels) {
    p.validate();
    if (p.node_count() != first.node_count() || p.exogenous_count() != first.exogenous_count() ||
        p.static_count() != first.static_count())
      throw ValidationError("build_design: panels have different series rosters");
  }
  if (target >= first.node_count()) throw ValidationError("build_design: target node out of range");

  DesignMatrix design;
  design.layout = ThetaLayout(first.node_count(), first.exogenous_count(), first.static_count(), depth, features);
  design.target = target;
  const auto& layout = design.layout;
  const auto N = static_cast<Eigen::Index>(layout.size());
  const auto d = static_cast<Eigen::Index>(depth);

  std::size_t capacity = 0;
  for (const auto& p : panels) capacity += p.length() > depth ? p.length() - depth : 0;
  if (capacity == 0) throw InsufficientDataError("build_design: series length must exceed the memory depth");

  Eigen::MatrixXd rows(static_cast<Eigen::Index>(capacity), N);
  Eigen::VectorXd response(static_cast<Eigen::Index>(capacity));
  Eigen::Index count = 0;
  const auto tgt = static_cast<Eigen::Index>(target);
  for (const auto& p : panels) {
    for (Eigen::Index t = d; t < static_cast<Eigen::Index>(p.length()); ++t) {
      if (!p.y_valid(tgt, t)) continue;
      bool ok = true;
      Eigen::Index col = 0;
      rows(count, col++) = 1.0;
      for (const auto& f : layout.features()) {
        const auto j = static_cast<Eigen::Index>(f.index);
        switch (f.kind) {
          case FeatureKind::static_covariate:
            rows(count, col++) = p.z(j);
            break;
          case FeatureKind::exogenous:
            for (Eigen::Index lag = 1; lag <= d; ++lag) {
              ok = ok && p.x_valid(j, t - lag);
              rows(count, col++) = p.x(j, t - lag);
            }
            break;
          case FeatureKind::node:
            for (Eigen::Index lag = 1; lag <= d; ++lag) {
              ok = ok && p.y_valid(j, t - lag);
              rows(count, col++) = p.y(j, t - lag);
            }
            break;
        }
      }
      if (!ok) continue;
      response(count) = p.y(tgt, t) > 0.0 ? 1.0 : 0.0;
      ++count;
    }
  }
  if (count == 0) throw InsufficientDataError("build_design: no complete lag windows");
  design.rows = rows.topRows(count);
  design.response = response.head(count);
  design.weights = Eigen::VectorXd::Ones(count);
  design.refresh();
  return design;
}

DesignMatrix build_design(const PatientPanel& panel, std::size_t target, std::size_t depth,
                          const std::optional<std::vector<FeatureId>>& features) {
  return build_design(std::span<const PatientPanel>(&panel, 1), target, depth, features);
}

double predict(const ThetaVector& theta, const Eigen::Ref<const Eigen::VectorXd>& window, const LinkFunction& link) {
  if (window.size() != theta.values().size()) throw ValidationError("predict: window and theta lengths differ");
  const double eta = window.dot(theta.values());
  if (!link.in_domain(eta))
    throw DomainError("linear predictor " + std::to_string(eta) + " outside the link domain [" +
                      std::to_string(link.domain_lower()) + ", " + std::to_string(link.domain_upper()) + "]");
  return link(eta);
}

Eigen::VectorXd predict_rows(const Eigen::VectorXd& theta, const DesignMatrix& design, const LinkFunction& link) {
  Eigen::VectorXd eta = design.rows * theta;
  for (Eigen::Index t = 0; t < eta.size(); ++t)
    eta(t) = link(std::clamp(eta(t), link.domain_lower(), link.domain_upper()));
  return eta;
}

}  // namespace sadgraph

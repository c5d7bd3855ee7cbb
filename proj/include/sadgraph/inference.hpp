#pragma once

// Error bounds, LP confidence intervals and bootstrap edge intervals.

#include "sadgraph/lp.hpp"
#include "sadgraph/model.hpp"
#include "sadgraph/vi.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sadgraph {

// ---------------------------------------------------------------------------
// Non-asymptotic bounds

struct BoundReport {
  double epsilon{0.1};
  double delta_inf_bound{0.0};    // bound on ||F_T(theta_true)||_inf
  double delta_l2_bound{0.0};     // sqrt(N) * delta_inf_bound
  double theta_error_bound{0.0};  // bound on ||theta_hat - theta_true||_2
  double m_g{0.0};
  double M_w{0.0};
  double lambda1{0.0};
  std::size_t N{0};
  std::size_t T{0};
  double kappa{0.0};  // m_g * lambda1
};

/// M_w sqrt(log(2N/eps)/T).
[[nodiscard]] double field_deviation_bound(double M_w, std::size_t N, std::size_t T, double epsilon);

/// Throws RankDeficiencyError when lambda1 <= 0 and ValidationError for eps outside (0,1).
[[nodiscard]] BoundReport theorem1_bound(double M_w, double m_g, double lambda1, std::size_t N, std::size_t T,
                                         double epsilon);
[[nodiscard]] BoundReport theorem1_bound(const DesignMatrix& design, const LinkFunction& link, double epsilon);

// ---------------------------------------------------------------------------
// psi functions

struct PsiDiagnostics {
  std::size_t clamped_radicands{0};
};

/// Lower psi function. `u` replaces y in the 2u/3 and 2u/T terms of the lower
/// formula; the default u = y makes psi_lower(nu) = 1 - psi_upper(1 - nu).
[[nodiscard]] double psi_lower(double nu, std::size_t T, double y, std::optional<double> u = std::nullopt,
                               PsiDiagnostics* diag = nullptr);
[[nodiscard]] double psi_upper(double nu, std::size_t T, double y, PsiDiagnostics* diag = nullptr);

/// 1 - 2N {s[log((s-1)T) + 2] + 2} e^{1-s}; may be negative for small s.
[[nodiscard]] double nominal_level(double s, std::size_t N, std::size_t T);
/// Smallest s >= 2 whose nominal level reaches `level` (bisection).
[[nodiscard]] double calibrate_s(double level, std::size_t N, std::size_t T);

// ---------------------------------------------------------------------------
// LP confidence intervals

struct CiSpec {
  double s{10.0};
  Eigen::VectorXd direction;  // a, nonzero

  [[nodiscard]] double nominal_level(std::size_t N, std::size_t T) const { return sadgraph::nominal_level(s, N, T); }
};

struct CiOptions {
  std::optional<double> psi_u;  // alternative reading of the lower psi formula
  LpOptions lp{};
};

struct Interval {
  double lower{0.0};
  double upper{0.0};
  /// The psi band excludes the feasible set; lower = upper = 0 then.
  bool infeasible{false};
  /// Outer interval from a linear relaxation of the link.
  bool conservative{false};
  double duality_gap{0.0};
  double nominal_level{0.0};
  std::size_t clamped_radicands{0};
};

/// Linear envelope f2(x) = a2 x + b2 <= g(x) <= a1 x + b1 = f1(x) on the link domain.
struct LinearEnvelope {
  double a1{1.0}, b1{0.0}, a2{1.0}, b2{0.0};
  /// True when the tangent construction failed verification and the chord envelope was used.
  bool fallback{false};

  [[nodiscard]] static LinearEnvelope identity() { return {}; }
  [[nodiscard]] double upper(double x) const noexcept { return a1 * x + b1; }
  [[nodiscard]] double lower(double x) const noexcept { return a2 * x + b2; }
};

/// Envelope of the logistic function on [-M, M]. The upper line is tangent on
/// (0, M) and passes through (-M, g(-M)); the lower line mirrors it through
/// (0, 1/2). Verified on a 10^4-point grid; falls back to shifted chords.
[[nodiscard]] LinearEnvelope sigmoid_linear_bounds(double M);
/// Largest violation of the envelope on an n-point grid of [-M, M] (0 when valid).
[[nodiscard]] double envelope_violation(const LinearEnvelope& env, double M, std::size_t n = 10001);

/// a[W_T; i] = (1/T) sum_t w_t y_t (unweighted).
[[nodiscard]] Eigen::VectorXd response_counts(const DesignMatrix& design);

/// min / max of a^T theta over Theta intersected with the psi band (linear link).
[[nodiscard]] Interval ci_linear(const DesignMatrix& design, const FeasibleSet& feasible, const CiSpec& spec,
                                 const Eigen::VectorXd& a_counts, const CiOptions& options = {});
/// Same with g replaced by its linear envelope; the identity envelope reproduces ci_linear.
[[nodiscard]] Interval ci_nonlinear(const DesignMatrix& design, const FeasibleSet& feasible, const CiSpec& spec,
                                    const Eigen::VectorXd& a_counts, const LinearEnvelope& envelope,
                                    const CiOptions& options = {});
/// Interval for every coordinate theta_k (a = e_k), using the envelope of `link`.
[[nodiscard]] std::vector<Interval> ci_coordinates(const DesignMatrix& design, const FeasibleSet& feasible,
                                                   const LinkFunction& link, double s, const CiOptions& options = {});

// ---------------------------------------------------------------------------
// Bootstrap

struct EdgeInterval {
  std::size_t source{0};
  std::size_t target{0};
  double lower{0.0};
  double upper{0.0};
  double median{0.0};
  bool exists{false};
  double weight{0.0};
};

/// Type-7 sample quantile (linear interpolation between order statistics).
[[nodiscard]] double quantile(std::vector<double> values, double p);

/// samples[b](target, source) holds replicate b's edge weight.
[[nodiscard]] std::vector<EdgeInterval> edge_intervals_from_samples(std::span<const Eigen::MatrixXd> samples,
                                                                    double level);

struct BootstrapConfig {
  std::size_t replicates{1000};
  double level{0.90};
  std::uint64_t seed{0};
  NodeFitConfig fit{};
  LagAggregation aggregation{LagAggregation::sum};
  /// Optional per-node feature restriction (e.g. from forward selection).
  std::vector<std::optional<std::vector<FeatureId>>> features;
};

struct BootstrapResult {
  std::vector<EdgeInterval> edges;  // row-major over (target, source)
  std::size_t nodes{0};
  std::size_t replicates{0};
  std::size_t failures{0};

  [[nodiscard]] const EdgeInterval& at(std::size_t target, std::size_t source) const {
    return edges[target * nodes + source];
  }
};

/// Resamples patients with replacement and refits every node per replicate.
/// Throws InsufficientDataError when more than 10% of replicates fail.
[[nodiscard]] BootstrapResult bootstrap_edges(std::span<const PatientPanel> panels, const BootstrapConfig& config);

}  // namespace sadgraph

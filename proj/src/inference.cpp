#include "sadgraph/inference.hpp"

#include "sadgraph/error.hpp"
#include "sadgraph/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace sadgraph {

double field_deviation_bound(double M_w, std::size_t N, std::size_t T, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");
  if (N == 0 || T == 0) throw ValidationError("N and T must be positive");
  return M_w * std::sqrt(std::log(2.0 * static_cast<double>(N) / epsilon) / static_cast<double>(T));
}

BoundReport theorem1_bound(double M_w, double m_g, double lambda1, std::size_t N, std::size_t T, double epsilon) {
  if (!(lambda1 > 0.0))
    throw RankDeficiencyError("smallest Gram eigenvalue is " + std::to_string(lambda1) +
                              "; the bound needs a full-rank design");
  if (!(m_g > 0.0)) throw ValidationError("link lower slope must be positive");
  BoundReport r;
  r.epsilon = epsilon;
  r.M_w = M_w;
  r.m_g = m_g;
  r.lambda1 = lambda1;
  r.N = N;
  r.T = T;
  r.kappa = m_g * lambda1;
  r.delta_inf_bound = field_deviation_bound(M_w, N, T, epsilon);
  r.delta_l2_bound = std::sqrt(static_cast<double>(N)) * r.delta_inf_bound;
  r.theta_error_bound = r.delta_l2_bound / r.kappa;
  return r;
}

BoundReport theorem1_bound(const DesignMatrix& design, const LinkFunction& link, double epsilon) {
  const double tiny = 1e-12 * std::max(1.0, design.lambda_max);
  const double lambda1 = design.lambda_min > tiny ? design.lambda_min : 0.0;
  return theorem1_bound(design.max_abs, link.lower_slope(), lambda1, design.dimension(), design.size(), epsilon);
}

// ---------------------------------------------------------------------------

namespace {

void check_psi_args(double nu, std::size_t T, double y) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw ValidationError("psi: nu must lie in [0,1]");
  if (T == 0) throw ValidationError("psi: T must be >= 1");
  if (!(y > 0.0)) throw ValidationError("psi: y must be positive");
}

double clamped_sqrt(double radicand, PsiDiagnostics* diag) {
  if (radicand < 0.0) {
    if (diag) ++diag->clamped_radicands;
    return 0.0;
  }
  return std::sqrt(radicand);
}

}  // namespace

double psi_lower(double nu, std::size_t T, double y, std::optional<double> u, PsiDiagnostics* diag) {
  check_psi_args(nu, T, y);
  const double t = static_cast<double>(T);
  if (!(nu > y / (3.0 * t))) return 0.0;
  const double uu = u.value_or(y);
  const double dev = y / 3.0 - nu * t;
  const double root = clamped_sqrt(2.0 * t * nu * y + y * y / 3.0 - (2.0 * uu / t) * dev * dev, diag);
  return std::clamp((t * nu + 2.0 * uu / 3.0 - root) / (t + 2.0 * y), 0.0, 1.0);
}

double psi_upper(double nu, std::size_t T, double y, PsiDiagnostics* diag) {
  check_psi_args(nu, T, y);
  const double t = static_cast<double>(T);
  if (!(nu < 1.0 - y / (3.0 * t))) return 1.0;
  const double dev = y / 3.0 + nu * t;
  const double root = clamped_sqrt(2.0 * t * nu * y + 5.0 * y * y / 3.0 - (2.0 * y / t) * dev * dev, diag);
  return std::clamp((t * nu + 4.0 * y / 3.0 + root) / (t + 2.0 * y), 0.0, 1.0);
}

double nominal_level(double s, std::size_t N, std::size_t T) {
  if (!(s > 1.0)) throw ValidationError("confidence parameter s must exceed 1");
  const double n = static_cast<double>(N);
  const double t = static_cast<double>(T);
  return 1.0 - 2.0 * n * (s * (std::log((s - 1.0) * t) + 2.0) + 2.0) * std::exp(1.0 - s);
}

double calibrate_s(double level, std::size_t N, std::size_t T) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("target level must lie in (0,1)");
  double lo = 2.0;
  if (nominal_level(lo, N, T) >= level) return lo;
  double hi = 4.0;
  while (nominal_level(hi, N, T) < level) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (nominal_level(mid, N, T) < level ? lo : hi) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------

namespace {

double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
double logistic_slope(double x) {
  const double g = logistic(x);
  return g * (1.0 - g);
}

LinearEnvelope chord_envelope(double M) {
  const double slope = (logistic(M) - logistic(-M)) / (2.0 * M);
  // The logistic exceeds the chord most where its slope equals the chord slope.
  const double disc = std::sqrt(std::max(0.0, 1.0 - 4.0 * slope));
  double gap = 0.0;
  if (disc > 0.0) {
    const double x = std::min(M, std::log((1.0 + disc) / (1.0 - disc)));
    gap = logistic(x) - slope * x - 0.5;
  }
  gap = std::max(gap, 0.0) + 1e-15;
  LinearEnvelope env;
  env.a1 = env.a2 = slope;
  env.b1 = 0.5 + gap;
  env.b2 = 0.5 - gap;
  env.fallback = true;
  return env;
}

}  // namespace

double envelope_violation(const LinearEnvelope& env, double M, std::size_t n) {
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = n == 1 ? 0.0 : -M + 2.0 * M * static_cast<double>(k) / static_cast<double>(n - 1);
    const double g = logistic(x);
    worst = std::max({worst, g - env.upper(x), env.lower(x) - g});
  }
  return worst;
}

LinearEnvelope sigmoid_linear_bounds(double M) {
  if (!(M > 0.0)) throw ValidationError("envelope half-width M must be positive");
  // Tangent point p in (0, M) of the line through (-M, g(-M)).
  const double anchor = logistic(-M);
  const auto h = [&](double p) { return logistic(p) + logistic_slope(p) * (-M - p) - anchor; };
  double lo = 0.0, hi = M;
  if (h(lo) < 0.0 && h(hi) > 0.0) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < 0.0 ? lo : hi) = mid;
    }
    const double p = 0.5 * (lo + hi);
    LinearEnvelope env;
    env.a1 = logistic_slope(p);
    env.b1 = logistic(p) - env.a1 * p;
    // Make sure the line does not dip below g(-M) from rounding at the anchor.
    env.b1 = std::max(env.b1, anchor + env.a1 * M);
    env.a2 = env.a1;
    env.b2 = 1.0 - env.b1;
    if (envelope_violation(env, M) <= 1e-12) return env;
  }
  return chord_envelope(M);
}

Eigen::VectorXd response_counts(const DesignMatrix& design) {
  if (design.rows.rows() == 0) throw InsufficientDataError("response counts of an empty design");
  return design.rows.transpose() * design.response / static_cast<double>(design.rows.rows());
}

Interval ci_nonlinear(const DesignMatrix& design, const FeasibleSet& feasible, const CiSpec& spec,
                      const Eigen::VectorXd& a_counts, const LinearEnvelope& envelope, const CiOptions& options) {
  const auto n = static_cast<Eigen::Index>(design.dimension());
  const std::size_t T = design.size();
  if (T == 0) throw InsufficientDataError("confidence interval needs design rows");
  if (feasible.dimension() != design.dimension()) throw ValidationError("feasible set dimension mismatch");
  if (spec.direction.size() != n) throw ValidationError("CI direction has the wrong length");
  if (spec.direction.isZero(0.0)) throw ValidationError("CI direction must be nonzero");
  if (a_counts.size() != n) throw ValidationError("response counts have the wrong length");
  if (!(spec.s > 1.0)) throw ValidationError("confidence parameter s must exceed 1");
  if (!(envelope.a1 > 0.0 && envelope.a2 > 0.0)) throw ValidationError("envelope slopes must be positive");

  const double t = static_cast<double>(T);
  const double mw = design.max_abs;
  const Eigen::MatrixXd gram = design.rows.transpose() * design.rows / t;
  const Eigen::VectorXd means = design.rows.colwise().mean().transpose();

  Interval out;
  out.conservative = !(envelope.a1 == 1.0 && envelope.b1 == 0.0 && envelope.a2 == 1.0 && envelope.b2 == 0.0);
  out.nominal_level = nominal_level(spec.s, design.dimension(), T);

  // Band rows: per coordinate, gamma_t in [0,1] maps w_tk into the unit interval;
  // columns with negative entries use the affine map (w + M_w)/(2 M_w).
  const Eigen::Index u = feasible.normals.rows();
  Eigen::MatrixXd a(2 * n + 2 * u, n);
  Eigen::VectorXd b(2 * n + 2 * u);
  PsiDiagnostics diag;
  for (Eigen::Index k = 0; k < n; ++k) {
    const bool shifted = design.rows.col(k).minCoeff() < 0.0;
    Eigen::VectorXd c;
    double gbar = 0.0, nu = 0.0;
    if (shifted) {
      c = (gram.row(k) + mw * gram.row(0)).transpose() / (2.0 * mw);
      gbar = (means(k) + mw * means(0)) / (2.0 * mw);
      nu = (a_counts(k) + mw * a_counts(0)) / (2.0 * mw);
    } else {
      c = gram.row(k).transpose() / mw;
      gbar = means(k) / mw;
      nu = a_counts(k) / mw;
    }
    nu = std::clamp(nu, 0.0, 1.0);
    const double lo = psi_lower(nu, T, spec.s, options.psi_u, &diag);
    const double hi = psi_upper(nu, T, spec.s, &diag);
    a.row(2 * k) = -envelope.a1 * c.transpose();
    b(2 * k) = envelope.b1 * gbar - lo;
    a.row(2 * k + 1) = envelope.a2 * c.transpose();
    b(2 * k + 1) = hi - envelope.b2 * gbar;
  }
  a.middleRows(2 * n, u) = feasible.normals;
  b.segment(2 * n, u) = feasible.upper;
  a.bottomRows(u) = -feasible.normals;
  b.tail(u) = -feasible.lower;
  out.clamped_radicands = diag.clamped_radicands;

  LinearProgram lp;
  lp.a = std::move(a);
  lp.b = std::move(b);
  lp.lower = Eigen::VectorXd::Constant(n, -feasible.theta_max);
  lp.upper = Eigen::VectorXd::Constant(n, feasible.theta_max);
  lp.objective = spec.direction;
  const LpResult low = solve_lp(lp, options.lp);
  lp.objective = -spec.direction;
  const LpResult high = solve_lp(lp, options.lp);
  if (low.status == LpStatus::infeasible || high.status == LpStatus::infeasible) {
    out.infeasible = true;
    return out;
  }
  if (low.status != LpStatus::optimal || high.status != LpStatus::optimal)
    throw Error("confidence-interval LP hit its iteration limit");
  out.lower = low.value;
  out.upper = -high.value;
  out.duality_gap = std::max(low.duality_gap, high.duality_gap);
  return out;
}

Interval ci_linear(const DesignMatrix& design, const FeasibleSet& feasible, const CiSpec& spec,
                   const Eigen::VectorXd& a_counts, const CiOptions& options) {
  return ci_nonlinear(design, feasible, spec, a_counts, LinearEnvelope::identity(), options);
}

std::vector<Interval> ci_coordinates(const DesignMatrix& design, const FeasibleSet& feasible, const LinkFunction& link,
                                     double s, const CiOptions& options) {
  const LinearEnvelope env =
      link.kind() == LinkKind::linear ? LinearEnvelope::identity() : sigmoid_linear_bounds(link.domain_bound());
  const Eigen::VectorXd counts = response_counts(design);
  const std::size_t n = design.dimension();
  std::vector<Interval> out(n);
  parallel_for(n, [&](std::size_t k) {
    CiSpec spec;
    spec.s = s;
    spec.direction = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    out[k] = ci_nonlinear(design, feasible, spec, counts, env, options);
  });
  return out;
}

}  // namespace sadgraph

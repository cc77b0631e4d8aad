#pragma once

// Trace certification and rate estimation.
//
//   (H1')  F(x^{k+1}) - F(x^k) <= -alpha ||x^{k+1} - x^k||^2 + eps_k^2
//   (H2')  ||w^{k+1}|| <= beta ||x^{k+1} - x^k|| + eps_k,  w^{k+1} in dF(x^{k+1})
//
// eps sequences are indexed by step: eps[k] belongs to the transition
// x^k -> x^{k+1}, so a trace with K+1 records has K entries.

#include <lpreg/error.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/prox.hpp>
#include <lpreg/solvers.hpp>
#include <lpreg/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lpreg {

/// Summability of sum eps_k^2 and limsup eps_{k+1}/eps_k < 1.
///
/// Neither can be decided from finitely many terms. For a schedule c rho^k
/// both hold exactly when rho < 1 (or c = 0) and the verdict is symbolic;
/// otherwise a diagnostic is reported from the data.
struct SummabilityVerdict {
  bool symbolic = false;
  bool summable = false;
  double observed_sum = 0.0;    // sum of eps_k^2 over the data
  double tail_share = 0.0;      // fraction of that sum contributed by the second half
  double tail_ratio = 0.0;      // max eps_{k+1}/eps_k over the second half
  std::string note;
};

inline SummabilityVerdict summability_from_schedule(const Schedule& s) {
  SummabilityVerdict v;
  v.symbolic = s.is_geometric() || s.is_zero();
  if (s.is_zero()) {
    v.summable = true;
    v.note = "zero sequence";
  } else if (s.is_geometric()) {
    v.summable = s.rho() < 1.0;
    v.note = "geometric schedule c*rho^k with rho < 1";
  } else {
    v.note = "explicit schedule: not decidable from finitely many terms";
  }
  return v;
}

inline SummabilityVerdict summability_diagnostic(const std::vector<double>& eps) {
  SummabilityVerdict v;
  detail::CompensatedSum all;
  detail::CompensatedSum tail;
  const std::size_t half = eps.size() / 2;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    all.add(eps[k] * eps[k]);
    if (k >= half) tail.add(eps[k] * eps[k]);
  }
  v.observed_sum = all.value();
  v.tail_share = v.observed_sum > 0.0 ? tail.value() / v.observed_sum : 0.0;
  for (std::size_t k = std::max<std::size_t>(half, 1); k < eps.size(); ++k) {
    if (eps[k - 1] > 0.0) v.tail_ratio = std::max(v.tail_ratio, eps[k] / eps[k - 1]);
  }
  // Diagnostic only: a small tail share and ratios below 1 are consistent
  // with summability.
  v.summable = v.tail_share < 0.5 && v.tail_ratio < 1.0;
  v.note = "diagnostic from finite data, not a proof";
  return v;
}

struct StepCheck {
  std::size_t k = 0;  // transition x^k -> x^{k+1}
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs + tolerance - lhs; negative means violated
  bool pass = true;
};

struct CertificationReport {
  double constant = 0.0;  // alpha for H1, beta for H2
  std::vector<StepCheck> steps;
  bool pass = true;
  std::size_t violations = 0;
  std::optional<std::size_t> worst_k;
  double worst_slack = std::numeric_limits<double>::infinity();
  SummabilityVerdict summability;
  std::string witness;  // how w^{k+1} was obtained (H2 only)
};

namespace detail {

inline void finish_report(CertificationReport& rep) {
  for (const auto& s : rep.steps) {
    if (!s.pass) ++rep.violations;
    if (s.slack < rep.worst_slack) {
      rep.worst_slack = s.slack;
      rep.worst_k = s.k;
    }
  }
  rep.pass = rep.violations == 0;
  if (rep.steps.empty()) rep.worst_slack = 0.0;
}

inline void check_eps(const std::vector<double>& eps, std::size_t steps) {
  if (eps.size() != steps) {
    throw DimensionError("eps sequence has length " + std::to_string(eps.size()) +
                         " but the trace has " + std::to_string(steps) + " steps");
  }
  for (double e : eps) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("eps", "entries must be finite and nonnegative");
  }
}

}  // namespace detail

/// alpha = 1/(2 v_max) - ||A||^2 (with the conservative norm estimate).
inline double alpha_from_stepsize(double v_max, double norm_sq_safe) {
  return 0.5 / v_max - norm_sq_safe;
}

/// eps_k per step as recorded by the solver: sqrt of the total value gap for
/// ipga1p, the distance to the exact prox point for ipga2p, 0 for pga.
inline std::vector<double> eps_from_trace(const std::vector<IterationRecord>& records,
                                          Algorithm algorithm) {
  std::vector<double> eps;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double e = records[k].eps;
    eps.push_back(algorithm == Algorithm::ipga1p ? std::sqrt(e) : e);
  }
  return eps;
}

inline std::vector<double> eps_from_trace(const IterationTrace& trace) {
  return eps_from_trace(trace.records, trace.algorithm);
}

/// Per-step check of (H1'). `rel_tol` allows rounding in F:
/// a step passes when lhs <= rhs + rel_tol (1 + |F(x^k)|).
inline CertificationReport certify_h1(const std::vector<IterationRecord>& records, double alpha,
                                      const std::vector<double>& eps,
                                      const std::optional<Schedule>& schedule = std::nullopt,
                                      double rel_tol = 1e-12) {
  if (records.empty()) throw ValidationError("trace", "trace is empty");
  const std::size_t steps = records.size() - 1;
  detail::check_eps(eps, steps);
  if (!std::isfinite(alpha)) throw ValidationError("alpha", "must be finite");

  CertificationReport rep;
  rep.constant = alpha;
  for (std::size_t k = 0; k < steps; ++k) {
    const double dx = records[k + 1].step_norm;
    StepCheck s;
    s.k = k;
    s.lhs = records[k + 1].objective - records[k].objective;
    s.rhs = -alpha * dx * dx + eps[k] * eps[k];
    s.slack = s.rhs + rel_tol * (1.0 + std::abs(records[k].objective)) - s.lhs;
    s.pass = s.slack >= 0.0;
    rep.steps.push_back(s);
  }
  detail::finish_report(rep);
  rep.summability = schedule ? summability_from_schedule(*schedule) : summability_diagnostic(eps);
  if (schedule && !rep.summability.symbolic) {
    const auto diag = summability_diagnostic(eps);
    rep.summability.observed_sum = diag.observed_sum;
    rep.summability.tail_share = diag.tail_share;
    rep.summability.tail_ratio = diag.tail_ratio;
    rep.summability.summable = diag.summable;
  }
  return rep;
}

inline CertificationReport certify_h1(const IterationTrace& trace, double alpha,
                                      const std::vector<double>& eps,
                                      const std::optional<Schedule>& schedule = std::nullopt,
                                      double rel_tol = 1e-12) {
  return certify_h1(trace.records, alpha, eps, schedule, rel_tol);
}

/// beta for (H2') from trace data:
///   1/v_min + 2||A||^2 + lambda_max p (1-p) max_{i in I} |x_i|^(p-2)
/// with I the support of the final iterate. The last term is dropped when
/// the trace carries no iterates. For exact PGA, 1/v_min + 2||A||^2 alone
/// already bounds ||w^{k+1}|| / ||x^{k+1} - x^k||.
inline double estimate_h2_beta(const Problem& prob, const IterationTrace& trace) {
  double beta = 1.0 / trace.v_min + 2.0 * trace.norm_sq_safe;
  if (trace.has_iterates()) {
    const Vector& x = trace.final_iterate();
    double curv = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] != 0.0) curv = std::max(curv, std::pow(std::abs(x[i]), prob.p - 2.0));
    }
    beta += prob.max_weight() * prob.p * (1.0 - prob.p) * curv;
  }
  return beta;
}

struct H2Options {
  // Use the recorded residual column when iterates are not stored (e.g. a
  // trace read back from CSV). Off by default: the witness is then recomputed.
  bool allow_recorded_residual = false;
  double abs_tol = 1e-12;  // scaled by 1 + ||2 A^T b||
};

/// Per-step check of (H2') with w^{k+1} the minimal-norm limiting
/// subgradient, whose norm is residual_on_support(x^{k+1}).
inline CertificationReport certify_h2(const Problem& prob, const IterationTrace& trace,
                                      double beta, const std::vector<double>& eps,
                                      const H2Options& opt = {}) {
  if (trace.records.empty()) throw ValidationError("trace", "trace is empty");
  const std::size_t steps = trace.records.size() - 1;
  detail::check_eps(eps, steps);
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta", "must be positive");
  const bool recompute = trace.has_iterates();
  if (!recompute && !opt.allow_recorded_residual) {
    throw ValidationError("trace", "certify_h2 needs stored iterates");
  }
  const double tol = opt.abs_tol * (1.0 + 2.0 * (prob.A.transpose() * prob.b).norm());

  CertificationReport rep;
  rep.constant = beta;
  rep.witness = recompute ? "recomputed from iterates" : "recorded residual column";
  for (std::size_t k = 0; k < steps; ++k) {
    StepCheck s;
    s.k = k;
    s.lhs = recompute ? residual_on_support(prob, trace.iterates[k + 1]).residual
                      : trace.records[k + 1].residual;
    s.rhs = beta * trace.records[k + 1].step_norm + eps[k];
    s.slack = s.rhs + tol - s.lhs;
    s.pass = s.slack >= 0.0;
    rep.steps.push_back(s);
  }
  detail::finish_report(rep);
  rep.summability = summability_diagnostic(eps);
  return rep;
}

struct RecursionReport {
  bool pass = false;
  bool hypothesis_ok = false;
  std::optional<std::size_t> failed_index;
  std::string reason;
  double K = 0.0;
  double theta = 0.0;
  double tau = 0.0;
  std::size_t tail_start = 0;  // N in the construction
  double c_sum = 0.0;          // sum of the dominating sequence c_i
  double worst_ratio = 0.0;    // max_k a_k / (K theta^k)
};

namespace detail {

// Least-squares slope and r^2 of y on x.
inline std::pair<double, double> ols_slope_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return {0.0, 0.0};
  const double slope = sxy / sxx;
  const double r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, r2};
}

}  // namespace detail

/// Checks a_{k+1} <= eta a_k + delta_k and a finite-data version of
/// limsup delta_{k+1}/delta_k < 1, then builds (K, theta) the way the
/// standard unrolling argument does and verifies a_k <= K theta^k for every given k.
///
/// Finite-data rules:
///   * N = floor(len(delta)/2); tau^2 is the largest ratio delta_{k+1}/delta_k
///     for k >= N (0/0 skipped, positive/0 is infinite). tau is floored at
///     1e-3 to keep c_i finite; any tau with tau^2 above the ratios works.
///   * The limsup hypothesis fails when a tail ratio is >= 1, or when the tail
///     ratios approach 1 like a power of k: the fit of log(1 - r_k) on
///     log(k+1) has slope <= -0.5 and r^2 >= 0.9 (delta_k = 1/k gives slope -1).
///   * If the tail of delta is identically zero, tau = eta.
///   * c_i = delta_i / tau^i (i < N), tau^(i-2N) delta_N (i >= N);
///     sum c = sum_{i<N} c_i + tau^(-N) delta_N / (1 - tau).
///   * theta = max(eta, tau), K = max(1, a_1/(c_0 + theta)) exp(sum c / theta),
///     raised to a_0 so that k = 0 is covered.
inline RecursionReport check_geometric_recursion(const std::vector<double>& a,
                                                 const std::vector<double>& delta, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("eta", "must lie in (0,1)");
  if (a.size() < 2) throw ValidationError("a", "need at least two terms");
  if (delta.size() + 1 < a.size()) {
    throw DimensionError("delta must have at least len(a) - 1 entries");
  }
  for (double x : a) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("a", "entries must be finite and nonnegative");
  }
  for (double x : delta) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("delta", "entries must be finite and nonnegative");
  }

  RecursionReport rep;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double bound = eta * a[k] + delta[k];
    if (a[k + 1] > bound * (1.0 + 1e-12) + std::numeric_limits<double>::min()) {
      rep.failed_index = k;
      rep.reason = "a_{k+1} > eta a_k + delta_k at k = " + std::to_string(k);
      return rep;
    }
  }

  const std::size_t L = delta.size();
  const std::size_t N = L / 2;
  rep.tail_start = N;
  double max_ratio = -1.0;
  std::vector<double> logk, log_gap;
  for (std::size_t k = N; k + 1 < L; ++k) {
    if (delta[k] == 0.0) {
      if (delta[k + 1] > 0.0) {
        rep.failed_index = k;
        rep.reason = "delta_{k+1} / delta_k is infinite at k = " + std::to_string(k);
        return rep;
      }
      continue;
    }
    const double r = delta[k + 1] / delta[k];
    if (r >= 1.0) {
      rep.failed_index = k;
      rep.reason = "tail ratio delta_{k+1}/delta_k >= 1 at k = " + std::to_string(k);
      return rep;
    }
    max_ratio = std::max(max_ratio, r);
    logk.push_back(std::log(static_cast<double>(k + 1)));
    log_gap.push_back(std::log1p(-r));
  }
  if (logk.size() >= 5) {
    const auto [slope, r2] = detail::ols_slope_r2(logk, log_gap);
    if (slope <= -0.5 && r2 >= 0.9) {
      rep.failed_index = N;
      rep.reason = "tail ratios approach 1 (1 - r_k ~ k^" + std::to_string(slope) + ")";
      return rep;
    }
  }
  rep.hypothesis_ok = true;

  const double tau = (max_ratio < 0.0) ? eta : std::max(std::sqrt(max_ratio), 1e-3);
  rep.tau = tau;
  const double theta = std::max(eta, tau);
  rep.theta = theta;

  detail::CompensatedSum csum;
  double c0 = 0.0;
  for (std::size_t i = 0; i < std::min(N, L); ++i) {
    const double ci = delta[i] / std::pow(tau, static_cast<double>(i));
    if (i == 0) c0 = ci;
    csum.add(ci);
  }
  const double deltaN = (N < L) ? delta[N] : 0.0;
  csum.add(std::pow(tau, -static_cast<double>(N)) * deltaN / (1.0 - tau));
  if (N == 0) c0 = deltaN;  // c_0 = tau^(-2N) delta_N with N = 0
  rep.c_sum = csum.value();

  double K = std::max(1.0, a[1] / (c0 + theta)) * std::exp(rep.c_sum / theta);
  K = std::max(K, a[0]);
  rep.K = K;
  if (!std::isfinite(K)) {
    rep.reason = "constructed K overflows";
    return rep;
  }

  rep.pass = true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double bound = K * std::pow(theta, static_cast<double>(k));
    const double ratio = bound > 0.0 ? a[k] / bound : (a[k] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (a[k] > bound * (1.0 + 1e-12)) {
      rep.pass = false;
      if (!rep.failed_index) rep.failed_index = k;
      rep.reason = "a_k exceeds K theta^k at k = " + std::to_string(k);
    }
  }
  return rep;
}

struct RateEstimate {
  double eta_hat = 1.0;
  double C_hat = 0.0;
  std::size_t tail_start = 0;
  std::size_t points = 0;
  double r2 = 0.0;
  bool linear = false;  // eta_hat < 1
  std::string quantity;
};

/// Least-squares line through (k, log series_k) for k in [start, L), with
/// start = min_start + floor(tail_frac * (L - min_start)), skipping entries <= 100 * machine epsilon * scale;
/// L is one past the last entry above that floor. Pass the support-identification index
/// as min_start to keep the pre-identification transient out of the fit.
inline RateEstimate fit_rate(const std::vector<double>& series, double scale = 1.0,
                             double tail_frac = 0.5, std::string quantity = "series",
                             std::size_t min_start = 0) {
  if (!(tail_frac >= 0.0 && tail_frac < 1.0)) throw ValidationError("tail_frac", "must lie in [0,1)");
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * std::abs(scale);
  RateEstimate est;
  est.quantity = std::move(quantity);
  std::size_t L = 0;
  for (std::size_t k = series.size(); k > 0; --k) {
    if (series[k - 1] > floor && std::isfinite(series[k - 1])) {
      L = k;
      break;
    }
  }
  const std::size_t base = std::min(min_start, L);
  est.tail_start =
      base + static_cast<std::size_t>(std::floor(tail_frac * static_cast<double>(L - base)));
  std::vector<double> ks, ys;
  for (std::size_t k = est.tail_start; k < series.size(); ++k) {
    if (series[k] > floor && std::isfinite(series[k])) {
      ks.push_back(static_cast<double>(k));
      ys.push_back(std::log(series[k]));
    }
  }
  est.points = ks.size();
  if (ks.size() < 5) {
    throw Error("fit_rate: " + std::to_string(ks.size()) +
                " usable tail points (need at least 5)");
  }
  const double n = static_cast<double>(ks.size());
  double mk = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    mk += ks[i];
    my += ys[i];
  }
  mk /= n;
  my /= n;
  double skk = 0.0, sky = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    skk += (ks[i] - mk) * (ks[i] - mk);
    sky += (ks[i] - mk) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sky / skk;
  est.eta_hat = std::exp(slope);
  est.C_hat = std::exp(my - slope * mk);
  est.r2 = (syy == 0.0) ? 1.0 : (sky * sky) / (skk * syy);
  est.linear = est.eta_hat < 1.0;
  return est;
}

/// Rate of F(x^k) - F_star.
inline RateEstimate fit_rate_objective(const std::vector<IterationRecord>& records, double F_star,
                                       double tail_frac = 0.5, std::size_t min_start = 0) {
  std::vector<double> s;
  s.reserve(records.size());
  for (const auto& r : records) s.push_back(r.objective - F_star);
  return fit_rate(s, 1.0 + std::abs(F_star), tail_frac, "F(x^k)-F*", min_start);
}

/// Rate of ||x^k - x_star||; needs stored iterates.
inline RateEstimate fit_rate_iterates(const IterationTrace& trace, const Vector& x_star,
                                      double tail_frac = 0.5, std::size_t min_start = 0) {
  if (!trace.has_iterates()) throw ValidationError("trace", "iterate rate needs stored iterates");
  std::vector<double> s;
  s.reserve(trace.iterates.size());
  for (const auto& x : trace.iterates) s.push_back((x - x_star).norm());
  return fit_rate(s, 1.0 + x_star.norm(), tail_frac, "||x^k-x*||", min_start);
}

/// Smallest N with supp(x^k) = supp(x^K) for all k >= N. None when the
/// support still changes within the last 10 iterates.
inline std::optional<std::size_t> detect_support_identification(const std::vector<SupportSet>& supports) {
  if (supports.empty()) return std::nullopt;
  std::size_t N = supports.size() - 1;
  while (N > 0 && supports[N - 1] == supports.back()) --N;
  if (N > 0 && N + 10 > supports.size()) return std::nullopt;
  return N;
}

/// Support sizes are all a CSV trace keeps; identification there compares sizes.
inline std::optional<std::size_t> detect_support_identification(const std::vector<IterationRecord>& records) {
  std::vector<SupportSet> sizes;
  sizes.reserve(records.size());
  for (const auto& r : records) {
    SupportSet s;
    s.indices.assign(r.support_size, 0);
    sizes.push_back(std::move(s));
  }
  return detect_support_identification(sizes);
}

/// Whether residual_on_support(x^k), k >= N, never rises above
/// (1 + allowance) times the smallest value seen so far, ignoring values
/// already below `floor`. Diagnostic only.
inline bool residual_settles(const std::vector<IterationRecord>& records, std::size_t N,
                             double allowance = 0.1, double floor = 1e-7) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = N; k < records.size(); ++k) {
    const double r = records[k].residual;
    if (r > floor && r > (1.0 + allowance) * best) return false;
    best = std::min(best, r);
  }
  return true;
}

/// Recomputes every per-coordinate control of an inexact trace from the
/// stored iterates and returns the number of violated coordinates.
inline std::size_t verify_ipga_controls(const Problem& prob, const IterationTrace& trace,
                                        const Schedule& schedule) {
  if (trace.algorithm == Algorithm::pga) return 0;
  if (!trace.has_iterates()) throw ValidationError("trace", "control verification needs stored iterates");
  std::size_t violations = 0;
  for (std::size_t k = 0; k + 1 < trace.iterates.size(); ++k) {
    const Vector& x = trace.iterates[k];
    const Vector& y = trace.iterates[k + 1];
    const double v = trace.stepsizes[k];
    const double level = schedule.at(k);
    const Vector z = x - 2.0 * v * (prob.A.transpose() * (prob.A * x - prob.b));
    for (Index i = 0; i < x.size(); ++i) {
      const ProxQuery q{z[i], v, prob.weight(i), prob.p};
      const ProxResult exact = prox_scalar(q);
      const double dx = y[i] - x[i];
      if (trace.algorithm == Algorithm::ipga1p) {
        if (detail::value_gap(q, exact, y[i]) > level * dx * dx) ++violations;
      } else {
        if (exact.distance(y[i]) > level * std::abs(dx) * (1.0 + detail::kDistanceSlack)) ++violations;
      }
    }
  }
  return violations;
}

}  // namespace lpreg

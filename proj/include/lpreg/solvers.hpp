#pragma once

// Proximal gradient iterations for the l_p-regularized least-squares problem:
//
//   z^k     = x^k - 2 v_k A^T (A x^k - b)
//   x^{k+1} = prox_{v_k}(z^k)                      (exact PGA)
//
// and two parallel inexact variants that replace the exact coordinate prox by
// a certified approximation:
//
//   ipga1p:  g_i(x_i^{k+1}) - min g_i <= tau_k (x_i^{k+1} - x_i^k)^2
//   ipga2p:  dist(x_i^{k+1}, prox set_i) <= t_k |x_i^{k+1} - x_i^k|
//
// Every per-coordinate control is checked when the step is taken and
// recorded in the trace.

#include <lpreg/error.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/prox.hpp>
#include <lpreg/types.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lpreg {

enum class Algorithm { pga, ipga1p, ipga2p };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pga: return "pga";
    case Algorithm::ipga1p: return "ipga1p";
    case Algorithm::ipga2p: return "ipga2p";
  }
  return "pga";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "pga") return Algorithm::pga;
  if (s == "ipga1p") return Algorithm::ipga1p;
  if (s == "ipga2p") return Algorithm::ipga2p;
  throw ValidationError("algo", "unknown algorithm '" + std::string(s) +
                                    "' (expected pga, ipga1p or ipga2p)");
}

/// Nonnegative sequence indexed from k = 0: either c * rho^k or an explicit
/// list (the last entry repeats past its end).
class Schedule {
 public:
  Schedule() = default;

  static Schedule geometric(double c, double rho) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("schedule", "c must be >= 0");
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("schedule", "rho must lie in [0,1)");
    Schedule s;
    s.c_ = c;
    s.rho_ = rho;
    return s;
  }

  // Constant sequence; not summable unless c = 0.
  static Schedule constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("schedule", "c must be >= 0");
    return explicit_list({c});
  }

  static Schedule explicit_list(std::vector<double> values) {
    if (values.empty()) throw ValidationError("schedule", "explicit list must not be empty");
    for (double x : values) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ValidationError("schedule", "entries must be finite and nonnegative");
      }
    }
    Schedule s;
    s.list_ = std::move(values);
    return s;
  }

  static Schedule zero() { return geometric(0.0, 0.0); }

  double at(std::size_t k) const {
    if (!list_.empty()) return list_[std::min(k, list_.size() - 1)];
    if (c_ == 0.0) return 0.0;
    return c_ * std::pow(rho_, static_cast<double>(k));
  }

  bool is_geometric() const noexcept { return list_.empty(); }
  bool is_zero() const noexcept {
    if (is_geometric()) return c_ == 0.0;
    for (double x : list_) if (x != 0.0) return false;
    return true;
  }
  double c() const noexcept { return c_; }
  double rho() const noexcept { return rho_; }
  const std::vector<double>& values() const noexcept { return list_; }

  double supremum() const {
    if (is_geometric()) return c_;
    double m = 0.0;
    for (double x : list_) m = std::max(m, x);
    return m;
  }

 private:
  double c_ = 0.0;
  double rho_ = 0.0;
  std::vector<double> list_;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::pga;
  // Stepsizes v_k: empty means the automatic constant 0.495 / ||A||^2_safe;
  // a single entry is a constant stepsize; more entries give v_k per
  // iteration with the last one repeating.
  std::vector<double> stepsizes;
  // tau_k for ipga1p, t_k for ipga2p; ignored by pga.
  Schedule inexact = Schedule::zero();
  std::size_t max_iters = 100000;
  double stop_tol = 1e-10;
  double knob = kDefaultKnob;
  // Recorded for provenance; the iterations themselves are deterministic.
  std::uint64_t seed = 0;
  std::optional<bool> store_iterates;  // default: on when n <= 1e4
  int threads = 1;
};

/// Validated stepsize sequence with bounds 0 < v_min <= v_k <= v_max < 1/(2||A||^2).
struct StepsizePlan {
  std::vector<double> values;
  double v_min = 0.0;
  double v_max = 0.0;
  double norm_sq = 0.0;       // ||A||^2 as computed
  double norm_sq_safe = 0.0;  // with the power-iteration tolerance added

  double at(std::size_t k) const { return values[std::min(k, values.size() - 1)]; }
  double upper_limit() const { return 0.5 / norm_sq_safe; }
};

inline double default_stepsize(double norm_sq_safe) {
  if (norm_sq_safe <= 0.0) return 1.0;
  return 0.495 / norm_sq_safe;
}

inline StepsizePlan plan_stepsizes(const Problem& prob, const std::vector<double>& stepsizes) {
  StepsizePlan plan;
  plan.norm_sq = spectral_norm_sq(prob.A);
  plan.norm_sq_safe = spectral_norm_sq_safe(prob.A);
  plan.values = stepsizes.empty() ? std::vector<double>{default_stepsize(plan.norm_sq_safe)}
                                  : stepsizes;
  plan.v_min = std::numeric_limits<double>::infinity();
  plan.v_max = 0.0;
  for (double v : plan.values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("v", "stepsizes must be finite and positive");
    }
    if (v * 2.0 * plan.norm_sq_safe >= 1.0) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "stepsize " << v << " violates v < 1/2 ||A||^-2 = " << plan.upper_limit()
          << " (||A||^2 = " << plan.norm_sq << ")";
      throw ValidationError("v", msg.str());
    }
    plan.v_min = std::min(plan.v_min, v);
    plan.v_max = std::max(plan.v_max, v);
  }
  return plan;
}

struct ResidualOnSupport {
  double residual = 0.0;
  SupportSet support;
};

/// Norm of the gradient of the objective restricted to I = supp(x):
///
///   || (2 A^T (Ax - b))_I + (lambda_i p |x_i|^(p-1) sign(x_i))_{i in I} ||.
///
/// This is the minimal-norm element of the limiting subdifferential of F at x:
/// off the support the subdifferential of |.|^p at 0 is all of R, so those
/// coordinates contribute nothing.
inline ResidualOnSupport residual_on_support(const Problem& prob,
                                             const Eigen::Ref<const Vector>& x) {
  detail::check_length(prob, x);
  ResidualOnSupport out;
  out.support = support_of(x);
  if (out.support.empty()) return out;
  const Vector grad = gradient_smooth(prob, x);
  detail::CompensatedSum acc;
  for (Index i : out.support.indices) {
    const double w = grad[i] + prob.weight(i) * prob.p * std::pow(std::abs(x[i]), prob.p - 1.0) *
                                   detail::sign(x[i]);
    acc.add(w * w);
  }
  out.residual = std::sqrt(acc.value());
  return out;
}

/// Per-iteration record describing the iterate x^k.
struct IterationRecord {
  std::size_t k = 0;
  double objective = 0.0;   // F(x^k)
  double step_norm = 0.0;   // ||x^k - x^{k-1}|| (0 at k = 0)
  double residual = 0.0;    // residual_on_support(x^k)
  std::size_t support_size = 0;
  // Certified inexactness of the step that produced x^k: total value gap
  // sum_i (g_i(x_i^k) - min g_i) for ipga1p, distance to the exact prox
  // point for ipga2p, 0 for pga and at k = 0.
  double eps = 0.0;
};

/// Per-coordinate certificate of one inexact step.
struct StepCertificate {
  Vector achieved;  // value gap (ipga1p) or distance (ipga2p) per coordinate
  Vector allowed;   // tau_k (dx_i)^2 or t_k |dx_i|
  std::size_t violations = 0;
};

struct IterationTrace {
  Algorithm algorithm = Algorithm::pga;
  std::vector<IterationRecord> records;
  std::vector<Vector> iterates;           // empty unless stored
  std::vector<SupportSet> supports;       // one per record
  std::vector<StepCertificate> certificates;  // ipga only; entry k certifies x^{k+1}
  std::vector<double> stepsizes;          // v_k used for the step x^k -> x^{k+1}
  double v_min = 0.0;
  double v_max = 0.0;
  double norm_sq = 0.0;
  double norm_sq_safe = 0.0;
  bool converged = false;
  double final_step_norm = 0.0;  // the step that triggered the stop rule

  std::size_t size() const noexcept { return records.size(); }
  bool has_iterates() const noexcept { return !iterates.empty(); }
  const Vector& final_iterate() const { return iterates.back(); }

  std::size_t control_violations() const {
    std::size_t total = 0;
    for (const auto& c : certificates) total += c.violations;
    return total;
  }
};

namespace detail {

// Relative slack on the distance control for rounding in |y - x_i|.
inline constexpr double kDistanceSlack = 1e-12;

struct CoordinateStep {
  double y;
  double achieved;
  double allowed;
};

// ipga1p: propose a value-inexact point, then halve the perturbation until the
// achieved gap is within the budget implied by the proposal itself.
inline CoordinateStep ipga1_coordinate(const ProxQuery& q, double xi, double tau, double knob) {
  const ProxResult exact = prox_scalar(q);
  const double ystar = exact.selected();
  const double d = ystar - xi;
  if (tau == 0.0 || d == 0.0) return {ystar, 0.0, tau * d * d};

  const InexactProx first = inexact_value_from(q, exact, tau * d * d, knob);
  double y = first.y;
  double gap = first.achieved;
  for (int shrink = 0; shrink <= 200; ++shrink) {
    const double allowed = tau * (y - xi) * (y - xi);
    if (gap <= allowed) return {y, gap, allowed};
    y = ystar + 0.5 * (y - ystar);
    gap = value_gap(q, exact, y);
  }
  return {ystar, 0.0, tau * d * d};
}

// ipga2p: closed-form feasible perturbation of the exact point toward z.
inline CoordinateStep ipga2_coordinate(const ProxQuery& q, double xi, double t, double knob) {
  const ProxResult exact = prox_scalar(q);
  const double ystar = exact.selected();
  const double d = ystar - xi;
  if (t == 0.0 || d == 0.0) return {ystar, 0.0, 0.0};

  double dir = sign(q.z - ystar);
  if (dir == 0.0) dir = sign(d);
  // Moving away from x_i: |s| <= t|d|/(1-t); toward it: |s| <= t|d|/(1+t).
  const double bound = (dir == sign(d)) ? t * std::abs(d) / (1.0 - t) : t * std::abs(d) / (1.0 + t);
  // Halve the perturbation while rounding in y* + s breaks the control;
  // y* itself always satisfies it.
  double s = knob * bound;
  for (int shrink = 0; shrink <= 60 && s > 0.0; ++shrink, s *= 0.5) {
    const double y = ystar + dir * s;
    if (ystar != 0.0 && sign(y) != sign(ystar)) continue;
    const double dist = exact.distance(y);
    const double allowed = t * std::abs(y - xi);
    if (dist <= allowed) return {y, dist, allowed};
  }
  return {ystar, 0.0, t * std::abs(d)};
}

}  // namespace detail

/// Runs the algorithm selected in `config` from x0 (zero vector when empty).
///
/// The trace holds x^0, ..., x^K where ||x^{K+1} - x^K|| <= stop_tol
/// (converged; x^{K+1} is not appended) or K = max_iters.
inline IterationTrace run_solver(const Problem& prob, const SolverConfig& config,
                                 const Vector& x0 = Vector()) {
  prob.validate();
  const Index n = prob.cols();
  Vector x = (x0.size() == 0) ? Vector::Zero(n) : x0;
  detail::check_length(prob, x);
  if (!x.allFinite()) throw ValidationError("x0", "entries must be finite");
  if (!(config.stop_tol >= 0.0)) throw ValidationError("tol", "must be nonnegative");
  if (!(config.knob >= 0.0 && config.knob <= 1.0)) throw ValidationError("knob", "must lie in [0,1]");
  if (config.algorithm == Algorithm::ipga2p && config.inexact.supremum() >= 1.0) {
    throw ValidationError("t", "ipga2p requires t_k < 1 for every k");
  }

  const StepsizePlan plan = plan_stepsizes(prob, config.stepsizes);
  const bool store = config.store_iterates.value_or(n <= 10000);

  IterationTrace trace;
  trace.algorithm = config.algorithm;
  trace.v_min = plan.v_min;
  trace.v_max = plan.v_max;
  trace.norm_sq = plan.norm_sq;
  trace.norm_sq_safe = plan.norm_sq_safe;

  auto record = [&](std::size_t k, double step, double eps) {
    const auto res = residual_on_support(prob, x);
    trace.records.push_back({k, objective(prob, x), step, res.residual, res.support.size(), eps});
    trace.supports.push_back(res.support);
    if (store) trace.iterates.push_back(x);
  };
  record(0, 0.0, 0.0);

  Vector next(n);
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    const double v = plan.at(k);
    const Vector z = x - 2.0 * v * (prob.A.transpose() * (prob.A * x - prob.b));

    double eps = 0.0;
    if (config.algorithm == Algorithm::pga) {
      next = prox_vector(z, v, prob, config.threads);
    } else {
      const double level = config.inexact.at(k);
      StepCertificate cert;
      cert.achieved.resize(n);
      cert.allowed.resize(n);
      detail::CompensatedSum total;
      for (Index i = 0; i < n; ++i) {
        const ProxQuery q{z[i], v, prob.weight(i), prob.p};
        const auto step = (config.algorithm == Algorithm::ipga1p)
                              ? detail::ipga1_coordinate(q, x[i], level, config.knob)
                              : detail::ipga2_coordinate(q, x[i], level, config.knob);
        next[i] = step.y;
        cert.achieved[i] = step.achieved;
        cert.allowed[i] = step.allowed;
        const bool ok = (config.algorithm == Algorithm::ipga1p)
                            ? step.achieved <= step.allowed
                            : step.achieved <= step.allowed * (1.0 + detail::kDistanceSlack);
        if (!ok) ++cert.violations;
        total.add(config.algorithm == Algorithm::ipga1p ? step.achieved
                                                        : step.achieved * step.achieved);
      }
      eps = (config.algorithm == Algorithm::ipga1p) ? total.value() : std::sqrt(total.value());
      trace.certificates.push_back(std::move(cert));
    }

    const double step = (next - x).norm();
    if (step <= config.stop_tol) {
      trace.converged = true;
      trace.final_step_norm = step;
      if (!trace.certificates.empty()) trace.certificates.pop_back();
      break;
    }
    trace.stepsizes.push_back(v);
    x.swap(next);
    record(k + 1, step, eps);
  }
  if (!trace.converged && !trace.records.empty()) {
    trace.final_step_norm = trace.records.back().step_norm;
  }
  return trace;
}

inline IterationTrace run_pga(const Problem& prob, SolverConfig config, const Vector& x0 = Vector()) {
  config.algorithm = Algorithm::pga;
  return run_solver(prob, config, x0);
}

inline IterationTrace run_ipga_1p(const Problem& prob, SolverConfig config,
                                  const Vector& x0 = Vector()) {
  config.algorithm = Algorithm::ipga1p;
  return run_solver(prob, config, x0);
}

inline IterationTrace run_ipga_2p(const Problem& prob, SolverConfig config,
                                  const Vector& x0 = Vector()) {
  config.algorithm = Algorithm::ipga2p;
  return run_solver(prob, config, x0);
}

/// Whole-vector controls implied by the per-coordinate certificates:
/// value type  sum_i gap_i <= tau_k ||x^{k+1} - x^k||^2, and
/// distance type  ||x^{k+1} - y^k|| <= t_k ||x^{k+1} - x^k||.
struct AggregateCertificate {
  std::vector<double> achieved;
  std::vector<double> allowed;
  std::size_t violations = 0;
};

inline AggregateCertificate aggregate_certificates(const IterationTrace& trace) {
  AggregateCertificate out;
  for (const auto& c : trace.certificates) {
    double achieved = 0.0;
    double allowed = 0.0;
    if (trace.algorithm == Algorithm::ipga1p) {
      achieved = c.achieved.sum();
      allowed = c.allowed.sum();
    } else {
      achieved = c.achieved.norm();
      allowed = c.allowed.norm();
    }
    out.achieved.push_back(achieved);
    out.allowed.push_back(allowed);
    const double slack = (trace.algorithm == Algorithm::ipga1p) ? 1e-15 * allowed
                                                                : detail::kDistanceSlack * allowed;
    if (achieved > allowed + slack) ++out.violations;
  }
  return out;
}

/// Non-parallel IPGA-I: runs the parallel variant and reports the aggregated
/// value-type control alongside the trace.
inline std::pair<IterationTrace, AggregateCertificate> run_ipga_1(const Problem& prob,
                                                                  const SolverConfig& config,
                                                                  const Vector& x0 = Vector()) {
  IterationTrace trace = run_ipga_1p(prob, config, x0);
  AggregateCertificate agg = aggregate_certificates(trace);
  return {std::move(trace), std::move(agg)};
}

/// Non-parallel IPGA-II counterpart of run_ipga_1().
inline std::pair<IterationTrace, AggregateCertificate> run_ipga_2(const Problem& prob,
                                                                  const SolverConfig& config,
                                                                  const Vector& x0 = Vector()) {
  IterationTrace trace = run_ipga_2p(prob, config, x0);
  AggregateCertificate agg = aggregate_certificates(trace);
  return {std::move(trace), std::move(agg)};
}

}  // namespace lpreg

#pragma once

// Proximal operator of t -> lambda |t|^p, 0 < p < 1.
//
// For a scalar query (z, v, lambda, p) the prox minimizes
//
//   g(t) = lambda |t|^p + (t - z)^2 / (2v).
//
// g is odd-symmetric in (t, z), so take z > 0. Any minimizer t > 0 is a root
// of the stationarity equation
//
//   phi(t) := t + v lambda p t^(p-1) = z
//
// with g''(t) >= 0, i.e. t >= t_lb := (v lambda p (1-p))^(1/(2-p)). phi is
// convex on (0, inf) with its minimum at t_lb, hence increasing on
// [t_lb, inf); and phi(z) > z. So either phi(t_lb) > z and no positive
// minimizer exists, or there is exactly one admissible root in [t_lb, z].
// The global minimizer is whichever of 0 and that root has the smaller g.

#include <lpreg/error.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/types.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace lpreg {

// Fraction of an inexactness budget the inexact prox variants consume.
inline constexpr double kDefaultKnob = 0.9;

struct ProxQuery {
  double z = 0.0;
  double v = 1.0;
  double lambda = 1.0;
  double p = 0.5;

  void validate() const {
    if (!std::isfinite(z)) throw ValidationError("z", "must be finite");
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("v", "must be a finite positive number");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ValidationError("lambda", "must be a finite positive number");
    }
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("p", "must lie in the open interval (0,1)");
  }
};

struct ProxResult {
  // At a tie the set is {0, y} in that order; otherwise one entry.
  std::array<double, 2> minimizers{0.0, 0.0};
  std::size_t count = 1;
  double value = 0.0;
  bool tie = false;

  // The element the algorithms use: the unique minimizer, or 0 at a tie.
  double selected() const noexcept { return minimizers[0]; }

  std::span<const double> all() const noexcept { return {minimizers.data(), count}; }

  // Distance from y to the nearest minimizer.
  double distance(double y) const noexcept {
    double d = std::abs(y - minimizers[0]);
    if (count > 1) d = std::min(d, std::abs(y - minimizers[1]));
    return d;
  }
};

/// Every nonzero prox output has magnitude at least (v lambda p (1-p))^(1/(2-p)).
inline double prox_nonzero_lower_bound(double v, double lambda, double p) {
  return std::pow(v * lambda * p * (1.0 - p), 1.0 / (2.0 - p));
}

/// The prox subproblem objective g(t).
inline double prox_objective(const ProxQuery& q, double t) {
  const double d = t - q.z;
  const double reg = (t == 0.0) ? 0.0 : q.lambda * std::pow(std::abs(t), q.p);
  return reg + d * d / (2.0 * q.v);
}

namespace detail {

inline constexpr int kProxMaxIters = 80;

inline bool prox_tie(double g0, double gt) {
  return std::abs(g0 - gt) <= 1e-12 * (1.0 + std::abs(g0));
}

// Choose between the candidates 0 and `root` (same sign as z).
inline ProxResult prox_select(double g0, double root, double groot) {
  ProxResult r;
  if (prox_tie(g0, groot)) {
    r.minimizers = {0.0, root};
    r.count = 2;
    r.tie = true;
    r.value = std::min(g0, groot);
  } else if (groot < g0) {
    r.minimizers = {root, 0.0};
    r.value = groot;
  } else {
    r.minimizers = {0.0, 0.0};
    r.value = g0;
  }
  return r;
}

// Admissible root of t + c t^(p-1) = a on [t_lb, a] (a > 0), by Newton's
// method safeguarded with bisection. Newton is started from the right end
// where h is convex and increasing.
inline double stationary_root(double a, double c, double p, double t_lb, double v) {
  const double tol = 1e-13 * (1.0 + 1.0 / v);
  double lo = t_lb;
  double hi = a;
  double t = a;
  auto h = [&](double s) { return s + c * std::pow(s, p - 1.0) - a; };
  double ht = h(t);
  // One more Newton step once the residual is within tolerance.
  auto polish = [&](double s, double hs) {
    const double dh = 1.0 - c * (1.0 - p) * std::pow(s, p - 2.0);
    if (!(dh > 0.0)) return s;
    const double next = s - hs / dh;
    return (next >= lo && next <= hi && std::abs(h(next)) <= std::abs(hs)) ? next : s;
  };
  for (int it = 0; it < kProxMaxIters; ++it) {
    if (std::abs(ht) / v <= tol) return polish(t, ht);
    if (ht > 0.0) hi = t; else lo = t;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) return t;

    const double dh = 1.0 - c * (1.0 - p) * std::pow(t, p - 2.0);
    double next = (dh > 0.0) ? t - ht / dh : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double hn = h(next);
    // Bisect as well when Newton stalls (near-double roots at t_lb).
    if (std::abs(hn) > 0.5 * std::abs(ht)) {
      if (hn > 0.0) hi = next; else lo = next;
      const double mid = 0.5 * (lo + hi);
      t = mid;
      ht = h(mid);
    } else {
      t = next;
      ht = hn;
    }
  }
  if (std::abs(ht) / v <= tol || hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) {
    return t;
  }
  throw ConvergenceError("prox root finder did not converge for z=" + std::to_string(a) +
                         " within " + std::to_string(kProxMaxIters) + " iterations");
}

}  // namespace detail

/// Exact scalar prox, set-valued at the thresholding tie.
inline ProxResult prox_scalar(const ProxQuery& q) {
  q.validate();
  if (q.z == 0.0) return ProxResult{};

  const double a = std::abs(q.z);
  const double s = detail::sign(q.z);
  const double c = q.v * q.lambda * q.p;
  const double t_lb = prox_nonzero_lower_bound(q.v, q.lambda, q.p);
  const double g0 = a * a / (2.0 * q.v);

  if (t_lb >= a || t_lb + c * std::pow(t_lb, q.p - 1.0) > a) {
    ProxResult r;
    r.value = g0;
    return r;
  }
  const double t = detail::stationary_root(a, c, q.p, t_lb, q.v);
  const double d = t - a;
  const double gt = q.lambda * std::pow(t, q.p) + d * d / (2.0 * q.v);
  return detail::prox_select(g0, s * t, gt);
}

/// Closed-form prox for p = 1/2 (half thresholding).
///
/// With mu = 2 v lambda the nonzero branch is
///   t = (2/3) z (1 + cos(2 pi/3 - (2/3) arccos((mu/8) (|z|/3)^(-3/2)))),
/// selected when |z| exceeds the threshold (54^(1/3)/4) mu^(2/3).
inline ProxResult prox_scalar_half(double z, double v, double lambda) {
  const ProxQuery q{z, v, lambda, 0.5};
  q.validate();
  if (z == 0.0) return ProxResult{};

  const double a = std::abs(z);
  const double mu = 2.0 * v * lambda;
  const double g0 = a * a / (2.0 * v);
  const double reach = 3.0 * std::pow(mu / 8.0, 2.0 / 3.0);  // smallest |z| with a root
  if (a < reach) {
    ProxResult r;
    r.value = g0;
    return r;
  }
  const double threshold = std::cbrt(54.0) / 4.0 * std::pow(mu, 2.0 / 3.0);
  const double arg = std::min(1.0, (mu / 8.0) * std::pow(a / 3.0, -1.5));
  const double angle = std::acos(arg);
  const double t =
      (2.0 / 3.0) * a * (1.0 + std::cos(2.0 * std::numbers::pi / 3.0 - (2.0 / 3.0) * angle));
  const double d = t - a;
  const double gt = lambda * std::sqrt(t) + d * d / (2.0 * v);

  ProxResult r;
  if (detail::prox_tie(g0, gt)) {
    r = detail::prox_select(g0, detail::sign(z) * t, gt);
  } else if (a > threshold) {
    r.minimizers = {detail::sign(z) * t, 0.0};
    r.value = gt;
  } else {
    r.value = g0;
  }
  return r;
}

/// Coordinate-wise exact prox of x with stepsize v and the problem's
/// per-coordinate weights. Ties resolve to 0.
///
/// With threads > 1 the coordinates are split into contiguous slices; each
/// output slot is written by exactly one worker, so the result does not
/// depend on the thread count.
inline Vector prox_vector(const Eigen::Ref<const Vector>& x, double v, const Problem& prob,
                          int threads = 1) {
  detail::check_length(prob, x);
  const Index n = x.size();
  Vector out(n);
  auto work = [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      out[i] = prox_scalar({x[i], v, prob.weight(i), prob.p}).selected();
    }
  };
  if (threads <= 1 || n < 2 * threads) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  const Index chunk = (n + threads - 1) / threads;
  for (Index begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(work, begin, std::min(n, begin + chunk));
  }
  for (auto& t : pool) t.join();
  return out;
}

// An inexact prox output with its certified error.
struct InexactProx {
  double y = 0.0;
  double achieved = 0.0;  // value gap g(y) - min g, or distance to the prox set
};

namespace detail {

inline void check_budget(double budget, double knob) {
  if (!(budget >= 0.0) || std::isnan(budget)) {
    throw ValidationError("budget", "must be a nonnegative number");
  }
  if (!(knob >= 0.0 && knob <= 1.0)) throw ValidationError("knob", "must lie in [0,1]");
}

// (|1+u|^p - 1 - p u), by its binomial series when |u| is small.
inline double binomial_remainder(double u, double p) {
  if (std::abs(u) > 1e-2) return std::pow(std::abs(1.0 + u), p) - 1.0 - p * u;
  double coef = p * (p - 1.0) / 2.0;
  double term = u * u;
  double sum = 0.0;
  for (int k = 2; k < 14; ++k) {
    sum += coef * term;
    coef *= (p - k) / (k + 1.0);
    term *= u;
  }
  return sum;
}

// g(y) - g(y*) around the selected minimizer, without the cancellation of
// subtracting two nearly equal values of g. With s = y - y*, u = s / y*:
//   g(y) - g(y*) = lambda |y*|^p (|1+u|^p - 1 - p u) + s g'(y*) + s^2 / (2v).
// Around y* = 0 it is lambda |y|^p + y (y - 2z) / (2v).
inline double value_gap(const ProxQuery& q, const ProxResult& exact, double y) {
  const double ystar = exact.selected();
  if (ystar == 0.0) {
    const double reg = (y == 0.0) ? 0.0 : q.lambda * std::pow(std::abs(y), q.p);
    return std::max(0.0, reg + y * (y - 2.0 * q.z) / (2.0 * q.v));
  }
  const double s = y - ystar;
  const double a = std::abs(ystar);
  const double dg = q.lambda * q.p * std::pow(a, q.p - 1.0) * sign(ystar) + (ystar - q.z) / q.v;
  const double gap = q.lambda * std::pow(a, q.p) * binomial_remainder(s / ystar, q.p) + s * dg +
                     s * s / (2.0 * q.v);
  return std::max(0.0, gap);
}

// Value-inexact prox given the exact result. The perturbation moves from the
// selected minimizer toward z (at most 1 past it) and is located by
// bisection keeping the invariant gap(lo) <= knob * budget.
inline InexactProx inexact_value_from(const ProxQuery& q, const ProxResult& exact,
                                      double budget, double knob) {
  const double ystar = exact.selected();
  if (budget == 0.0 || knob == 0.0) return {ystar, 0.0};
  const double target = knob * budget;
  double dir = sign(q.z - ystar);
  if (dir == 0.0) dir = 1.0;
  const double s_max = std::abs(q.z - ystar) + 1.0;

  auto gap_at = [&](double s) { return value_gap(q, exact, ystar + dir * s); };
  if (gap_at(s_max) <= target) return {ystar + dir * s_max, gap_at(s_max)};

  double lo = 0.0;
  double hi = s_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (gap_at(mid) <= target) lo = mid; else hi = mid;
  }
  const double y = ystar + dir * lo;
  return {y, gap_at(lo)};
}

}  // namespace detail

/// A point whose prox objective is within `budget` of the minimum.
///
/// knob = 0 returns the exact minimizer; knob = 1 returns the point (on the
/// segment from the minimizer toward z) whose gap is as close to the budget
/// as bisection can resolve. The reported gap is recomputed against the
/// certified minimum and never exceeds the budget.
inline InexactProx prox_inexact_value(const ProxQuery& q, double budget,
                                      double knob = kDefaultKnob) {
  detail::check_budget(budget, knob);
  return detail::inexact_value_from(q, prox_scalar(q), budget, knob);
}

/// A point within `budget` of the prox set: y = y* + knob * budget * sign(z - y*).
inline InexactProx prox_inexact_dist(const ProxQuery& q, double budget,
                                     double knob = kDefaultKnob) {
  detail::check_budget(budget, knob);
  const ProxResult exact = prox_scalar(q);
  const double ystar = exact.selected();
  double y = ystar + knob * budget * detail::sign(q.z - ystar);
  if (ystar != 0.0 && detail::sign(y) != detail::sign(ystar)) y = ystar;
  return {y, exact.distance(y)};
}

}  // namespace lpreg

#pragma once

// Local optimality for F(x) = ||Ax - b||^2 + sum_i lambda_i |x_i|^p.
//
// For x != 0 with support I, write f for F restricted to the coordinates in
// I (F(x) = f(x_I) on that orthant). Three conditions are equivalent:
//
//   (i)   x is a local minimum of F;
//   (ii)  grad f(x_I) = 0 and
//         M = 2 A_I^T A_I + diag(lambda_i p (p-1) |x_i|^(p-2)) is positive definite;
//   (iii) F(u) >= F(x) + eps ||u - x||^2 on some ball around x.
//
// x = 0 is always a local minimum (the penalty grows like |t|^p), and (ii)
// does not apply to it; it is reported as its own class.

#include <lpreg/error.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/solvers.hpp>
#include <lpreg/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lpreg {

enum class PointClass { not_critical, critical_indefinite, critical_second_order, zero_point };

inline std::string_view to_string(PointClass c) {
  switch (c) {
    case PointClass::not_critical: return "not-critical";
    case PointClass::critical_indefinite: return "critical-indefinite";
    case PointClass::critical_second_order: return "critical-second-order";
    case PointClass::zero_point: return "zero-point";
  }
  return "not-critical";
}

struct GrowthProbe {
  double delta = 0.0;
  std::size_t samples = 0;
  // min over samples of (F(u) - F(x)) / ||u - x||^2, over samples whose
  // difference is resolvable above rounding.
  double eps_hat = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;  // samples with F(u) < F(x) beyond rounding
  std::size_t unresolved = 0;  // samples with |F(u) - F(x)| within rounding
};

struct OptimalityReport {
  SupportSet support;
  double first_order_residual = 0.0;
  // Smallest eigenvalue of M (NaN at the zero point).
  double second_order_min_eig = std::numeric_limits<double>::quiet_NaN();
  double eigen_residual = 0.0;  // ||M q - mu q|| for the reported pair
  double matrix_norm = 0.0;     // spectral norm of M
  PointClass classification = PointClass::zero_point;
  std::optional<GrowthProbe> growth;
};

/// M = 2 A_I^T A_I + diag(lambda_i p (p-1) |x_i|^(p-2)) on I = supp(x).
inline Matrix second_order_matrix(const Problem& prob, const Eigen::Ref<const Vector>& x,
                                  const SupportSet& support) {
  const Index s = static_cast<Index>(support.size());
  Matrix AI(prob.rows(), s);
  for (Index j = 0; j < s; ++j) AI.col(j) = prob.A.col(support.indices[static_cast<std::size_t>(j)]);
  Matrix M = 2.0 * AI.transpose() * AI;
  for (Index j = 0; j < s; ++j) {
    const Index i = support.indices[static_cast<std::size_t>(j)];
    M(j, j) += prob.weight(i) * prob.p * (prob.p - 1.0) * std::pow(std::abs(x[i]), prob.p - 2.0);
  }
  return M;
}

/// First-order residual on the support and the smallest eigenvalue of M
/// (self-adjoint tridiagonal QR), classified with the given tolerances.
inline OptimalityReport classify_point(const Problem& prob, const Eigen::Ref<const Vector>& x,
                                       double fo_tol = 1e-8, double so_tol = 1e-10) {
  prob.validate();
  if (!x.allFinite()) throw ValidationError("x", "entries must be finite");
  const auto res = residual_on_support(prob, x);
  OptimalityReport rep;
  rep.support = res.support;
  rep.first_order_residual = res.residual;
  if (rep.support.empty()) {
    rep.classification = PointClass::zero_point;
    return rep;
  }
  const Matrix M = second_order_matrix(prob, x, rep.support);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (eig.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
  const double mu = eig.eigenvalues()[0];
  const Vector q = eig.eigenvectors().col(0);
  rep.second_order_min_eig = mu;
  rep.eigen_residual = (M * q - mu * q).norm();
  rep.matrix_norm = eig.eigenvalues().cwiseAbs().maxCoeff();

  if (rep.first_order_residual > fo_tol) {
    rep.classification = PointClass::not_critical;
  } else if (mu > so_tol) {
    rep.classification = PointClass::critical_second_order;
  } else {
    rep.classification = PointClass::critical_indefinite;
  }
  return rep;
}

/// Default probe radius: half the smaller of min |x_i| over the support,
/// which keeps the ball inside the orthant of x, and
/// min (lambda_i / |g_i|)^(1/(1-p)) over zero coordinates with
/// g = grad ||Ax-b||^2 at x; inside that radius lambda_i |u_i|^p >= |g_i u_i|.
/// Returns 0.5 when neither bound applies.
inline double default_probe_radius(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  detail::check_length(prob, x);
  const Vector g = gradient_smooth(prob, x);
  double r = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      r = std::min(r, std::abs(x[i]));
    } else if (g[i] != 0.0) {
      r = std::min(r, std::pow(prob.weight(i) / std::abs(g[i]), 1.0 / (1.0 - prob.p)));
    }
  }
  return std::isfinite(r) ? 0.5 * r : 0.5;
}

/// Samples u uniformly in the ball B(x, delta) and reports the empirical
/// growth constant and the number of samples that decrease F.
///
/// A differences within 64 ulps of (1 + |F(x)|) cannot be resolved and is
/// counted as `unresolved` rather than as a violation. Uniform sampling
/// misses a descent cone of solid-angle fraction q with probability
/// (1-q)^samples.
inline GrowthProbe growth_probe(const Problem& prob, const Eigen::Ref<const Vector>& x,
                                double delta, std::size_t samples, std::uint64_t seed) {
  detail::check_length(prob, x);
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("delta", "must be positive");
  const Index n = x.size();
  const double F0 = objective(prob, x);
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(F0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  GrowthProbe out;
  out.delta = delta;
  out.samples = samples;
  Vector dir(n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (Index i = 0; i < n; ++i) dir[i] = normal(rng);
    const double dn = dir.norm();
    if (dn == 0.0) continue;
    const double r = delta * std::pow(unif(rng), 1.0 / static_cast<double>(n));
    if (r == 0.0) continue;
    const Vector u = x + (r / dn) * dir;
    const double diff = objective(prob, u) - F0;
    if (std::abs(diff) <= roundoff) {
      ++out.unresolved;
      continue;
    }
    if (diff < 0.0) ++out.violations;
    out.eps_hat = std::min(out.eps_hat, diff / (r * r));
  }
  return out;
}

namespace detail {

// Columns of A restricted to a support.
inline Matrix columns(const Matrix& A, const std::vector<Index>& idx) {
  Matrix out(A.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = A.col(idx[j]);
  return out;
}

// Magnitude below which a coordinate of a local minimum cannot lie:
// M_ii > 0 needs 2 ||A_i||^2 > lambda_i p (1-p) |x_i|^(p-2).
inline double local_min_magnitude_bound(const Problem& prob, Index i) {
  const double col = prob.A.col(i).squaredNorm();
  if (col == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(prob.weight(i) * prob.p * (1.0 - prob.p) / (2.0 * col), 1.0 / (2.0 - prob.p));
}

enum class NewtonOutcome { converged, left_orthant, exhausted };

struct RestrictedNewton {
  NewtonOutcome outcome = NewtonOutcome::exhausted;
  Vector y;
  int iterations = 0;
};

// Damped Newton minimization of f(y) = ||A_I y - b||^2 + sum lambda_i |y_i|^p
// over the open orthant containing `start`. Non-convex steps use an
// eigenvalue shift; steps are cut to stay inside the orthant and then
// backtracked to an Armijo decrease.
inline RestrictedNewton restricted_newton(const Problem& prob, const std::vector<Index>& idx,
                                          Vector y, int max_iters = 200) {
  const Index s = y.size();
  const Matrix AI = columns(prob.A, idx);
  const Matrix G = 2.0 * AI.transpose() * AI;
  const Vector Atb = 2.0 * AI.transpose() * prob.b;
  Vector lam(s), lb(s), sig(s);
  for (Index j = 0; j < s; ++j) {
    const Index i = idx[static_cast<std::size_t>(j)];
    lam[j] = prob.weight(i);
    lb[j] = local_min_magnitude_bound(prob, i);
    sig[j] = sign(y[j]);
  }
  const double p = prob.p;
  auto f = [&](const Vector& u) {
    CompensatedSum acc;
    const Vector r = AI * u - prob.b;
    for (Index i = 0; i < r.size(); ++i) acc.add(r[i] * r[i]);
    for (Index j = 0; j < s; ++j) acc.add(lam[j] * std::pow(std::abs(u[j]), p));
    return acc.value();
  };
  const double gscale = 1.0 + Atb.norm();

  RestrictedNewton out;
  double fy = f(y);
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it;
    Vector grad = G * y - Atb;
    Matrix H = G;
    for (Index j = 0; j < s; ++j) {
      const double a = std::abs(y[j]);
      grad[j] += lam[j] * p * std::pow(a, p - 1.0) * sig[j];
      H(j, j) += lam[j] * p * (p - 1.0) * std::pow(a, p - 2.0);
    }
    Eigen::LLT<Matrix> llt(H);
    const bool convex = llt.info() == Eigen::Success;
    if (convex && grad.norm() <= 1e-12 * gscale) {
      out.outcome = NewtonOutcome::converged;
      out.y = y;
      return out;
    }
    Vector d;
    if (convex) {
      d = -llt.solve(grad);
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
      const double shift = -eig.eigenvalues()[0] + 1e-6 * (1.0 + eig.eigenvalues().cwiseAbs().maxCoeff());
      d = -(H + shift * Matrix::Identity(s, s)).ldlt().solve(grad);
    }
    double alpha = 1.0;
    for (Index j = 0; j < s; ++j) {
      if (d[j] * sig[j] < 0.0) alpha = std::min(alpha, 0.9 * std::abs(y[j]) / std::abs(d[j]));
    }
    const double slope = grad.dot(d);
    if (convex && alpha == 1.0 &&
        -slope <= 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fy))) {
      // Decrease below what f can resolve: take the pure Newton step.
      y += d;
      fy = f(y);
      continue;
    }
    Vector trial = y + alpha * d;
    double ft = f(trial);
    int backtracks = 0;
    while (ft > fy + 1e-4 * alpha * slope && backtracks < 60) {
      alpha *= 0.5;
      trial = y + alpha * d;
      ft = f(trial);
      ++backtracks;
    }
    if (ft > fy && backtracks >= 60) {
      // No decrease possible at working precision; accept if stationary.
      if (convex && grad.norm() <= 1e-9 * gscale) {
        out.outcome = NewtonOutcome::converged;
        out.y = y;
      } else {
        out.outcome = NewtonOutcome::exhausted;
        out.y = y;
      }
      return out;
    }
    y = trial;
    fy = ft;
    for (Index j = 0; j < s; ++j) {
      if (std::abs(y[j]) < 1e-3 * lb[j]) {
        out.outcome = NewtonOutcome::left_orthant;
        out.y = y;
        return out;
      }
    }
  }
  out.outcome = NewtonOutcome::exhausted;
  out.y = y;
  return out;
}

inline Vector scatter(Index n, const std::vector<Index>& idx, const Vector& y) {
  Vector x = Vector::Zero(n);
  for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] = y[static_cast<Index>(j)];
  return x;
}

inline bool full_column_rank(const Matrix& AI) {
  if (AI.cols() == 0) return true;
  if (AI.cols() > AI.rows()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(AI.transpose() * AI, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  return top > 0.0 && eig.eigenvalues()[0] > 1e-12 * top;
}

}  // namespace detail

struct LocalMinimum {
  Vector x;
  OptimalityReport report;
};

struct EnumerationOptions {
  std::size_t max_n = 12;
  int newton_iters = 200;
  double dedup_tol = 1e-8;
  double fo_tol = 1e-8;
  double so_tol = 1e-10;
  std::size_t probe_samples = 2000;
  std::uint64_t seed = 0;
};

struct Enumeration {
  std::vector<LocalMinimum> minima;  // zero point first when present
  std::size_t orthants = 0;
  std::size_t exhausted_starts = 0;
  bool complete = true;
  std::vector<std::string> warnings;
};

/// All local minima of F for small n.
///
/// For every support I with A_I of full column rank and every sign pattern
/// on I, damped Newton minimization of the restricted objective is started
/// from per-coordinate magnitudes {b_i, 2 b_i, c_i, 10 c_i}, where b_i is
/// the local-minimum magnitude bound and c_i = |A_i^T b| / ||A_i||^2.
/// Supports where A_I is rank deficient are skipped: M has a negative
/// direction there. Stationary points are deduplicated and kept when
/// classify_point reports a second-order critical point. The zero point is
/// included when growth_probe finds no decrease around it. Starts that run out of
/// Newton iterations mark the enumeration incomplete.
inline Enumeration enumerate_local_minima(const Problem& prob, const EnumerationOptions& opt = {}) {
  prob.validate();
  const Index n = prob.cols();
  if (static_cast<std::size_t>(n) > opt.max_n) {
    throw ValidationError("n", "enumeration supports n <= " + std::to_string(opt.max_n) +
                                   " (got " + std::to_string(n) + ")");
  }
  Enumeration out;

  const Vector zero = Vector::Zero(n);
  OptimalityReport zrep = classify_point(prob, zero, opt.fo_tol, opt.so_tol);
  zrep.growth = growth_probe(prob, zero, default_probe_radius(prob, zero), opt.probe_samples, opt.seed);
  if (zrep.growth->violations == 0) out.minima.push_back({zero, zrep});

  std::vector<double> seed_lb(static_cast<std::size_t>(n)), seed_ls(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    seed_lb[static_cast<std::size_t>(i)] = detail::local_min_magnitude_bound(prob, i);
    const double col = prob.A.col(i).squaredNorm();
    seed_ls[static_cast<std::size_t>(i)] = col > 0.0 ? std::abs(prob.A.col(i).dot(prob.b)) / col : 0.0;
  }

  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) idx.push_back(i);
    }
    const Index s = static_cast<Index>(idx.size());
    if (!detail::full_column_rank(detail::columns(prob.A, idx))) continue;

    for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << s); ++signs) {
      ++out.orthants;
      for (int start = 0; start < 4; ++start) {
        Vector y(s);
        bool usable = true;
        for (Index j = 0; j < s; ++j) {
          const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(j)]);
          double mag = 0.0;
          switch (start) {
            case 0: mag = seed_lb[i]; break;
            case 1: mag = 2.0 * seed_lb[i]; break;
            case 2: mag = seed_ls[i]; break;
            default: mag = 10.0 * seed_ls[i]; break;
          }
          if (!(mag > 0.0) || !std::isfinite(mag)) usable = false;
          y[j] = (signs & (std::uint64_t{1} << j)) ? -mag : mag;
        }
        if (!usable) continue;
        const auto run = detail::restricted_newton(prob, idx, y, opt.newton_iters);
        if (run.outcome == detail::NewtonOutcome::exhausted) {
          ++out.exhausted_starts;
          out.complete = false;
          continue;
        }
        if (run.outcome != detail::NewtonOutcome::converged) continue;
        const Vector x = detail::scatter(n, idx, run.y);
        bool duplicate = false;
        for (const auto& m : out.minima) {
          duplicate = duplicate || (m.x - x).lpNorm<Eigen::Infinity>() <= opt.dedup_tol * (1.0 + x.lpNorm<Eigen::Infinity>());
        }
        if (duplicate) continue;
        OptimalityReport rep = classify_point(prob, x, opt.fo_tol, opt.so_tol);
        if (rep.classification == PointClass::critical_second_order) {
          out.minima.push_back({x, std::move(rep)});
        }
      }
    }
  }
  if (!out.complete) {
    out.warnings.push_back("incomplete enumeration: " + std::to_string(out.exhausted_starts) +
                           " Newton starts exhausted their iteration budget");
  }
  return out;
}

enum class GlobalityStatus { verified, violated, unverified };

inline std::string_view to_string(GlobalityStatus s) {
  switch (s) {
    case GlobalityStatus::verified: return "global minimum verified";
    case GlobalityStatus::violated: return "not a global minimum";
    case GlobalityStatus::unverified: return "hypothesis unverified";
  }
  return "hypothesis unverified";
}

struct GlobalityCheck {
  GlobalityStatus status = GlobalityStatus::unverified;
  double F_x = 0.0;
  double F_min = std::numeric_limits<double>::quiet_NaN();  // NaN unless enumerated
  std::string note;
};

/// Whether x attains the global minimum of F. F is coercive, so its global
/// minimum is the smallest enumerated local minimum; that needs n <= max_n
/// and a complete enumeration, otherwise the status is unverified.
inline GlobalityCheck check_global_minimum(const Problem& prob, const Eigen::Ref<const Vector>& x,
                                           double rel_tol = 1e-9, const EnumerationOptions& opt = {}) {
  detail::check_length(prob, x);
  GlobalityCheck g;
  g.F_x = objective(prob, x);
  if (static_cast<std::size_t>(prob.cols()) > opt.max_n) {
    g.note = "n = " + std::to_string(prob.cols()) + " is above the enumeration limit " +
             std::to_string(opt.max_n);
    return g;
  }
  const Enumeration e = enumerate_local_minima(prob, opt);
  if (!e.complete || e.minima.empty()) {
    g.note = "local-minimum enumeration incomplete";
    return g;
  }
  g.F_min = std::numeric_limits<double>::infinity();
  for (const auto& m : e.minima) g.F_min = std::min(g.F_min, objective(prob, m.x));
  g.status = g.F_x <= g.F_min + rel_tol * (1.0 + std::abs(g.F_min)) ? GlobalityStatus::verified
                                                                    : GlobalityStatus::violated;
  g.note = std::to_string(e.minima.size()) + " local minima enumerated";
  return g;
}

/// Radius R such that every local minimum lies in [-R, R]^n.
///
/// On a support I where A_I has full column rank, the first-order condition
/// gives A_I^T A_I x_I = A_I^T b - (p/2) (lambda_i |x_i|^(p-1) sign x_i), and
/// |x_i| >= b_i (the local-minimum magnitude bound), so
/// ||x_I|| <= (||A_I^T b|| + (p/2) ||lambda_i b_i^(p-1)||) / sigma_min(A_I^T A_I).
inline double local_minima_radius(const Problem& prob) {
  const Index n = prob.cols();
  double R = 0.0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) idx.push_back(i);
    }
    const Matrix AI = detail::columns(prob.A, idx);
    if (!detail::full_column_rank(AI)) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(AI.transpose() * AI, Eigen::EigenvaluesOnly);
    double pen = 0.0;
    for (Index i : idx) {
      const double t = prob.weight(i) * std::pow(detail::local_min_magnitude_bound(prob, i), prob.p - 1.0);
      pen += t * t;
    }
    const double bound = ((AI.transpose() * prob.b).norm() + 0.5 * prob.p * std::sqrt(pen)) /
                         eig.eigenvalues()[0];
    R = std::max(R, bound);
  }
  return R > 0.0 ? R : 1.0;
}

struct EquivalenceOptions {
  std::size_t max_n = 3;
  // Grid nodes per axis (odd, so 0 is a node) for n = 1, 2, 3.
  std::size_t nodes_1d = 1'000'001;
  std::size_t nodes_2d = 2001;
  std::size_t nodes_3d = 201;
  int probe_halvings = 12;
  double match_tol = 1e-6;
};

struct GridMinimum {
  Vector grid_point;
  Vector refined;
  OptimalityReport report;
  bool matched = false;
};

struct EquivalenceReport {
  Enumeration enumeration;
  std::vector<GridMinimum> grid_minima;
  double box_radius = 0.0;
  std::size_t growth_failures = 0;   // (ii) holds but no clean growth probe
  std::size_t grid_failures = 0;     // grid minimum failing (ii) or unmatched
  std::vector<std::string> failures;
  bool agree() const noexcept { return growth_failures == 0 && grid_failures == 0; }
};

/// Empirical cross-check of the three characterizations on n <= 3.
///
/// (ii) => (iii): every enumerated minimum must pass growth_probe (with
/// `trials` samples) for some radius delta_0 / 2^h, h <= probe_halvings.
/// (iii) => (ii): every discrete local minimum of F on a uniform grid over
/// [-R, R]^n is refined on its grid support by damped Newton and must pass
/// classify_point and coincide with an enumerated minimum.
inline EquivalenceReport equivalence_harness(const Problem& prob, std::uint64_t seed,
                                             std::size_t trials,
                                             const EquivalenceOptions& opt = {}) {
  prob.validate();
  const Index n = prob.cols();
  if (n < 1 || static_cast<std::size_t>(n) > opt.max_n) {
    throw ValidationError("n", "equivalence harness supports n <= " + std::to_string(opt.max_n));
  }
  EquivalenceReport rep;
  EnumerationOptions eopt;
  eopt.seed = seed;
  eopt.probe_samples = trials;
  rep.enumeration = enumerate_local_minima(prob, eopt);
  if (!rep.enumeration.complete) {
    rep.failures.insert(rep.failures.end(), rep.enumeration.warnings.begin(),
                        rep.enumeration.warnings.end());
    ++rep.grid_failures;
  }

  for (auto& m : rep.enumeration.minima) {
    const double delta0 = default_probe_radius(prob, m.x);
    bool ok = false;
    for (int h = 0; h <= opt.probe_halvings && !ok; ++h) {
      GrowthProbe g = growth_probe(prob, m.x, std::ldexp(delta0, -h), trials, seed + static_cast<std::uint64_t>(h));
      ok = g.violations == 0 && g.eps_hat > 0.0;
      m.report.growth = g;
    }
    if (!ok) {
      ++rep.growth_failures;
      std::ostringstream msg;
      msg.precision(17);
      msg << "growth probe failed at x = [" << m.x.transpose() << "]";
      rep.failures.push_back(msg.str());
    }
  }

  // Grid scan.
  rep.box_radius = 1.05 * local_minima_radius(prob);
  const std::size_t nodes = (n == 1) ? opt.nodes_1d : (n == 2) ? opt.nodes_2d : opt.nodes_3d;
  const std::size_t half = nodes / 2;
  const double h = rep.box_radius / static_cast<double>(half);
  auto coord = [&](std::size_t j) {
    return (static_cast<double>(j) - static_cast<double>(half)) * h;
  };
  std::size_t total = 1;
  for (Index d = 0; d < n; ++d) total *= nodes;
  std::vector<double> F(total);
  Vector u(n);
  auto unpack = [&](std::size_t flat, std::vector<std::size_t>& j) {
    for (Index d = 0; d < n; ++d) {
      j[static_cast<std::size_t>(d)] = flat % nodes;
      flat /= nodes;
    }
  };
  std::vector<std::size_t> jj(static_cast<std::size_t>(n));
  for (std::size_t flat = 0; flat < total; ++flat) {
    unpack(flat, jj);
    for (Index d = 0; d < n; ++d) u[d] = coord(jj[static_cast<std::size_t>(d)]);
    F[flat] = objective(prob, u);
  }

  std::vector<std::size_t> stride(static_cast<std::size_t>(n));
  stride[0] = 1;
  for (Index d = 1; d < n; ++d) stride[static_cast<std::size_t>(d)] = stride[static_cast<std::size_t>(d - 1)] * nodes;
  std::size_t neighbours = 1;
  for (Index d = 0; d < n; ++d) neighbours *= 3;

  for (std::size_t flat = 0; flat < total; ++flat) {
    unpack(flat, jj);
    bool interior = true;
    for (std::size_t j : jj) interior = interior && j > 0 && j + 1 < nodes;
    if (!interior) continue;
    bool is_min = true;
    for (std::size_t code = 0; code < neighbours && is_min; ++code) {
      std::size_t c = code;
      std::ptrdiff_t offset = 0;
      for (Index d = 0; d < n; ++d) {
        offset += (static_cast<std::ptrdiff_t>(c % 3) - 1) * static_cast<std::ptrdiff_t>(stride[static_cast<std::size_t>(d)]);
        c /= 3;
      }
      if (offset != 0) is_min = F[flat] <= F[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) + offset)];
    }
    if (!is_min) continue;

    GridMinimum gm;
    gm.grid_point.resize(n);
    for (Index d = 0; d < n; ++d) gm.grid_point[d] = coord(jj[static_cast<std::size_t>(d)]);
    std::vector<Index> idx;
    for (Index d = 0; d < n; ++d) {
      if (gm.grid_point[d] != 0.0) idx.push_back(d);
    }
    bool refined = true;
    if (idx.empty()) {
      gm.refined = Vector::Zero(n);
    } else {
      Vector y(static_cast<Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) y[static_cast<Index>(j)] = gm.grid_point[idx[j]];
      const auto run = detail::restricted_newton(prob, idx, y);
      refined = run.outcome == detail::NewtonOutcome::converged;
      gm.refined = detail::scatter(n, idx, run.y);
    }
    bool duplicate = false;
    for (const auto& other : rep.grid_minima) {
      duplicate = duplicate || (other.refined - gm.refined).lpNorm<Eigen::Infinity>() <= opt.match_tol;
    }
    if (duplicate && refined) continue;

    gm.report = classify_point(prob, gm.refined);
    const bool passes = gm.report.classification == PointClass::critical_second_order ||
                        gm.report.classification == PointClass::zero_point;
    for (const auto& m : rep.enumeration.minima) {
      gm.matched = gm.matched || (m.x - gm.refined).lpNorm<Eigen::Infinity>() <=
                                     opt.match_tol * (1.0 + m.x.lpNorm<Eigen::Infinity>());
    }
    if (!refined || !passes || !gm.matched) {
      ++rep.grid_failures;
      std::ostringstream msg;
      msg.precision(17);
      msg << "grid minimum at [" << gm.grid_point.transpose() << "] refined to ["
          << gm.refined.transpose() << "]: " << to_string(gm.report.classification)
          << (refined ? "" : ", refinement did not converge")
          << (gm.matched ? "" : ", not among enumerated minima");
      rep.failures.push_back(msg.str());
    }
    rep.grid_minima.push_back(std::move(gm));
  }
  return rep;
}

}  // namespace lpreg

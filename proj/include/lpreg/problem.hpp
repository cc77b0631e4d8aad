#pragma once

// Instance data for the l_p-regularized least-squares problem
//
//   F(x) = ||Ax - b||^2 + sum_i lambda_i |x_i|^p,   0 < p < 1,
//
// with uniform lambda_i = lambda unless per-coordinate weights are given.

#include <lpreg/error.hpp>
#include <lpreg/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lpreg {

struct Problem {
  Matrix A;
  Vector b;
  double lambda = 1.0;
  double p = 0.5;
  // Per-coordinate regularization weights lambda_i. Absent means uniform.
  std::optional<Vector> weights;

  Index rows() const noexcept { return A.rows(); }
  Index cols() const noexcept { return A.cols(); }

  double weight(Index i) const noexcept {
    return weights ? (*weights)[i] : lambda;
  }

  // Smallest regularization weight (the uniform lambda without weights).
  double min_weight() const noexcept {
    return weights ? weights->minCoeff() : lambda;
  }

  double max_weight() const noexcept {
    return weights ? weights->maxCoeff() : lambda;
  }

  void validate() const {
    if (A.rows() < 1 || A.cols() < 1) {
      throw ValidationError("A", "matrix must have at least one row and one column");
    }
    if (!A.allFinite()) throw ValidationError("A", "entries must be finite");
    if (b.size() != A.rows()) {
      throw DimensionError("b has length " + std::to_string(b.size()) +
                           " but A has " + std::to_string(A.rows()) + " rows");
    }
    if (!b.allFinite()) throw ValidationError("b", "entries must be finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ValidationError("lambda", "must be a finite positive number");
    }
    if (!(p > 0.0 && p < 1.0)) {
      throw ValidationError("p", "must lie in the open interval (0,1)");
    }
    if (weights) {
      if (weights->size() != A.cols()) {
        throw DimensionError("weights has length " +
                             std::to_string(weights->size()) + " but A has " +
                             std::to_string(A.cols()) + " columns");
      }
      for (Index i = 0; i < weights->size(); ++i) {
        const double w = (*weights)[i];
        if (!(w > 0.0) || !std::isfinite(w)) {
          throw ValidationError("weights", "entry " + std::to_string(i) +
                                               " must be a finite positive number");
        }
      }
    }
  }
};

inline Problem make_problem(Matrix A, Vector b, double lambda, double p,
                            std::optional<Vector> weights = std::nullopt) {
  Problem prob{std::move(A), std::move(b), lambda, p, std::move(weights)};
  prob.validate();
  return prob;
}

// Sorted coordinate indices of the nonzero entries of a vector.
struct SupportSet {
  std::vector<Index> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  bool contains(Index i) const {
    return std::binary_search(indices.begin(), indices.end(), i);
  }
  friend bool operator==(const SupportSet&, const SupportSet&) = default;
};

inline SupportSet support_of(const Eigen::Ref<const Vector>& x) {
  SupportSet s;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) s.indices.push_back(i);
  }
  return s;
}

namespace detail {

inline void check_length(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  if (x.size() != prob.cols()) {
    throw DimensionError("vector has length " + std::to_string(x.size()) +
                         " but the problem has " + std::to_string(prob.cols()) +
                         " columns");
  }
}

}  // namespace detail

/// l_p quasi-norm (sum |x_i|^p)^(1/p). Any p > 0 is accepted, so p = 1 gives
/// the l_1 norm.
inline double lp_quasi_norm(const Eigen::Ref<const Vector>& x, double p) {
  detail::CompensatedSum acc;
  for (Index i = 0; i < x.size(); ++i) acc.add(std::pow(std::abs(x[i]), p));
  return std::pow(acc.value(), 1.0 / p);
}

/// Regularizer sum_i lambda_i |x_i|^p, summed in ascending index order.
inline double penalty(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  detail::check_length(prob, x);
  detail::CompensatedSum acc;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) acc.add(prob.weight(i) * std::pow(std::abs(x[i]), prob.p));
  }
  return acc.value();
}

/// ||Ax - b||^2 with compensated summation over the residual entries.
inline double least_squares(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  detail::check_length(prob, x);
  const Vector r = prob.A * x - prob.b;
  detail::CompensatedSum acc;
  for (Index i = 0; i < r.size(); ++i) acc.add(r[i] * r[i]);
  return acc.value();
}

/// F(x) = ||Ax - b||^2 + sum_i lambda_i |x_i|^p.
///
/// Both parts are accumulated in ascending index order with Neumaier
/// compensation, so repeated evaluations are bit-identical.
inline double objective(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  detail::CompensatedSum acc;
  acc.add(least_squares(prob, x));
  acc.add(penalty(prob, x));
  return acc.value();
}

/// Gradient of the smooth part, 2 A^T (Ax - b).
inline Vector gradient_smooth(const Problem& prob, const Eigen::Ref<const Vector>& x) {
  detail::check_length(prob, x);
  return 2.0 * (prob.A.transpose() * (prob.A * x - prob.b));
}

// Relative tolerance of the power iteration in spectral_norm_sq.
inline constexpr double kSpectralTolerance = 1e-10;

/// ||A||^2, the largest eigenvalue of A^T A, by power iteration.
///
/// The start vector is deterministic (1 + i/n). Iteration stops once the
/// Rayleigh quotient changes by less than kSpectralTolerance relative; the
/// Rayleigh quotient never exceeds the true value, so the result is an
/// underestimate. Use spectral_norm_sq_safe() when a guaranteed upper bound
/// is needed.
inline double spectral_norm_sq(const Matrix& A) {
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Index n = A.cols();
  Vector q(n);
  for (Index i = 0; i < n; ++i) q[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
  q.normalize();

  double mu = 0.0;
  constexpr int kMaxIters = 100000;
  for (int it = 0; it < kMaxIters; ++it) {
    const Vector Aq = A * q;
    const Vector w = A.transpose() * Aq;
    const double next = Aq.squaredNorm();  // q^T A^T A q with ||q|| = 1
    const double wn = w.norm();
    if (wn == 0.0) return next;  // q drifted into the null space
    q = w / wn;
    if (it > 0 && std::abs(next - mu) <= 0.1 * kSpectralTolerance * next) {
      // Final Rayleigh quotient at the updated vector.
      return std::max(next, (A * q).squaredNorm());
    }
    mu = next;
  }
  return std::max(mu, (A * q).squaredNorm());
}

/// spectral_norm_sq() inflated by its tolerance; used wherever the stepsize
/// bound v < 1/(2||A||^2) has to be enforced conservatively.
inline double spectral_norm_sq_safe(const Matrix& A) {
  const double s = spectral_norm_sq(A);
  return s * (1.0 + kSpectralTolerance) + kSpectralTolerance;
}

inline double spectral_norm_sq(const Problem& prob) { return spectral_norm_sq(prob.A); }

/// A weighted problem rewritten with a uniform lambda.
///
/// With u_i = (lambda_i/lambda)^(1/p) x_i and K_i = (lambda/lambda_i)^(1/p) A_i
/// the weighted objective at x equals the canonical objective at u.
struct RescaledProblem {
  Problem problem;  // canonical, no weights
  Vector scale;     // u = scale .* x

  Vector to_canonical(const Eigen::Ref<const Vector>& x) const {
    return scale.cwiseProduct(x);
  }
  Vector from_canonical(const Eigen::Ref<const Vector>& u) const {
    return u.cwiseQuotient(scale);
  }
};

inline RescaledProblem rescale_weighted(const Problem& prob) {
  if (!prob.weights) {
    throw ValidationError("weights", "rescaling requires per-coordinate weights");
  }
  prob.validate();
  const Index n = prob.cols();
  RescaledProblem out;
  out.scale.resize(n);
  out.problem.A.resize(prob.rows(), n);
  for (Index i = 0; i < n; ++i) {
    const double ratio = (*prob.weights)[i] / prob.lambda;
    if (ratio == 1.0) {
      out.scale[i] = 1.0;
      out.problem.A.col(i) = prob.A.col(i);
    } else {
      out.scale[i] = std::pow(ratio, 1.0 / prob.p);
      out.problem.A.col(i) = std::pow(1.0 / ratio, 1.0 / prob.p) * prob.A.col(i);
    }
  }
  out.problem.b = prob.b;
  out.problem.lambda = prob.lambda;
  out.problem.p = prob.p;
  return out;
}

struct InstanceSpec {
  std::uint64_t seed = 1;
  Index m = 20;
  Index n = 50;
  Index sparsity = 5;
  double noise = 0.0;
  double lambda = 0.1;
  double p = 0.5;
};

struct PlantedInstance {
  Problem problem;
  Vector planted;
};

/// Random compressed-sensing instance: A_ij ~ N(0,1)/sqrt(m); the planted x
/// has `sparsity` nonzeros of magnitude 1 + |N(0,1)| with random signs at
/// random positions; b = A x + noise * N(0, I). Deterministic given the seed
/// (mt19937_64 with libstdc++ distributions).
inline PlantedInstance generate_instance(const InstanceSpec& spec) {
  if (spec.m < 1 || spec.n < 1) {
    throw ValidationError("m,n", "dimensions must be positive");
  }
  if (spec.sparsity < 0 || spec.sparsity > spec.n) {
    throw ValidationError("sparsity", "must lie in [0, n]");
  }
  if (!(spec.noise >= 0.0)) throw ValidationError("noise", "must be nonnegative");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix A(spec.m, spec.n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.m));
  for (Index j = 0; j < spec.n; ++j) {
    for (Index i = 0; i < spec.m; ++i) A(i, j) = scale * normal(rng);
  }

  std::vector<Index> positions(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) positions[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: the first `sparsity` entries are the support.
  for (Index i = 0; i < spec.sparsity; ++i) {
    std::uniform_int_distribution<Index> pick(i, spec.n - 1);
    std::swap(positions[static_cast<std::size_t>(i)],
              positions[static_cast<std::size_t>(pick(rng))]);
  }

  Vector planted = Vector::Zero(spec.n);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < spec.sparsity; ++i) {
    const double magnitude = 1.0 + std::abs(normal(rng));
    planted[positions[static_cast<std::size_t>(i)]] = coin(rng) ? magnitude : -magnitude;
  }

  Vector b = A * planted;
  if (spec.noise > 0.0) {
    for (Index i = 0; i < spec.m; ++i) b[i] += spec.noise * normal(rng);
  }
  return {make_problem(std::move(A), std::move(b), spec.lambda, spec.p),
          std::move(planted)};
}

}  // namespace lpreg

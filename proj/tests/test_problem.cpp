#include <lpreg/problem.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lpreg;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index m, Index n) {
  std::normal_distribution<double> normal;
  Matrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = normal(rng);
  return A;
}

Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

TEST(Objective, ZeroPointIsNormOfB) {
  const Problem prob = make_problem(Matrix::Identity(2, 2), Vector::Ones(2), 1.0, 0.5);
  EXPECT_DOUBLE_EQ(objective(prob, Vector::Zero(2)), 2.0);
}

TEST(Objective, ZeroResidualLeavesPenalty) {
  const Problem prob = make_problem(Matrix::Identity(2, 2), Vector::Ones(2), 1.0, 0.5);
  EXPECT_DOUBLE_EQ(objective(prob, Vector::Ones(2)), 2.0);
}

TEST(Objective, DiagonalExample) {
  Matrix A(2, 2);
  A << 1, 0, 0, 2;
  const Problem prob = make_problem(A, Vector{{1.0, 2.0}}, 2.0, 0.5);
  EXPECT_DOUBLE_EQ(objective(prob, Vector{{1.0, 0.0}}), 6.0);
}

TEST(Objective, NonnegativeOnRandomPoints) {
  std::mt19937_64 rng(5);
  const Problem prob = make_problem(random_matrix(rng, 4, 6), random_vector(rng, 4), 0.3, 0.4);
  for (int t = 0; t < 200; ++t) EXPECT_GE(objective(prob, random_vector(rng, 6, 3.0)), 0.0);
}

TEST(Objective, WrongLengthThrows) {
  const Problem prob = make_problem(Matrix::Identity(2, 2), Vector::Ones(2), 1.0, 0.5);
  EXPECT_THROW(objective(prob, Vector::Zero(3)), DimensionError);
}

TEST(Gradient, IdentityExample) {
  const Problem prob = make_problem(Matrix::Identity(2, 2), Vector::Zero(2), 1.0, 0.5);
  const Vector g = gradient_smooth(prob, Vector{{1.0, -1.0}});
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], -2.0);
}

TEST(Gradient, VanishesWhenResidualIsZero) {
  std::mt19937_64 rng(8);
  const Matrix A = random_matrix(rng, 3, 5);
  const Vector x = random_vector(rng, 5);
  const Problem prob = make_problem(A, A * x, 1.0, 0.5);
  EXPECT_LE(gradient_smooth(prob, x).norm(), 1e-12);
}

TEST(Gradient, RowVectorExample) {
  Matrix A(1, 2);
  A << 1, 2;
  const Problem prob = make_problem(A, Vector::Ones(1), 1.0, 0.5);
  const Vector g = gradient_smooth(prob, Vector::Ones(2));
  EXPECT_DOUBLE_EQ(g[0], 4.0);
  EXPECT_DOUBLE_EQ(g[1], 8.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Problem prob = make_problem(random_matrix(rng, 5, 4), random_vector(rng, 5), 1.0, 0.5);
    const Vector x = random_vector(rng, 4);
    const Vector g = gradient_smooth(prob, x);
    for (Index i = 0; i < 4; ++i) {
      const double h = 1e-5;
      Vector up = x, dn = x;
      up[i] += h;
      dn[i] -= h;
      const double fd = (least_squares(prob, up) - least_squares(prob, dn)) / (2 * h);
      EXPECT_NEAR(fd, g[i], 1e-6 * (1.0 + std::abs(g[i])));
    }
  }
}

TEST(Identity, QuadraticExpansionIsExact) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem prob = make_problem(random_matrix(rng, 6, 4), random_vector(rng, 6), 1.0, 0.5);
    const Vector x = random_vector(rng, 4), y = random_vector(rng, 4);
    const double lhs = least_squares(prob, y) - least_squares(prob, x);
    const double rhs = (y - x).dot(gradient_smooth(prob, x)) + (prob.A * (y - x)).squaredNorm();
    EXPECT_NEAR(lhs - rhs, 0.0, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(QuasiNorm, DecreasesInP) {
  std::mt19937_64 rng(34);
  const double ps[] = {0.3, 0.5, 0.9, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = random_vector(rng, 7);
    for (double p : ps)
      for (double q : ps)
        if (p <= q) EXPECT_GE(lp_quasi_norm(x, p), lp_quasi_norm(x, q) * (1 - 1e-14));
  }
}

TEST(SpectralNorm, Identity) { EXPECT_NEAR(spectral_norm_sq(Matrix::Identity(3, 3)), 1.0, 1e-10); }

TEST(SpectralNorm, Diagonal) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = 3;
  EXPECT_NEAR(spectral_norm_sq(A), 9.0, 1e-9);
}

TEST(SpectralNorm, UpperTriangular) {
  Matrix A(2, 2);
  A << 1, 1, 0, 1;
  const double exact = 2.6180339887498948;
  const double est = spectral_norm_sq(A);
  EXPECT_LE(est, exact * (1 + 1e-15));
  EXPECT_NEAR(est, exact, 1e-10 * exact);
  EXPECT_GE(spectral_norm_sq_safe(A), exact);
}

TEST(SpectralNorm, ZeroMatrix) { EXPECT_EQ(spectral_norm_sq(Matrix::Zero(3, 2)), 0.0); }

TEST(Rescale, EqualWeightsAreIdentity) {
  std::mt19937_64 rng(3);
  Problem prob = make_problem(random_matrix(rng, 3, 4), random_vector(rng, 3), 0.7, 0.5,
                              Vector::Constant(4, 0.7));
  const RescaledProblem r = rescale_weighted(prob);
  EXPECT_EQ(r.scale, Vector::Ones(4));
  EXPECT_EQ(r.problem.A, prob.A);
}

TEST(Rescale, OneDimensionalScale) {
  Problem prob = make_problem(Matrix::Constant(1, 1, 3.0), Vector::Ones(1), 1.0, 0.5,
                              Vector::Constant(1, 4.0));
  const RescaledProblem r = rescale_weighted(prob);
  EXPECT_DOUBLE_EQ(r.scale[0], 16.0);
  EXPECT_DOUBLE_EQ(r.problem.A(0, 0), 3.0 / 16.0);
  const Vector x = Vector::Constant(1, 0.37);
  EXPECT_NEAR(objective(r.problem, r.to_canonical(x)), objective(prob, x), 1e-14);
}

TEST(Rescale, PreservesObjectiveAndSupport) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> w(0.1, 5.0);
  Vector weights(4);
  for (Index i = 0; i < 4; ++i) weights[i] = w(rng);
  const Problem prob = make_problem(random_matrix(rng, 3, 4), random_vector(rng, 3), 1.3, 0.6, weights);
  const RescaledProblem r = rescale_weighted(prob);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = random_vector(rng, 4);
    if (trial % 3 == 0) x[trial % 4] = 0.0;
    const Vector u = r.to_canonical(x);
    const double f = objective(prob, x);
    EXPECT_NEAR(objective(r.problem, u), f, 1e-12 * (1.0 + f));
    EXPECT_EQ(support_of(u), support_of(x));
    EXPECT_LE((r.from_canonical(u) - x).norm(), 1e-14 * (1.0 + x.norm()));
  }
}

TEST(Rescale, RejectsBadWeights) {
  Problem prob{Matrix::Identity(2, 2), Vector::Ones(2), 1.0, 0.5, Vector{{1.0, -1.0}}};
  EXPECT_THROW(rescale_weighted(prob), ValidationError);
}

TEST(Validate, RejectsPOutsideOpenInterval) {
  EXPECT_THROW(make_problem(Matrix::Identity(1, 1), Vector::Ones(1), 1.0, 1.0), ValidationError);
  EXPECT_THROW(make_problem(Matrix::Identity(1, 1), Vector::Ones(1), 1.0, 0.0), ValidationError);
}

TEST(Validate, RejectsShapeMismatch) {
  EXPECT_THROW(make_problem(Matrix::Identity(2, 2), Vector::Ones(3), 1.0, 0.5), DimensionError);
}

TEST(Generate, ZeroNoiseIsExact) {
  InstanceSpec spec{1, 4, 8, 2, 0.0, 0.1, 0.5};
  const PlantedInstance inst = generate_instance(spec);
  EXPECT_EQ(inst.problem.b, inst.problem.A * inst.planted);
}

TEST(Generate, Deterministic) {
  InstanceSpec spec{1, 4, 8, 2, 0.05, 0.1, 0.5};
  const PlantedInstance a = generate_instance(spec), b = generate_instance(spec);
  EXPECT_EQ(a.problem.A, b.problem.A);
  EXPECT_EQ(a.problem.b, b.problem.b);
  EXPECT_EQ(a.planted, b.planted);
}

TEST(Generate, PlantedSparsityAndMagnitude) {
  InstanceSpec spec{2, 20, 50, 5, 0.0, 0.1, 0.5};
  const PlantedInstance inst = generate_instance(spec);
  EXPECT_EQ(support_of(inst.planted).size(), 5u);
  for (Index i : support_of(inst.planted).indices) EXPECT_GE(std::abs(inst.planted[i]), 1.0);
}

TEST(Generate, RejectsSparsityAboveN) {
  InstanceSpec spec{1, 4, 3, 4, 0.0, 0.1, 0.5};
  EXPECT_THROW(generate_instance(spec), ValidationError);
}

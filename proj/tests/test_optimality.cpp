#include <lpreg/experiments.hpp>
#include <lpreg/optimality.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace lpreg;

namespace {

// F(t) = (t-2)^2 + sqrt|t|: local minimum t*, local maximum t_max.
constexpr double kTStar = 1.8144020185805389;
constexpr double kMinEigAtTStar = 1.8977084573766844;
constexpr double kTLocalMax = 0.015876048531773630;
// min over t in t* +- 0.05 of (F(t) - F(t*)) / (t - t*)^2.
constexpr double kGrowthRatio = 0.94813713261986523;

Problem scalar_problem() {
  return make_problem(Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 2.0), 1.0, 0.5);
}

// lambda = 20 ||A^T b||; a 2001^2 grid over [-0.1, 0.1]^2 finds nothing below F(0).
Problem zero_minimum_problem() {
  Matrix A(3, 2);
  A << 1.0, 0.5, -0.3, 2.0, 0.7, -1.1;
  return make_problem(A, Vector{{1.0, -2.0, 0.5}}, 89.89994438263018, 0.5);
}

bool contains(const std::vector<LocalMinimum>& minima, const Vector& x, double tol) {
  for (const auto& m : minima)
    if ((m.x - x).lpNorm<Eigen::Infinity>() <= tol) return true;
  return false;
}

}  // namespace

TEST(Classify, ZeroPoint) {
  EXPECT_EQ(classify_point(scalar_problem(), Vector::Zero(1)).classification, PointClass::zero_point);
}

TEST(Classify, LocalMinimum) {
  const OptimalityReport r = classify_point(scalar_problem(), Vector::Constant(1, kTStar));
  EXPECT_LE(r.first_order_residual, 1e-8);
  EXPECT_NEAR(r.second_order_min_eig, kMinEigAtTStar, 1e-9);
  EXPECT_EQ(r.classification, PointClass::critical_second_order);
}

TEST(Classify, NonCritical) {
  const OptimalityReport r = classify_point(scalar_problem(), Vector::Constant(1, 1.0));
  EXPECT_DOUBLE_EQ(r.first_order_residual, 1.5);
  EXPECT_EQ(r.classification, PointClass::not_critical);
}

TEST(Classify, LocalMaximumIsIndefinite) {
  const OptimalityReport r = classify_point(scalar_problem(), Vector::Constant(1, kTLocalMax));
  EXPECT_LE(r.first_order_residual, 1e-8);
  EXPECT_LT(r.second_order_min_eig, 0.0);
  EXPECT_EQ(r.classification, PointClass::critical_indefinite);
}

TEST(Classify, EigenpairResidual) {
  const Problem prob = random_small_instance(5, 3);
  for (const auto& m : enumerate_local_minima(prob).minima) {
    if (m.report.support.empty()) continue;
    const Matrix M = second_order_matrix(prob, m.x, m.report.support);
    EXPECT_EQ(M, M.transpose());
    EXPECT_LE(m.report.eigen_residual, 1e-10 * m.report.matrix_norm);
  }
}

TEST(Classify, ScalingInvariance) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Problem prob = random_small_instance(seed, 2);
    const double c = 3.7;
    const Problem scaled = make_problem(c * prob.A, c * prob.b, c * c * prob.lambda, prob.p);
    for (const auto& m : enumerate_local_minima(prob).minima) {
      EXPECT_EQ(classify_point(scaled, m.x).classification, m.report.classification);
    }
    for (const Vector& x : {Vector{{0.3, -0.2}}, Vector{{1.0, 0.0}}}) {
      EXPECT_EQ(classify_point(scaled, x).classification, classify_point(prob, x).classification);
    }
  }
}

TEST(Classify, PgaLimitsAreCritical) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Problem prob = generate_instance({seed, 20, 50, 5, 0.0, 0.1, 0.5}).problem;
    SolverConfig cfg;
    const IterationTrace tr = run_pga(prob, cfg);
    ASSERT_TRUE(tr.converged);
    const OptimalityReport r = classify_point(prob, tr.final_iterate());
    EXPECT_LE(r.first_order_residual, 10.0 * cfg.stop_tol / tr.v_min);
  }
}

TEST(Growth, LocalMinimumHasNoViolations) {
  const GrowthProbe g = growth_probe(scalar_problem(), Vector::Constant(1, kTStar), 0.05, 10000, 1);
  EXPECT_EQ(g.violations, 0u);
  EXPECT_GT(g.eps_hat, 0.0);
  EXPECT_GE(g.eps_hat, kGrowthRatio * (1 - 1e-6));
  EXPECT_LE(g.eps_hat, 0.5 * kMinEigAtTStar * (1 + 1e-3));
}

TEST(Growth, DominantPenaltyMakesZeroAMinimum) {
  const GrowthProbe g = growth_probe(zero_minimum_problem(), Vector::Zero(2), 0.1, 10000, 2);
  EXPECT_EQ(g.violations, 0u);
  EXPECT_GT(g.eps_hat, 0.0);
}

TEST(Growth, LocalMaximumHasViolations) {
  const GrowthProbe g = growth_probe(scalar_problem(), Vector::Constant(1, kTLocalMax), 0.1, 2000, 3);
  EXPECT_GT(g.violations, 0u);
}

TEST(Growth, Deterministic) {
  const GrowthProbe a = growth_probe(scalar_problem(), Vector::Constant(1, kTStar), 0.05, 500, 9);
  const GrowthProbe b = growth_probe(scalar_problem(), Vector::Constant(1, kTStar), 0.05, 500, 9);
  EXPECT_EQ(a.eps_hat, b.eps_hat);
  EXPECT_EQ(a.violations, b.violations);
}

TEST(Growth, RejectsBadRadius) {
  EXPECT_THROW(growth_probe(scalar_problem(), Vector::Zero(1), 0.0, 10, 1), ValidationError);
}

TEST(ProbeRadius, RespectsOffSupportThreshold) {
  // Coordinate 1 is zero; lambda |u|^p must dominate |g_1 u| inside the ball.
  const Problem prob = random_small_instance(7 * 2000 + 4, 2);
  const Vector x{{0.86936014816748552, 0.0}};
  const double r = default_probe_radius(prob, x);
  const double g1 = std::abs(gradient_smooth(prob, x)[1]);
  EXPECT_LE(r, 0.5 * x[0]);
  EXPECT_GE(prob.lambda * std::pow(r, prob.p), g1 * r);
}

TEST(Enumerate, ZeroIsOnlyMinimumWhenBIsZero) {
  const Problem prob = make_problem(Matrix::Identity(1, 1), Vector::Zero(1), 0.3, 0.7);
  const Enumeration e = enumerate_local_minima(prob);
  ASSERT_EQ(e.minima.size(), 1u);
  EXPECT_EQ(e.minima[0].x[0], 0.0);
}

TEST(Enumerate, ScalarInstance) {
  const Enumeration e = enumerate_local_minima(scalar_problem());
  EXPECT_TRUE(e.complete);
  ASSERT_EQ(e.minima.size(), 2u);
  EXPECT_TRUE(contains(e.minima, Vector::Zero(1), 0.0));
  EXPECT_TRUE(contains(e.minima, Vector::Constant(1, kTStar), 1e-10));
}

TEST(Enumerate, SeparableProductOfMinima) {
  const Problem prob = make_problem(Matrix::Identity(2, 2), Vector::Constant(2, 2.0), 1.0, 0.5);
  const Enumeration e = enumerate_local_minima(prob);
  ASSERT_EQ(e.minima.size(), 4u);
  for (double a : {0.0, kTStar})
    for (double b : {0.0, kTStar}) EXPECT_TRUE(contains(e.minima, Vector{{a, b}}, 1e-10)) << a << ' ' << b;
}

TEST(Enumerate, MinimaSatisfyAllThreeCharacterizations) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const Problem prob = random_small_instance(seed, 3);
    const Enumeration e = enumerate_local_minima(prob);
    EXPECT_TRUE(e.complete);
    for (const auto& m : e.minima) {
      if (m.report.support.empty()) {
        ASSERT_TRUE(m.report.growth.has_value());
        EXPECT_EQ(m.report.growth->violations, 0u);
        continue;
      }
      EXPECT_LE(m.report.first_order_residual, 1e-8);
      EXPECT_GT(m.report.second_order_min_eig, 0.0);
      const GrowthProbe g = growth_probe(prob, m.x, default_probe_radius(prob, m.x) / 64, 2000, seed);
      EXPECT_EQ(g.violations, 0u) << m.x.transpose();
    }
  }
}

TEST(Enumerate, RejectsLargeN) {
  const Problem prob = make_problem(Matrix::Identity(13, 13), Vector::Ones(13), 1.0, 0.5);
  EXPECT_THROW(enumerate_local_minima(prob), ValidationError);
}

TEST(Equivalence, ScalarInstanceAgrees) {
  const EquivalenceReport r = equivalence_harness(scalar_problem(), 1, 2000);
  EXPECT_TRUE(r.agree()) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_EQ(r.enumeration.minima.size(), 2u);
  EXPECT_EQ(r.grid_minima.size(), 2u);
}

TEST(Equivalence, RandomTwoDimensional) {
  const EquivalenceReport r = equivalence_harness(random_small_instance(3, 2), 3, 2000);
  EXPECT_TRUE(r.agree()) << (r.failures.empty() ? "" : r.failures.front());
  for (const auto& g : r.grid_minima) EXPECT_TRUE(g.matched);
}

TEST(Equivalence, ZeroMatrixHasOnlyZero) {
  const Problem prob = make_problem(Matrix::Zero(2, 2), Vector::Ones(2), 0.5, 0.5);
  const Vector x{{0.4, 0.0}};
  EXPECT_LT(second_order_matrix(prob, x, support_of(x)).maxCoeff(), 0.0);
  const EquivalenceReport r = equivalence_harness(prob, 1, 500);
  EXPECT_TRUE(r.agree());
  ASSERT_EQ(r.enumeration.minima.size(), 1u);
  EXPECT_TRUE(r.enumeration.minima[0].report.support.empty());
}

TEST(Equivalence, RejectsLargeN) {
  EXPECT_THROW(equivalence_harness(random_small_instance(1, 4), 1, 10), ValidationError);
}

TEST(Globality, ScalarInstance) {
  // F(t*) = 1.38144... < F(0) = 4.
  const GlobalityCheck at_t = check_global_minimum(scalar_problem(), Vector::Constant(1, kTStar));
  EXPECT_EQ(at_t.status, GlobalityStatus::verified);
  EXPECT_NEAR(at_t.F_min, 1.3814440192347526, 1e-12);
  EXPECT_EQ(check_global_minimum(scalar_problem(), Vector::Zero(1)).status, GlobalityStatus::violated);
}

TEST(Globality, LargeNIsUnverified) {
  const Problem prob = generate_instance({1, 20, 50, 5, 0.0, 0.1, 0.5}).problem;
  const GlobalityCheck g = check_global_minimum(prob, Vector::Zero(50));
  EXPECT_EQ(g.status, GlobalityStatus::unverified);
  EXPECT_TRUE(std::isnan(g.F_min));
  EXPECT_EQ(to_string(g.status), "hypothesis unverified");
}

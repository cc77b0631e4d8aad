#include <lpreg/io.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace lpreg;

namespace {

Problem sample_problem() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  Matrix A(3, 4);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) A(i, j) = normal(rng) / 3.0;
  Vector b(3);
  for (Index i = 0; i < 3; ++i) b[i] = normal(rng);
  return make_problem(A, b, 0.1, 0.37, Vector{{0.1, 0.2, 0.3, 1e-7}});
}

std::string without_field(const std::string& key) {
  json j = problem_to_json(sample_problem());
  j.erase(key);
  return j.dump();
}

}  // namespace

TEST(ProblemIo, RoundTripIsExact) {
  const Problem prob = sample_problem();
  std::ostringstream out;
  write_problem(out, prob);
  const Problem back = parse_problem(out.str());
  EXPECT_EQ(back.A, prob.A);
  EXPECT_EQ(back.b, prob.b);
  EXPECT_EQ(back.lambda, prob.lambda);
  EXPECT_EQ(back.p, prob.p);
  ASSERT_TRUE(back.weights.has_value());
  EXPECT_EQ(*back.weights, *prob.weights);
}

TEST(ProblemIo, MissingFieldIsNamed) {
  try {
    parse_problem(without_field("p"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "p");
  }
}

TEST(ProblemIo, POfOneIsRejected) {
  json j = problem_to_json(sample_problem());
  j["p"] = 1.0;
  try {
    parse_problem(j.dump());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "p");
  }
}

TEST(ProblemIo, MalformedJsonReportsLine) {
  const std::string text = "{\n  \"m\": 1,\n  \"n\": 1,\n  \"p\": 0.5,\n  \"lambda\": ,\n}";
  try {
    parse_problem(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(ProblemIo, RowCountMismatch) {
  json j = problem_to_json(sample_problem());
  j["m"] = 4;
  EXPECT_THROW(parse_problem(j.dump()), DimensionError);
}

TEST(ProblemIo, NonNumericEntry) {
  json j = problem_to_json(sample_problem());
  j["A"][1][2] = "x";
  try {
    parse_problem(j.dump());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "A[1][2]");
  }
}

TEST(TraceIo, RoundTripIsExact) {
  std::vector<IterationRecord> recs;
  recs.push_back({0, 1.0 / 3.0, 0.0, 0.1, 3, 0.0});
  recs.push_back({1, 0.2999999999999999, 1e-300, 7.25e-17, 2, 1.0 / 7.0});
  std::ostringstream out;
  write_trace(out, recs);
  const auto back = parse_trace(out.str());
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(back[k].k, recs[k].k);
    EXPECT_EQ(back[k].objective, recs[k].objective);
    EXPECT_EQ(back[k].step_norm, recs[k].step_norm);
    EXPECT_EQ(back[k].residual, recs[k].residual);
    EXPECT_EQ(back[k].support_size, recs[k].support_size);
    EXPECT_EQ(back[k].eps, recs[k].eps);
  }
}

TEST(TraceIo, BadHeader) {
  try {
    parse_trace("k,F\n0,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(TraceIo, BadNumberReportsLine) {
  const std::string text = std::string(kTraceHeader) + "\n0,1,0,0,1,0\n1,abc,0,0,1,0\n";
  try {
    parse_trace(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(TraceIo, WrongFieldCount) {
  const std::string text = std::string(kTraceHeader) + "\n0,1,0,0\n";
  EXPECT_THROW(parse_trace(text), ParseError);
}

TEST(TraceIo, FractionalCountRejected) {
  const std::string text = std::string(kTraceHeader) + "\n0,1,0,0,1.5,0\n";
  EXPECT_THROW(parse_trace(text), ParseError);
}

TEST(ReportJson, NonFiniteBecomesNull) {
  OptimalityReport rep;
  const json j = to_json(rep);
  EXPECT_TRUE(j["second_order_min_eig"].is_null());
  EXPECT_EQ(j["classification"], "zero-point");
}

TEST(ReportJson, RateVerdict) {
  RateEstimate r;
  r.eta_hat = 1.0;
  EXPECT_EQ(to_json(r)["verdict"], "no linear convergence detected");
  r.eta_hat = 0.5;
  r.linear = true;
  EXPECT_EQ(to_json(r)["verdict"], "linear convergence");
}

#pragma once

// Problem files (JSON), trace files (CSV) and JSON renderings of reports.
//
// Problem file: {"m", "n", "p", "lambda", optional "weights" (n numbers),
// "A" (m rows of n numbers), "b" (m numbers)}.
// Trace file: header k,F,step_norm,residual,support_size,eps_k; numbers
// written with 17 significant digits so they read back exactly.

#include <lpreg/analysis.hpp>
#include <lpreg/error.hpp>
#include <lpreg/optimality.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/solvers.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lpreg {

using json = nlohmann::ordered_json;

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    throw ParseError(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
}

inline const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(key, "missing required field");
  return *it;
}

inline double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "must be a number");
  return j.get<double>();
}

inline Index as_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ValidationError(field, "must be a positive integer");
  }
  return static_cast<Index>(j.get<long long>());
}

inline Vector as_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = as_number(j[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline std::string read_stream(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_stream(in);
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline Problem problem_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("problem", "top level must be a JSON object");
  const Index m = detail::as_count(detail::require(j, "m"), "m");
  const Index n = detail::as_count(detail::require(j, "n"), "n");
  const double p = detail::as_number(detail::require(j, "p"), "p");
  const double lambda = detail::as_number(detail::require(j, "lambda"), "lambda");
  const json& jA = detail::require(j, "A");
  const json& jb = detail::require(j, "b");

  if (!jA.is_array()) throw ValidationError("A", "must be an array of rows");
  if (static_cast<Index>(jA.size()) != m) {
    throw DimensionError("A has " + std::to_string(jA.size()) + " rows but m = " + std::to_string(m));
  }
  Matrix A(m, n);
  for (Index r = 0; r < m; ++r) {
    const json& row = jA[static_cast<std::size_t>(r)];
    const std::string field = "A[" + std::to_string(r) + "]";
    if (!row.is_array()) throw ValidationError(field, "must be an array of numbers");
    if (static_cast<Index>(row.size()) != n) {
      throw DimensionError(field + " has " + std::to_string(row.size()) + " entries but n = " + std::to_string(n));
    }
    for (Index c = 0; c < n; ++c) {
      A(r, c) = detail::as_number(row[static_cast<std::size_t>(c)], field + "[" + std::to_string(c) + "]");
    }
  }
  Vector b = detail::as_vector(jb, "b");
  if (b.size() != m) {
    throw DimensionError("b has length " + std::to_string(b.size()) + " but m = " + std::to_string(m));
  }
  std::optional<Vector> weights;
  if (const auto it = j.find("weights"); it != j.end() && !it->is_null()) {
    weights = detail::as_vector(*it, "weights");
  }
  return make_problem(std::move(A), std::move(b), lambda, p, std::move(weights));
}

inline json problem_to_json(const Problem& prob) {
  json j;
  j["m"] = prob.rows();
  j["n"] = prob.cols();
  j["p"] = prob.p;
  j["lambda"] = prob.lambda;
  if (prob.weights) j["weights"] = std::vector<double>(prob.weights->begin(), prob.weights->end());
  json A = json::array();
  for (Index r = 0; r < prob.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < prob.cols(); ++c) row.push_back(prob.A(r, c));
    A.push_back(std::move(row));
  }
  j["A"] = std::move(A);
  j["b"] = std::vector<double>(prob.b.begin(), prob.b.end());
  return j;
}

inline Problem parse_problem(const std::string& text) {
  return problem_from_json(detail::parse_json_text(text));
}

inline Problem load_problem(const std::string& path) { return parse_problem(detail::read_file(path)); }

inline void write_problem(std::ostream& out, const Problem& prob) {
  out << problem_to_json(prob).dump(1) << '\n';
}

inline void save_problem(const std::string& path, const Problem& prob) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_problem(out, prob);
}

/// A point given as a JSON array of numbers.
inline Vector parse_point(const std::string& text) {
  return detail::as_vector(detail::parse_json_text(text), "x");
}

inline json vector_to_json(const Eigen::Ref<const Vector>& x) {
  return std::vector<double>(x.begin(), x.end());
}

inline constexpr const char* kTraceHeader = "k,F,step_norm,residual,support_size,eps_k";

inline void write_trace(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << kTraceHeader << '\n';
  for (const auto& r : records) {
    out << r.k << ',' << detail::format_double(r.objective) << ','
        << detail::format_double(r.step_norm) << ',' << detail::format_double(r.residual) << ','
        << r.support_size << ',' << detail::format_double(r.eps) << '\n';
  }
}

inline void save_trace(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_trace(out, records);
}

inline std::vector<IterationRecord> parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kTraceHeader) throw ParseError(1, std::string("expected header '") + kTraceHeader + "'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw ParseError(lineno, "expected 6 fields, found " + std::to_string(cells.size()));
    }
    auto num = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw ParseError(lineno, "not a number: '" + s + "'");
      }
      if (used != s.size()) throw ParseError(lineno, "not a number: '" + s + "'");
      return v;
    };
    auto count = [&](const std::string& s) {
      const double v = num(s);
      if (v < 0 || v != std::floor(v)) throw ParseError(lineno, "not a count: '" + s + "'");
      return static_cast<std::size_t>(v);
    };
    IterationRecord r;
    r.k = count(cells[0]);
    r.objective = num(cells[1]);
    r.step_norm = num(cells[2]);
    r.residual = num(cells[3]);
    r.support_size = count(cells[4]);
    r.eps = num(cells[5]);
    out.push_back(r);
  }
  if (lineno == 0) throw ParseError(1, "empty trace file");
  return out;
}

inline std::vector<IterationRecord> load_trace(const std::string& path) {
  return parse_trace(detail::read_file(path));
}

// JSON renderings. Non-finite numbers become null.

namespace detail {
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
}  // namespace detail

inline json to_json(const GrowthProbe& g) {
  return {{"delta", g.delta}, {"samples", g.samples}, {"eps_hat", detail::num(g.eps_hat)},
          {"violations", g.violations}, {"unresolved", g.unresolved}};
}

inline json to_json(const OptimalityReport& r) {
  json j;
  j["classification"] = std::string(to_string(r.classification));
  j["support"] = r.support.indices;
  j["first_order_residual"] = r.first_order_residual;
  j["second_order_min_eig"] = detail::num(r.second_order_min_eig);
  j["eigen_residual"] = r.eigen_residual;
  if (r.growth) j["growth"] = to_json(*r.growth);
  return j;
}

inline json to_json(const RateEstimate& r) {
  return {{"quantity", r.quantity}, {"eta_hat", r.eta_hat}, {"C_hat", detail::num(r.C_hat)},
          {"tail_start", r.tail_start}, {"points", r.points}, {"r2", r.r2},
          {"linear", r.linear},
          {"verdict", r.linear ? "linear convergence" : "no linear convergence detected"}};
}

inline json to_json(const SummabilityVerdict& s) {
  return {{"symbolic", s.symbolic}, {"summable", s.summable}, {"observed_sum", s.observed_sum},
          {"tail_share", s.tail_share}, {"tail_ratio", s.tail_ratio}, {"note", s.note}};
}

inline json to_json(const CertificationReport& r, bool with_steps = false) {
  json j;
  j["constant"] = r.constant;
  j["pass"] = r.pass;
  j["steps"] = r.steps.size();
  j["violations"] = r.violations;
  j["worst_k"] = r.worst_k ? json(*r.worst_k) : json(nullptr);
  j["worst_slack"] = detail::num(r.worst_slack);
  if (!r.witness.empty()) j["witness"] = r.witness;
  j["summability"] = to_json(r.summability);
  if (with_steps) {
    json steps = json::array();
    for (const auto& s : r.steps) {
      steps.push_back({{"k", s.k}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"slack", s.slack}, {"pass", s.pass}});
    }
    j["per_step"] = std::move(steps);
  }
  return j;
}

inline json to_json(const RecursionReport& r) {
  return {{"pass", r.pass}, {"hypothesis_ok", r.hypothesis_ok},
          {"failed_index", r.failed_index ? json(*r.failed_index) : json(nullptr)},
          {"reason", r.reason}, {"K", detail::num(r.K)}, {"theta", r.theta}, {"tau", r.tau},
          {"tail_start", r.tail_start}, {"c_sum", detail::num(r.c_sum)},
          {"worst_ratio", detail::num(r.worst_ratio)}};
}

}  // namespace lpreg

#pragma once

// Reproducible experiments behind `lpreg repro` and the acceptance binary.
// Each returns named checks plus artifact files whose bytes depend only on
// the options, never on timing or thread count.

#include <lpreg/analysis.hpp>
#include <lpreg/io.hpp>
#include <lpreg/optimality.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/prox.hpp>
#include <lpreg/prox_oracle.hpp>
#include <lpreg/solvers.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lpreg {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct ExperimentResult {
  std::string id;
  std::vector<Check> checks;
  std::vector<Artifact> artifacts;
  double seconds = 0.0;

  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

struct ExperimentOptions {
  std::uint64_t seed = 0;  // 0 selects the experiment's default
  int threads = 1;
};

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"pga-linear", "ipga1-linear", "ipga2-linear",
                                            "equivalence", "prox-pin"};
  return ids;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::string fmt(double x) { return format_double(x); }

template <class... Ts>
std::string cat(const Ts&... parts) {
  std::ostringstream ss;
  ss.precision(6);
  (ss << ... << parts);
  return ss.str();
}

inline std::string count_detail(std::size_t bad, std::size_t total) {
  return std::to_string(total - bad) + "/" + std::to_string(total) + " ok";
}

}  // namespace detail

/// 10^4 random prox queries against the brute-force oracle, the p = 1/2
/// closed form, and the nonzero lower bound.
inline ExperimentResult run_prox_pin(const ExperimentOptions& opt = {}, std::size_t queries = 10000) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(opt.seed ? opt.seed : 2024);
  std::uniform_real_distribution<double> uz(-20.0, 20.0), uv(0.01, 5.0), ul(0.01, 10.0),
      up(0.3, 0.7);
  const double fixed_p[3] = {0.2, 0.5, 0.8};

  std::size_t arg_bad = 0, val_bad = 0, half_bad = 0, lb_bad = 0, ties = 0;
  double worst_arg = 0.0, worst_val = 0.0, worst_half = 0.0;
  std::ostringstream csv;
  csv << "z,v,lambda,p,argmin,value,tie,oracle_argmin,oracle_value\n";
  for (std::size_t i = 0; i < queries; ++i) {
    ProxQuery q;
    q.z = uz(rng);
    q.v = uv(rng);
    q.lambda = ul(rng);
    q.p = (i % 4 == 3) ? up(rng) : fixed_p[i % 4];

    const ProxResult r = prox_scalar(q);
    const ProxResult o = prox_oracle(q);
    ties += r.tie ? 1 : 0;
    // Every oracle minimizer must be a prox minimizer and vice versa.
    double arg_err = 0.0;
    for (double t : o.all()) arg_err = std::max(arg_err, r.distance(t));
    for (double t : r.all()) arg_err = std::max(arg_err, o.distance(t));
    const double val_err = std::abs(r.value - o.value);
    worst_arg = std::max(worst_arg, arg_err);
    worst_val = std::max(worst_val, val_err);
    if (arg_err > 1e-7) ++arg_bad;
    if (val_err > 1e-10) ++val_bad;

    const ProxResult h = prox_scalar_half(q.z, q.v, q.lambda);
    const ProxResult s = prox_scalar({q.z, q.v, q.lambda, 0.5});
    const double half_err = std::abs(h.selected() - s.selected());
    worst_half = std::max(worst_half, half_err);
    if (half_err > 1e-10 || h.tie != s.tie) ++half_bad;

    const double lb = prox_nonzero_lower_bound(q.v, q.lambda, q.p);
    for (double t : r.all()) {
      if (t != 0.0 && std::abs(t) < lb - 1e-12) ++lb_bad;
    }
    if (s.selected() != 0.0 && std::abs(s.selected()) < prox_nonzero_lower_bound(q.v, q.lambda, 0.5) - 1e-12) {
      ++lb_bad;
    }
    csv << detail::fmt(q.z) << ',' << detail::fmt(q.v) << ',' << detail::fmt(q.lambda) << ','
        << detail::fmt(q.p) << ',' << detail::fmt(r.selected()) << ',' << detail::fmt(r.value)
        << ',' << (r.tie ? 1 : 0) << ',' << detail::fmt(o.selected()) << ','
        << detail::fmt(o.value) << '\n';
  }

  ExperimentResult res;
  res.id = "prox-pin";
  res.checks.push_back({"argmin agrees with oracle (1e-7)", arg_bad == 0,
                        detail::cat(detail::count_detail(arg_bad, queries), ", worst ", worst_arg)});
  res.checks.push_back({"value agrees with oracle (1e-10)", val_bad == 0,
                        detail::cat(detail::count_detail(val_bad, queries), ", worst ", worst_val)});
  res.checks.push_back({"p=1/2 closed form agrees (1e-10)", half_bad == 0,
                        detail::cat(detail::count_detail(half_bad, queries), ", worst ", worst_half)});
  res.checks.push_back({"nonzero outputs respect the lower bound", lb_bad == 0,
                        detail::cat(lb_bad, " violations")});
  json summary{{"queries", queries}, {"ties", ties},
               {"argmin_failures", arg_bad}, {"value_failures", val_bad},
               {"half_failures", half_bad}, {"lower_bound_violations", lb_bad},
               {"worst_argmin_error", worst_arg}, {"worst_value_error", worst_val},
               {"worst_half_error", worst_half}};
  res.artifacts.push_back({"prox-pin.csv", csv.str()});
  res.artifacts.push_back({"prox-pin.json", summary.dump(2) + "\n"});
  res.seconds = detail::seconds_since(t0);
  return res;
}

inline InstanceSpec linear_instance_spec(std::uint64_t seed) {
  InstanceSpec s;
  s.seed = seed;
  s.m = 20;
  s.n = 50;
  s.sparsity = 5;
  s.noise = 0.0;
  s.lambda = 0.1;
  s.p = 0.5;
  return s;
}

struct LinearRun {
  IterationTrace trace;
  Vector x_limit;       // final iterate of the stop_tol = 1e-13 continuation
  double F_star = 0.0;  // F at x_limit
};

/// Runs `config` from 0 to stop_tol 1e-10 and again to 1e-13 for the reference.
inline LinearRun run_to_limit(const Problem& prob, SolverConfig config) {
  LinearRun out;
  config.store_iterates = true;
  out.trace = run_solver(prob, config);
  config.stop_tol = 1e-13;
  const IterationTrace ref = run_solver(prob, config);
  out.x_limit = ref.final_iterate();
  out.F_star = objective(prob, out.x_limit);
  return out;
}

namespace detail {

inline std::size_t lower_bound_violations(const Problem& prob, const IterationTrace& trace) {
  std::size_t bad = 0;
  for (std::size_t k = 1; k < trace.iterates.size(); ++k) {
    const double v = trace.stepsizes[k - 1];
    const Vector& x = trace.iterates[k];
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] != 0.0 && std::abs(x[i]) < prox_nonzero_lower_bound(v, prob.weight(i), prob.p) - 1e-12) ++bad;
    }
  }
  return bad;
}

inline bool monotone(const IterationTrace& trace) {
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    const double prev = trace.records[k - 1].objective;
    if (trace.records[k].objective > prev + 1e-12 * (1.0 + std::abs(prev))) return false;
  }
  return true;
}

}  // namespace detail

/// Exact PGA on 20 zero-noise instances: monotone F, support
/// identification, small final residual, linear rate of F(x^k) - F*,
/// nonzero lower bound on every iterate, and (H1')/(H2') closure.
inline ExperimentResult run_pga_linear(const ExperimentOptions& opt = {}, std::size_t instances = 20) {
  const auto t0 = detail::Clock::now();
  const std::uint64_t base = opt.seed ? opt.seed : 1;
  ExperimentResult res;
  res.id = "pga-linear";
  std::size_t unconverged = 0, nonmono = 0, no_support = 0, big_res = 0, rate_bad = 0, lb_bad = 0,
              h1_bad = 0, h2_bad = 0;
  std::ostringstream csv;
  csv << "seed,iterations,converged,F_final,F_star,residual,support,N_hat,eta_hat,r2,h1,h2,beta\n";
  for (std::size_t s = 0; s < instances; ++s) {
    const std::uint64_t seed = base + s;
    const Problem prob = generate_instance(linear_instance_spec(seed)).problem;
    SolverConfig cfg;
    cfg.algorithm = Algorithm::pga;
    cfg.threads = opt.threads;
    const LinearRun run = run_to_limit(prob, cfg);
    const IterationTrace& tr = run.trace;

    const bool conv = tr.converged;
    const auto N = detect_support_identification(tr.supports);
    const double residual = tr.records.back().residual;
    RateEstimate rate;
    bool rate_ok = false;
    try {
      rate = fit_rate_objective(tr.records, run.F_star, 0.5, N.value_or(0));
      rate_ok = rate.eta_hat > 0.0 && rate.eta_hat < 1.0 && rate.r2 >= 0.98;
    } catch (const Error&) {
      rate_ok = false;
    }
    const auto h1 = certify_h1(tr, alpha_from_stepsize(tr.v_max, tr.norm_sq_safe),
                               std::vector<double>(tr.size() - 1, 0.0), Schedule::zero());
    const double beta = estimate_h2_beta(prob, tr);
    const auto h2 = certify_h2(prob, tr, beta, std::vector<double>(tr.size() - 1, 0.0));

    unconverged += conv ? 0 : 1;
    nonmono += detail::monotone(tr) ? 0 : 1;
    no_support += (N && *N < cfg.max_iters) ? 0 : 1;
    big_res += residual <= 1e-7 ? 0 : 1;
    rate_bad += rate_ok ? 0 : 1;
    lb_bad += detail::lower_bound_violations(prob, tr);
    h1_bad += h1.pass ? 0 : 1;
    h2_bad += h2.pass ? 0 : 1;

    csv << seed << ',' << tr.size() - 1 << ',' << (conv ? 1 : 0) << ','
        << detail::fmt(tr.records.back().objective) << ',' << detail::fmt(run.F_star) << ','
        << detail::fmt(residual) << ',' << tr.records.back().support_size << ','
        << (N ? std::to_string(*N) : std::string("none")) << ',' << detail::fmt(rate.eta_hat)
        << ',' << detail::fmt(rate.r2) << ',' << (h1.pass ? 1 : 0) << ',' << (h2.pass ? 1 : 0)
        << ',' << detail::fmt(beta) << '\n';
  }
  res.checks.push_back({"all runs converge", unconverged == 0, detail::count_detail(unconverged, instances)});
  res.checks.push_back({"F is monotone", nonmono == 0, detail::count_detail(nonmono, instances)});
  res.checks.push_back({"support identified", no_support == 0, detail::count_detail(no_support, instances)});
  res.checks.push_back({"final residual <= 1e-7", big_res == 0, detail::count_detail(big_res, instances)});
  res.checks.push_back({"linear rate (eta in (0,1), r2 >= 0.98)", rate_bad == 0,
                        detail::count_detail(rate_bad, instances)});
  res.checks.push_back({"iterates respect the nonzero lower bound", lb_bad == 0,
                        detail::cat(lb_bad, " violations")});
  res.checks.push_back({"H1 with alpha = 1/(2v) - ||A||^2", h1_bad == 0, detail::count_detail(h1_bad, instances)});
  res.checks.push_back({"H2 with trace-estimated beta", h2_bad == 0, detail::count_detail(h2_bad, instances)});
  res.artifacts.push_back({"pga-linear.csv", csv.str()});
  res.seconds = detail::seconds_since(t0);
  return res;
}

/// Inexact parallel variants on the same instances. ipga1p uses
/// tau_k = 0.1 * 0.5^k, ipga2p uses t_k = 0.3 * 0.7^k.
inline ExperimentResult run_ipga_linear(Algorithm algorithm, const ExperimentOptions& opt = {},
                                        std::size_t instances = 20) {
  if (algorithm == Algorithm::pga) throw ValidationError("algo", "expected an inexact variant");
  const auto t0 = detail::Clock::now();
  const std::uint64_t base = opt.seed ? opt.seed : 1;
  const bool value_type = algorithm == Algorithm::ipga1p;
  const Schedule schedule = value_type ? Schedule::geometric(0.1, 0.5) : Schedule::geometric(0.3, 0.7);

  ExperimentResult res;
  res.id = value_type ? "ipga1-linear" : "ipga2-linear";
  std::size_t unconverged = 0, cert_bad = 0, recheck_bad = 0, rate_bad = 0, far = 0, h1_bad = 0;
  std::ostringstream csv;
  csv << "seed,iterations,converged,F_star,eta_hat,r2,violations,distance_to_pga,h1,global_min\n";
  for (std::size_t s = 0; s < instances; ++s) {
    const std::uint64_t seed = base + s;
    const Problem prob = generate_instance(linear_instance_spec(seed)).problem;
    SolverConfig cfg;
    cfg.algorithm = algorithm;
    cfg.inexact = schedule;
    cfg.threads = opt.threads;
    const LinearRun run = run_to_limit(prob, cfg);
    SolverConfig pga_cfg;
    pga_cfg.threads = opt.threads;
    const LinearRun pga = run_to_limit(prob, pga_cfg);
    const IterationTrace& tr = run.trace;

    RateEstimate rate;
    bool rate_ok = false;
    try {
      rate = fit_rate_objective(tr.records, run.F_star, 0.5,
                                detect_support_identification(tr.supports).value_or(0));
      rate_ok = rate.eta_hat > 0.0 && rate.eta_hat < 1.0 && rate.r2 >= 0.95;
    } catch (const Error&) {
      rate_ok = false;
    }
    const std::size_t violations = tr.control_violations();
    const std::size_t rechecked = verify_ipga_controls(prob, tr, schedule);
    const double dist = (tr.final_iterate() - pga.trace.final_iterate()).lpNorm<Eigen::Infinity>();
    bool h1_ok = true;
    if (value_type) {
      h1_ok = certify_h1(tr, alpha_from_stepsize(tr.v_max, tr.norm_sq_safe), eps_from_trace(tr),
                         schedule).pass;
    }

    unconverged += tr.converged ? 0 : 1;
    cert_bad += violations > 0 ? 1 : 0;
    recheck_bad += rechecked > 0 ? 1 : 0;
    rate_bad += rate_ok ? 0 : 1;
    far += dist <= 1e-5 ? 0 : 1;
    h1_bad += h1_ok ? 0 : 1;
    csv << seed << ',' << tr.size() - 1 << ',' << (tr.converged ? 1 : 0) << ','
        << detail::fmt(run.F_star) << ',' << detail::fmt(rate.eta_hat) << ','
        << detail::fmt(rate.r2) << ',' << violations + rechecked << ',' << detail::fmt(dist)
        << ',' << (value_type ? (h1_ok ? "1" : "0") : "-") << ','
        << (value_type ? to_string(check_global_minimum(prob, tr.final_iterate()).status) : "-") << '\n';
  }
  res.checks.push_back({"all runs converge", unconverged == 0, detail::count_detail(unconverged, instances)});
  res.checks.push_back({"per-coordinate controls hold at every step", cert_bad == 0,
                        detail::count_detail(cert_bad, instances)});
  res.checks.push_back({"controls hold when recomputed from iterates", recheck_bad == 0,
                        detail::count_detail(recheck_bad, instances)});
  res.checks.push_back({"linear rate (eta in (0,1), r2 >= 0.95)", rate_bad == 0,
                        detail::count_detail(rate_bad, instances)});
  const std::size_t need = instances - instances / 10;
  res.checks.push_back({"within 1e-5 of the exact PGA limit on >= 90% of instances",
                        instances - far >= need,
                        detail::cat(instances - far, "/", instances, " close (need ", need, ")")});
  if (value_type) {
    res.checks.push_back({"H1 with eps_k^2 = sum of value gaps", h1_bad == 0,
                          detail::count_detail(h1_bad, instances)});
  }
  res.artifacts.push_back({res.id + ".csv", csv.str()});
  res.seconds = detail::seconds_since(t0);
  return res;
}

/// Small random instance for the equivalence harness: planted x with
/// entries +-(1 + |N|), m = n + 2 rows, b = A x + 0.1 N.
inline Problem random_small_instance(std::uint64_t seed, Index n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> ulam(0.05, 1.0), up(0.2, 0.8);
  const Index m = n + 2;
  Matrix A(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) A(i, j) = normal(rng);
  }
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    const double mag = 1.0 + std::abs(normal(rng));
    x[i] = normal(rng) < 0.0 ? -mag : mag;
  }
  Vector b = A * x;
  for (Index i = 0; i < m; ++i) b[i] += 0.1 * normal(rng);
  const double lambda = ulam(rng);
  const double p = up(rng);
  return make_problem(std::move(A), std::move(b), lambda, p);
}

/// Cross-checks the three local-minimum characterizations on 10 random 1-D
/// and 5 random 2-D instances, and pins the instance A = 1, b = 2,
/// lambda = 1, p = 1/2, whose local minima are exactly {0, t*}.
inline ExperimentResult run_equivalence(const ExperimentOptions& opt = {}, std::size_t trials = 2000) {
  const auto t0 = detail::Clock::now();
  const std::uint64_t base = opt.seed ? opt.seed : 7;
  ExperimentResult res;
  res.id = "equivalence";
  json report = json::array();
  std::size_t disagree = 0, total = 0, minima = 0, grid = 0;

  auto run_one = [&](const std::string& label, const Problem& prob, std::uint64_t seed) {
    const EquivalenceReport rep = equivalence_harness(prob, seed, trials);
    ++total;
    disagree += rep.agree() ? 0 : 1;
    minima += rep.enumeration.minima.size();
    grid += rep.grid_minima.size();
    json j;
    j["instance"] = label;
    j["n"] = prob.cols();
    j["lambda"] = prob.lambda;
    j["p"] = prob.p;
    j["box_radius"] = rep.box_radius;
    json mins = json::array();
    for (const auto& m : rep.enumeration.minima) {
      json e = to_json(m.report);
      e["x"] = vector_to_json(m.x);
      e["F"] = objective(prob, m.x);
      mins.push_back(std::move(e));
    }
    j["local_minima"] = std::move(mins);
    j["grid_minima"] = rep.grid_minima.size();
    j["agree"] = rep.agree();
    j["failures"] = rep.failures;
    report.push_back(std::move(j));
    return rep;
  };

  for (std::uint64_t i = 0; i < 10; ++i) {
    run_one("random-1d-" + std::to_string(i), random_small_instance(base * 1000 + i, 1), base + i);
  }
  for (std::uint64_t i = 0; i < 5; ++i) {
    run_one("random-2d-" + std::to_string(i), random_small_instance(base * 2000 + i, 2), base + 100 + i);
  }
  const Problem fixed = make_problem(Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 2.0), 1.0, 0.5);
  const EquivalenceReport frep = run_one("fixed-1d", fixed, base);

  // F(x) = (x - 2)^2 + |x|^(1/2) is the prox objective with z = 2, v = 1/2.
  const double t_oracle = prox_oracle({2.0, 0.5, 1.0, 0.5}).selected();
  bool fixed_ok = frep.enumeration.minima.size() == 2;
  double t_found = std::numeric_limits<double>::quiet_NaN();
  bool has_zero = false;
  for (const auto& m : frep.enumeration.minima) {
    if (m.x[0] == 0.0) {
      has_zero = true;
    } else {
      t_found = m.x[0];
    }
  }
  fixed_ok = fixed_ok && has_zero && std::abs(t_found - t_oracle) <= 1e-8;

  res.checks.push_back({"characterizations agree on every instance", disagree == 0,
                        detail::cat(total - disagree, "/", total, " agree; ", minima,
                                    " local minima, ", grid, " grid minima")});
  res.checks.push_back({"A=1, b=2: local minima are exactly {0, t*}", fixed_ok,
                        detail::cat(frep.enumeration.minima.size(), " minima, t* = ",
                                    detail::fmt(t_found), ", oracle ", detail::fmt(t_oracle))});
  res.artifacts.push_back({"equivalence.json", report.dump(2) + "\n"});
  res.seconds = detail::seconds_since(t0);
  return res;
}

struct RecursionTriple {
  std::vector<double> a;
  std::vector<double> delta;
  double eta = 0.5;
};

/// Random (a, delta, eta) satisfying a_{k+1} <= eta a_k + delta_k: delta is
/// geometric with ratio below eta (even draws) or has independent ratios in
/// [0, 0.95] (odd draws).
inline RecursionTriple random_recursion_triple(std::mt19937_64& rng, std::size_t index, std::size_t length = 60) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RecursionTriple t;
  t.eta = 0.1 + 0.8 * u01(rng);
  t.delta.resize(length - 1);
  t.delta[0] = u01(rng);
  if (index % 2 == 0) {
    const double r = t.eta * u01(rng);
    for (std::size_t k = 1; k < t.delta.size(); ++k) t.delta[k] = t.delta[k - 1] * r;
  } else {
    for (std::size_t k = 1; k < t.delta.size(); ++k) t.delta[k] = t.delta[k - 1] * 0.95 * u01(rng);
  }
  t.a.resize(length);
  t.a[0] = 10.0 * u01(rng);
  for (std::size_t k = 0; k + 1 < length; ++k) {
    const double tight = u01(rng) < 0.3 ? 1.0 : u01(rng);
    t.a[k + 1] = tight * (t.eta * t.a[k] + t.delta[k]);
  }
  return t;
}

inline ExperimentResult run_geometric_recursion(const ExperimentOptions& opt = {}, std::size_t count = 1000) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(opt.seed ? opt.seed : 11);
  std::size_t fails = 0;
  std::string first_failure;
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const RecursionTriple t = random_recursion_triple(rng, i);
    const RecursionReport rep = check_geometric_recursion(t.a, t.delta, t.eta);
    worst = std::max(worst, rep.worst_ratio);
    if (!rep.pass) {
      ++fails;
      if (first_failure.empty()) first_failure = "triple " + std::to_string(i) + ": " + rep.reason;
    }
  }
  ExperimentResult res;
  res.id = "geometric-recursion";
  res.checks.push_back({"constructed (K, theta) dominates a_k", fails == 0,
                        detail::cat(count - fails, "/", count, " ok, max a_k/(K theta^k) = ", worst,
                                    first_failure.empty() ? "" : "; " + first_failure)});
  res.seconds = detail::seconds_since(t0);
  return res;
}

inline ExperimentResult run_experiment(const std::string& id, const ExperimentOptions& opt = {}) {
  if (id == "prox-pin") return run_prox_pin(opt);
  if (id == "pga-linear") return run_pga_linear(opt);
  if (id == "ipga1-linear") return run_ipga_linear(Algorithm::ipga1p, opt);
  if (id == "ipga2-linear") return run_ipga_linear(Algorithm::ipga2p, opt);
  if (id == "equivalence") return run_equivalence(opt);
  throw ValidationError("experiment", "unknown experiment id '" + id + "'");
}

}  // namespace lpreg

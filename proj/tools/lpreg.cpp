// lpreg: command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver hit max-iters,
// 3 certification or experiment check failed.

#include <lpreg/lpreg.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using lpreg::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMaxIters = 2;
constexpr int kExitCheck = 3;

constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw lpreg::Error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

json versions() {
  return {{"lpreg", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"compiler", __VERSION__}};
}

// Per-invocation state: global flags, inputs read and outputs written.
struct Context {
  std::string out_dir = ".";
  bool quiet = false;
  int threads = 1;
  std::vector<std::string> argv;
  json config = json::object();
  json inputs = json::array();
  json outputs = json::array();

  void note(const std::string& line) const {
    if (!quiet) std::cerr << line << '\n';
  }

  std::string read_input(const std::string& path) {
    std::string text;
    std::string recorded = path;
    if (path == "-") {
      text = lpreg::detail::read_stream(std::cin);
    } else {
      text = lpreg::detail::read_file(path);
      recorded = fs::absolute(path).lexically_normal().string();
    }
    inputs.push_back({{"path", recorded}, {"sha256", sha256_hex(text)}});
    return text;
  }

  // "-" writes to stdout; relative paths land under --out-dir.
  void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
      std::cout << content;
      std::cout.flush();
    } else {
      const fs::path target = resolve(path);
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      std::ofstream out(target, std::ios::binary);
      if (!out) throw lpreg::Error("cannot write " + target.string());
      out << content;
    }
    outputs.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
  }

  fs::path resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : fs::path(out_dir) / p;
  }

  void write_manifest(const std::string& command, int exit_code, double seconds, json extra = {}) {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = config.contains("seed") ? config["seed"] : json(nullptr);
    m["versions"] = versions();
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["exit_code"] = exit_code;
    m["wall_clock_seconds"] = seconds;
    if (!extra.is_null()) m["details"] = std::move(extra);
    const fs::path target = fs::path(out_dir) / ("manifest-" + command + ".json");
    fs::create_directories(out_dir);
    std::ofstream out(target, std::ios::binary);
    if (!out) throw lpreg::Error("cannot write " + target.string());
    out << m.dump(2) << '\n';
  }
};

std::string fmt(double x) { return lpreg::detail::format_double(x); }

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  lpreg::InstanceSpec spec;
  std::string out = "-";
  std::string planted_out;
};

int cmd_generate(Context& ctx, const GenerateArgs& a) {
  ctx.config = {{"seed", a.spec.seed}, {"m", a.spec.m}, {"n", a.spec.n},
                {"sparsity", a.spec.sparsity}, {"noise", a.spec.noise},
                {"lambda", a.spec.lambda}, {"p", a.spec.p}};
  const auto inst = lpreg::generate_instance(a.spec);
  std::ostringstream ss;
  lpreg::write_problem(ss, inst.problem);
  ctx.write_output(a.out, ss.str());
  if (!a.planted_out.empty()) ctx.write_output(a.planted_out, lpreg::vector_to_json(inst.planted).dump() + "\n");
  ctx.note("generate: m=" + std::to_string(a.spec.m) + " n=" + std::to_string(a.spec.n) +
           " s=" + std::to_string(a.spec.sparsity) + " seed=" + std::to_string(a.spec.seed));
  return kExitOk;
}

// ---- solve ----------------------------------------------------------------

struct SolveArgs {
  std::string algo = "pga";
  std::string problem = "-";
  std::optional<double> p;
  std::optional<double> lambda;
  std::optional<double> v;
  bool auto_v = false;
  std::optional<double> tau_c, tau_rho, t_c, t_rho;
  double knob = lpreg::kDefaultKnob;
  std::size_t max_iters = 100000;
  double tol = 1e-10;
  std::string trace_out = "-";
  std::string x_out;
  std::string x0;
  std::uint64_t seed = 0;
};

int cmd_solve(Context& ctx, const SolveArgs& a) {
  lpreg::Problem prob = lpreg::parse_problem(ctx.read_input(a.problem));
  if (a.p) prob.p = *a.p;
  if (a.lambda) prob.lambda = *a.lambda;
  prob.validate();

  lpreg::SolverConfig cfg;
  cfg.algorithm = lpreg::parse_algorithm(a.algo);
  cfg.max_iters = a.max_iters;
  cfg.stop_tol = a.tol;
  cfg.knob = a.knob;
  cfg.seed = a.seed;
  cfg.threads = ctx.threads;
  if (a.v && a.auto_v) throw lpreg::ValidationError("v", "--v and --auto-v are mutually exclusive");
  if (a.v) cfg.stepsizes = {*a.v};
  if (cfg.algorithm == lpreg::Algorithm::ipga1p) {
    if (a.t_c || a.t_rho) throw lpreg::ValidationError("t-c", "ipga1p takes --tau-c/--tau-rho");
    cfg.inexact = lpreg::Schedule::geometric(a.tau_c.value_or(0.1), a.tau_rho.value_or(0.5));
  } else if (cfg.algorithm == lpreg::Algorithm::ipga2p) {
    if (a.tau_c || a.tau_rho) throw lpreg::ValidationError("tau-c", "ipga2p takes --t-c/--t-rho");
    cfg.inexact = lpreg::Schedule::geometric(a.t_c.value_or(0.3), a.t_rho.value_or(0.7));
  } else if (a.tau_c || a.tau_rho || a.t_c || a.t_rho) {
    throw lpreg::ValidationError("algo", "schedule flags need --algo ipga1p or ipga2p");
  }
  lpreg::Vector x0;
  if (!a.x0.empty()) x0 = lpreg::parse_point(ctx.read_input(a.x0));

  ctx.config = {{"algo", a.algo}, {"p", prob.p}, {"lambda", prob.lambda},
                {"v", a.v ? json(*a.v) : json("auto")}, {"schedule_c", cfg.inexact.c()},
                {"schedule_rho", cfg.inexact.rho()}, {"knob", a.knob}, {"max_iters", a.max_iters},
                {"tol", a.tol}, {"seed", a.seed}};

  cfg.store_iterates = true;
  const lpreg::IterationTrace tr = lpreg::run_solver(prob, cfg, x0);
  std::ostringstream csv;
  lpreg::write_trace(csv, tr.records);
  ctx.write_output(a.trace_out, csv.str());
  if (!a.x_out.empty()) ctx.write_output(a.x_out, lpreg::vector_to_json(tr.final_iterate()).dump() + "\n");

  const auto& last = tr.records.back();
  ctx.note(a.algo + ": " + (tr.converged ? "converged" : "max-iters reached") + " after " +
           std::to_string(tr.size() - 1) + " iterations, F = " + fmt(last.objective) +
           ", residual = " + fmt(last.residual) + ", support = " + std::to_string(last.support_size) +
           ", v = " + fmt(tr.stepsizes.empty() ? lpreg::default_stepsize(tr.norm_sq_safe) : tr.stepsizes.front()) +
           (tr.control_violations() ? ", control violations = " + std::to_string(tr.control_violations()) : ""));
  if (cfg.algorithm == lpreg::Algorithm::ipga1p && tr.converged) {
    // The value-control rate result assumes the limit is a global minimum.
    const auto g = lpreg::check_global_minimum(prob, tr.final_iterate());
    ctx.note("ipga1p limit: " + std::string(lpreg::to_string(g.status)) + " (" + g.note + ")");
  }
  if (tr.control_violations() > 0) return kExitCheck;
  return tr.converged ? kExitOk : kExitMaxIters;
}

// ---- certify --------------------------------------------------------------

struct CertifyArgs {
  std::string trace = "-";
  std::string problem;
  std::string alpha = "auto";
  std::string beta = "auto";
  std::string algo = "pga";
  std::optional<double> v;
  std::string out = "-";
  bool steps = false;
};

double parse_constant(const std::string& s, const char* field) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw lpreg::ValidationError(field, "expected 'auto' or a number, got '" + s + "'");
}

int cmd_certify(Context& ctx, const CertifyArgs& a) {
  const auto records = lpreg::parse_trace(ctx.read_input(a.trace));
  const lpreg::Problem prob = lpreg::parse_problem(ctx.read_input(a.problem));
  const lpreg::Algorithm algo = lpreg::parse_algorithm(a.algo);
  const lpreg::StepsizePlan plan = lpreg::plan_stepsizes(prob, a.v ? std::vector<double>{*a.v} : std::vector<double>{});

  const double alpha = a.alpha == "auto" ? lpreg::alpha_from_stepsize(plan.v_max, plan.norm_sq_safe)
                                         : parse_constant(a.alpha, "alpha");
  const double beta = a.beta == "auto" ? 1.0 / plan.v_min + 2.0 * plan.norm_sq_safe
                                       : parse_constant(a.beta, "beta");
  ctx.config = {{"alpha", a.alpha}, {"beta", a.beta}, {"algo", a.algo},
                {"v", a.v ? json(*a.v) : json("auto")}};

  lpreg::IterationTrace tr;
  tr.algorithm = algo;
  tr.records = records;
  tr.v_min = plan.v_min;
  tr.v_max = plan.v_max;
  tr.norm_sq = plan.norm_sq;
  tr.norm_sq_safe = plan.norm_sq_safe;
  const auto eps = lpreg::eps_from_trace(records, algo);
  const auto h1 = lpreg::certify_h1(records, alpha, eps);
  lpreg::H2Options h2opt;
  h2opt.allow_recorded_residual = true;
  const auto h2 = lpreg::certify_h2(prob, tr, beta, eps, h2opt);

  json report{{"h1", lpreg::to_json(h1, a.steps)}, {"h2", lpreg::to_json(h2, a.steps)},
              {"pass", h1.pass && h2.pass}};
  ctx.write_output(a.out, report.dump(2) + "\n");
  ctx.note(std::string("certify: H1 ") + (h1.pass ? "pass" : "FAIL") + " (alpha = " + fmt(alpha) +
           "), H2 " + (h2.pass ? "pass" : "FAIL") + " (beta = " + fmt(beta) + ")");
  return (h1.pass && h2.pass) ? kExitOk : kExitCheck;
}

// ---- rate -----------------------------------------------------------------

struct RateArgs {
  std::string trace = "-";
  std::optional<double> f_star;
  double tail_frac = 0.5;
  std::string out = "-";
};

int cmd_rate(Context& ctx, const RateArgs& a) {
  const auto records = lpreg::parse_trace(ctx.read_input(a.trace));
  // Without a reference value the final recorded F stands in for F*.
  const double F_star = a.f_star.value_or(records.back().objective);
  ctx.config = {{"F_star", a.f_star ? json(*a.f_star) : json("last")}, {"tail_frac", a.tail_frac}};
  const auto est = lpreg::fit_rate_objective(records, F_star, a.tail_frac);
  json j = lpreg::to_json(est);
  j["F_star"] = F_star;
  const auto N = lpreg::detect_support_identification(records);
  j["support_identified_at"] = N ? json(*N) : json(nullptr);
  ctx.write_output(a.out, j.dump(2) + "\n");
  ctx.note("rate: eta_hat = " + fmt(est.eta_hat) + ", r2 = " + fmt(est.r2) +
           (est.linear ? "" : " (no linear convergence detected)"));
  return kExitOk;
}

// ---- enumerate / certify-point ---------------------------------------------

struct EnumerateArgs {
  std::string problem = "-";
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  std::string out = "-";
};

int cmd_enumerate(Context& ctx, const EnumerateArgs& a) {
  const lpreg::Problem prob = lpreg::parse_problem(ctx.read_input(a.problem));
  ctx.config = {{"samples", a.samples}, {"seed", a.seed}};
  lpreg::EnumerationOptions opt;
  opt.probe_samples = a.samples;
  opt.seed = a.seed;
  const auto e = lpreg::enumerate_local_minima(prob, opt);
  json list = json::array();
  for (const auto& m : e.minima) {
    json j = lpreg::to_json(m.report);
    j["x"] = lpreg::vector_to_json(m.x);
    j["F"] = lpreg::objective(prob, m.x);
    list.push_back(std::move(j));
  }
  ctx.write_output(a.out, list.dump(2) + "\n");
  ctx.note("enumerate: " + std::to_string(e.minima.size()) + " local minima over " +
           std::to_string(e.orthants) + " orthants" + (e.complete ? "" : " (incomplete)"));
  for (const auto& w : e.warnings) ctx.note("warning: " + w);
  return kExitOk;
}

struct PointArgs {
  std::string problem;
  std::string point = "-";
  std::optional<double> delta;
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  std::string out = "-";
};

int cmd_certify_point(Context& ctx, const PointArgs& a) {
  const lpreg::Problem prob = lpreg::parse_problem(ctx.read_input(a.problem));
  const lpreg::Vector x = lpreg::parse_point(ctx.read_input(a.point));
  lpreg::detail::check_length(prob, x);
  ctx.config = {{"delta", a.delta ? json(*a.delta) : json("auto")}, {"samples", a.samples},
                {"seed", a.seed}};
  lpreg::OptimalityReport rep = lpreg::classify_point(prob, x);
  const double delta = a.delta.value_or(lpreg::default_probe_radius(prob, x));
  rep.growth = lpreg::growth_probe(prob, x, delta, a.samples, a.seed);
  json j = lpreg::to_json(rep);
  j["F"] = lpreg::objective(prob, x);
  ctx.write_output(a.out, j.dump(2) + "\n");
  ctx.note("certify-point: " + std::string(lpreg::to_string(rep.classification)) +
           ", growth violations = " + std::to_string(rep.growth->violations));
  return kExitOk;
}

// ---- prox-table -----------------------------------------------------------

struct ProxTableArgs {
  std::vector<double> z, v{1.0}, lambda{1.0}, p{0.5};
  std::string z_range;  // a:b:count
  std::string out = "-";
};

std::vector<double> linspace_spec(const std::string& spec) {
  double a = 0, b = 0;
  long n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(spec);
  if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !in.eof()) {
    throw lpreg::ValidationError("z-range", "expected a:b:count, got '" + spec + "'");
  }
  std::vector<double> out;
  for (long i = 0; i < n; ++i) {
    out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

int cmd_prox_table(Context& ctx, ProxTableArgs a) {
  if (!a.z_range.empty()) {
    const auto extra = linspace_spec(a.z_range);
    a.z.insert(a.z.end(), extra.begin(), extra.end());
  }
  if (a.z.empty()) throw lpreg::ValidationError("z", "give --z values or --z-range");
  ctx.config = {{"z", a.z}, {"v", a.v}, {"lambda", a.lambda}, {"p", a.p}};
  std::ostringstream csv;
  csv << "z,v,lambda,p,argmin,value,tie\n";
  for (double p : a.p) {
    for (double lam : a.lambda) {
      for (double v : a.v) {
        for (double z : a.z) {
          const auto r = lpreg::prox_scalar({z, v, lam, p});
          csv << fmt(z) << ',' << fmt(v) << ',' << fmt(lam) << ',' << fmt(p) << ','
              << fmt(r.selected()) << ',' << fmt(r.value) << ',' << (r.tie ? 1 : 0) << '\n';
        }
      }
    }
  }
  ctx.write_output(a.out, csv.str());
  return kExitOk;
}

// ---- repro ----------------------------------------------------------------

int cmd_repro(Context& ctx, const std::string& id, std::uint64_t seed) {
  bool known = false;
  for (const auto& e : lpreg::experiment_ids()) known = known || e == id;
  if (!known) {
    std::string list;
    for (const auto& e : lpreg::experiment_ids()) list += (list.empty() ? "" : ", ") + e;
    throw lpreg::ValidationError("experiment", "unknown id '" + id + "' (expected one of " + list + ")");
  }
  ctx.config = {{"experiment", id}, {"seed", seed}};
  lpreg::ExperimentOptions opt;
  opt.seed = seed;
  opt.threads = ctx.threads;
  const auto res = lpreg::run_experiment(id, opt);
  for (const auto& art : res.artifacts) ctx.write_output(art.name, art.content);
  json checks = json::array();
  for (const auto& c : res.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}});
    const std::string line = std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail;
    // Failed checks are the diff report and are printed even under --quiet.
    if (c.pass) ctx.note(line);
    else std::cerr << line << '\n';
  }
  ctx.config["checks"] = checks;
  ctx.note("repro " + id + ": " + (res.pass() ? "pass" : "FAIL") + " in " + fmt(res.seconds) + " s");
  return res.pass() ? kExitOk : kExitCheck;
}

int run(std::vector<std::string> args);

// ---- replay ---------------------------------------------------------------

int cmd_replay(Context& ctx, const std::string& manifest_path) {
  const json m = lpreg::detail::parse_json_text(lpreg::detail::read_file(manifest_path));
  if (!m.contains("argv") || !m["argv"].is_array()) {
    throw lpreg::ValidationError("argv", "manifest has no argv array");
  }
  for (const auto& in : m.value("inputs", json::array())) {
    if (in.value("path", "") == "-") {
      throw lpreg::ValidationError("inputs", "manifest input was read from stdin and cannot be replayed");
    }
  }
  // Same arguments, but outputs go to this invocation's --out-dir.
  std::vector<std::string> argv{"--out-dir", ctx.out_dir};
  const auto& orig = m["argv"];
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const std::string s = orig[i].get<std::string>();
    if (s == "--out-dir") {
      ++i;
      continue;
    }
    if (s.rfind("--out-dir=", 0) == 0) continue;
    argv.push_back(s);
  }
  const std::string command = m.value("command", "");
  if (command == "replay") throw lpreg::ValidationError("command", "cannot replay a replay manifest");

  const int code = run(argv);
  const fs::path fresh = fs::path(ctx.out_dir) / ("manifest-" + command + ".json");
  const json again = lpreg::detail::parse_json_text(lpreg::detail::read_file(fresh.string()));

  std::map<std::string, std::string> before, after;
  for (const auto& o : m.value("outputs", json::array())) before[o["path"]] = o["sha256"];
  for (const auto& o : again.value("outputs", json::array())) after[o["path"]] = o["sha256"];
  json diffs = json::array();
  for (const auto& [path, hash] : before) {
    const auto it = after.find(path);
    if (it == after.end()) {
      diffs.push_back({{"path", path}, {"problem", "missing"}});
    } else if (it->second != hash) {
      diffs.push_back({{"path", path}, {"problem", "hash mismatch"}, {"expected", hash}, {"got", it->second}});
    }
  }
  const bool same_code = code == m.value("exit_code", -1);
  ctx.config = {{"manifest", fs::absolute(manifest_path).lexically_normal().string()}, {"replayed", command}};
  ctx.outputs = again.value("outputs", json::array());
  ctx.inputs.push_back({{"path", fs::absolute(manifest_path).lexically_normal().string()},
                        {"sha256", sha256_hex(lpreg::detail::read_file(manifest_path))}});
  for (const auto& d : diffs) ctx.note("replay: " + d["path"].get<std::string>() + ": " + d["problem"].get<std::string>());
  if (!same_code) ctx.note("replay: exit code " + std::to_string(code) + " differs from recorded");
  const bool ok = diffs.empty() && same_code;
  ctx.note(std::string("replay ") + command + ": " + (ok ? "outputs identical" : "MISMATCH"));
  ctx.config["identical"] = ok;
  ctx.config["differences"] = diffs;
  return ok ? kExitOk : kExitCheck;
}

// ---- dispatch -------------------------------------------------------------

int run(std::vector<std::string> args) {
  CLI::App app{"l_p-regularized least squares: solvers, certification and experiments", "lpreg"};
  app.require_subcommand(1);
  Context ctx;
  ctx.argv = args;
  app.add_option("--threads", ctx.threads, "worker threads for the coordinate prox")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", ctx.quiet, "suppress the stderr summary");
  app.add_option("--out-dir", ctx.out_dir, "directory for output files and the run manifest");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "random compressed-sensing instance");
  g->add_option("--seed", gen.spec.seed);
  g->add_option("--m", gen.spec.m);
  g->add_option("--n", gen.spec.n);
  g->add_option("--sparsity,-s", gen.spec.sparsity);
  g->add_option("--noise", gen.spec.noise);
  g->add_option("--lambda", gen.spec.lambda);
  g->add_option("--p", gen.spec.p);
  g->add_option("--out", gen.out, "problem JSON ('-' for stdout)");
  g->add_option("--planted-out", gen.planted_out, "planted solution as a JSON array");

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "run PGA or an inexact variant");
  s->add_option("--algo", sol.algo)->check(CLI::IsMember({"pga", "ipga1p", "ipga2p"}));
  s->add_option("--problem", sol.problem, "problem JSON ('-' for stdin)");
  s->add_option("--p", sol.p);
  s->add_option("--lambda", sol.lambda);
  s->add_option("--v", sol.v, "constant stepsize, must satisfy v < 1/(2||A||^2)");
  s->add_flag("--auto-v", sol.auto_v, "use 0.495/||A||^2 (the default)");
  s->add_option("--tau-c", sol.tau_c);
  s->add_option("--tau-rho", sol.tau_rho);
  s->add_option("--t-c", sol.t_c);
  s->add_option("--t-rho", sol.t_rho);
  s->add_option("--knob", sol.knob, "fraction of each inexactness budget to use");
  s->add_option("--max-iters", sol.max_iters);
  s->add_option("--tol", sol.tol);
  s->add_option("--trace-out", sol.trace_out, "trace CSV ('-' for stdout)");
  s->add_option("--x-out", sol.x_out, "final iterate as a JSON array");
  s->add_option("--x0", sol.x0, "starting point as a JSON array file");
  s->add_option("--seed", sol.seed);

  CertifyArgs cer;
  auto* c = app.add_subcommand("certify", "check H1/H2 on a trace");
  c->add_option("--trace", cer.trace, "trace CSV ('-' for stdin)");
  c->add_option("--problem", cer.problem)->required();
  c->add_option("--alpha", cer.alpha, "auto or a value");
  c->add_option("--beta", cer.beta, "auto or a value");
  c->add_option("--algo", cer.algo, "algorithm that produced the trace")->check(CLI::IsMember({"pga", "ipga1p", "ipga2p"}));
  c->add_option("--v", cer.v, "stepsize used by the run (default: automatic)");
  c->add_flag("--steps", cer.steps, "include per-step checks");
  c->add_option("--out", cer.out);

  RateArgs rat;
  auto* r = app.add_subcommand("rate", "fit a linear rate to F(x^k) - F*");
  r->add_option("--trace", rat.trace, "trace CSV ('-' for stdin)");
  r->add_option("--F-star", rat.f_star, "reference value (default: last F)");
  r->add_option("--tail-frac", rat.tail_frac);
  r->add_option("--out", rat.out);

  EnumerateArgs en;
  auto* e = app.add_subcommand("enumerate", "all local minima (n <= 12)");
  e->add_option("--problem", en.problem);
  e->add_option("--samples", en.samples);
  e->add_option("--seed", en.seed);
  e->add_option("--out", en.out);

  PointArgs pt;
  auto* cp = app.add_subcommand("certify-point", "classify a point and probe growth");
  cp->add_option("--problem", pt.problem)->required();
  cp->add_option("--point", pt.point, "JSON array file ('-' for stdin)");
  cp->add_option("--delta", pt.delta);
  cp->add_option("--samples", pt.samples);
  cp->add_option("--seed", pt.seed);
  cp->add_option("--out", pt.out);

  ProxTableArgs pta;
  auto* pt_cmd = app.add_subcommand("prox-table", "scalar prox on a grid as CSV");
  pt_cmd->add_option("--z", pta.z)->delimiter(',');
  pt_cmd->add_option("--z-range", pta.z_range, "a:b:count");
  pt_cmd->add_option("--v", pta.v)->delimiter(',');
  pt_cmd->add_option("--lambda", pta.lambda)->delimiter(',');
  pt_cmd->add_option("--p", pta.p)->delimiter(',');
  pt_cmd->add_option("--out", pta.out);

  std::string repro_id;
  std::uint64_t repro_seed = 0;
  auto* rp = app.add_subcommand("repro", "run an acceptance experiment");
  rp->add_option("id", repro_id, "pga-linear, ipga1-linear, ipga2-linear, equivalence or prox-pin")->required();
  rp->add_option("--seed", repro_seed, "0 keeps the experiment default");

  std::string manifest;
  auto* rl = app.add_subcommand("replay", "rerun from a manifest and compare outputs");
  rl->add_option("manifest", manifest)->required();

  std::vector<const char*> cargv{"lpreg"};
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::string command;
  int code = kExitOk;
  try {
    if (g->parsed()) {
      command = "generate";
      code = cmd_generate(ctx, gen);
    } else if (s->parsed()) {
      command = "solve";
      code = cmd_solve(ctx, sol);
    } else if (c->parsed()) {
      command = "certify";
      code = cmd_certify(ctx, cer);
    } else if (r->parsed()) {
      command = "rate";
      code = cmd_rate(ctx, rat);
    } else if (e->parsed()) {
      command = "enumerate";
      code = cmd_enumerate(ctx, en);
    } else if (cp->parsed()) {
      command = "certify-point";
      code = cmd_certify_point(ctx, pt);
    } else if (pt_cmd->parsed()) {
      command = "prox-table";
      code = cmd_prox_table(ctx, pta);
    } else if (rp->parsed()) {
      command = "repro";
      code = cmd_repro(ctx, repro_id, repro_seed);
    } else if (rl->parsed()) {
      command = "replay";
      code = cmd_replay(ctx, manifest);
    }
  } catch (const lpreg::ConvergenceError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitMaxIters;
  } catch (const lpreg::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    ctx.write_manifest(command, code, seconds);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

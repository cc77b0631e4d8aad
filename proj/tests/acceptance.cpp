// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <lpreg/experiments.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#ifndef LPREG_CLI_PATH
#error "LPREG_CLI_PATH must name the CLI binary"
#endif

using namespace lpreg;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok: " : "failed: ") + what);
  }
};

// Routes each check of `res` to the criterion chosen by `route`.
template <class Route>
void distribute(const ExperimentResult& res, Route route) {
  for (const auto& c : res.checks) route(c.name).require(c.pass, res.id + ": " + c.name + ": " + c.detail);
}

void runtime(Criterion& c, const ExperimentResult& res, double limit) {
  std::ostringstream s;
  s << res.id << " runtime " << res.seconds << " s (limit " << limit << " s)";
  c.require(res.seconds < limit, s.str());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

// repro into A, replay the manifest into B, compare every output byte for byte.
void determinism(Criterion& c, const fs::path& root) {
  fs::remove_all(root);
  for (const std::string& id : experiment_ids()) {
    const fs::path a = root / id / "A", b = root / id / "B";
    fs::create_directories(a);
    fs::create_directories(b);
    const std::string cli = quote(LPREG_CLI_PATH);
    const int rc = shell(cli + " --quiet --out-dir " + quote(a) + " repro " + id + " > /dev/null");
    c.require(rc == 0, id + ": repro exit " + std::to_string(rc));
    const fs::path manifest = a / "manifest-repro.json";
    if (!fs::exists(manifest)) {
      c.require(false, id + ": no manifest written");
      continue;
    }
    const int rr = shell(cli + " --quiet --out-dir " + quote(b) + " replay " + quote(manifest) + " > /dev/null");
    c.require(rr == 0, id + ": replay exit " + std::to_string(rr));

    std::set<std::string> outputs;
    for (const auto& e : fs::directory_iterator(a)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("manifest-", 0) != 0) outputs.insert(name);
    }
    std::size_t same = 0;
    for (const auto& name : outputs) {
      const bool eq = fs::exists(b / name) && read_file(a / name) == read_file(b / name);
      if (eq) ++same;
      else c.require(false, id + ": " + name + " differs after replay");
    }
    c.require(!outputs.empty() && same == outputs.size(),
              id + ": " + std::to_string(same) + "/" + std::to_string(outputs.size()) + " outputs identical");
  }
}

}  // namespace

int main() {
  std::vector<Criterion> cs{
      {1, "prox oracle equivalence"},
      {2, "nonzero lower bound on prox outputs and PGA iterates"},
      {3, "exact PGA linear convergence"},
      {4, "inexact PGA (value and distance control) linear convergence"},
      {5, "local-minimum characterizations agree"},
      {6, "geometric recursion bound"},
      {7, "H1/H2 certification closure"},
      {8, "repro runs replay byte-identically"},
  };
  auto& c1 = cs[0];
  auto& c2 = cs[1];
  auto& c3 = cs[2];
  auto& c4 = cs[3];
  auto& c5 = cs[4];
  auto& c6 = cs[5];
  auto& c7 = cs[6];
  auto& c8 = cs[7];

  try {
    const ExperimentResult prox = run_prox_pin();
    distribute(prox, [&](const std::string& n) -> Criterion& {
      return n.find("lower bound") != std::string::npos ? c2 : c1;
    });
    runtime(c1, prox, 30.0);

    const ExperimentResult pga = run_pga_linear();
    distribute(pga, [&](const std::string& n) -> Criterion& {
      if (n.find("lower bound") != std::string::npos) return c2;
      if (n.rfind("H1", 0) == 0 || n.rfind("H2", 0) == 0) return c7;
      return c3;
    });
    runtime(c3, pga, 60.0);

    const ExperimentResult ipga1 = run_ipga_linear(Algorithm::ipga1p);
    distribute(ipga1, [&](const std::string& n) -> Criterion& { return n.rfind("H1", 0) == 0 ? c7 : c4; });
    const ExperimentResult ipga2 = run_ipga_linear(Algorithm::ipga2p);
    distribute(ipga2, [&](const std::string& n) -> Criterion& { return n.rfind("H1", 0) == 0 ? c7 : c4; });

    const ExperimentResult eq = run_equivalence();
    distribute(eq, [&](const std::string&) -> Criterion& { return c5; });
    runtime(c5, eq, 120.0);

    distribute(run_geometric_recursion(), [&](const std::string&) -> Criterion& { return c6; });

    determinism(c8, fs::current_path() / "acceptance-runs");
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << '\n';
    return 2;
  }

  bool all = true;
  for (auto& c : cs) {
    if (c.notes.empty()) c.require(false, "no checks ran");
  }
  for (const auto& c : cs) {
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << '\n';
    for (const auto& n : c.notes) std::cout << "    " << n << '\n';
    all = all && c.pass;
  }
  return all ? 0 : 1;
}

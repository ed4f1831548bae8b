// Acceptance run: one PASS/FAIL line per criterion on the bundled scenario.
// usage: acceptance <qgevrey binary> <work dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qgevrey/scenario.hpp"

namespace fs = std::filesystem;
using namespace qgevrey;

namespace {

struct BlockRun {
  std::vector<Check> checks;
  double seconds = 0.0;
  int exit_code = 0;
  std::string message;
};

BlockRun run_block(const Scenario& sc, const std::string& block, const fs::path& work) {
  RunOptions opt;
  opt.out_dir = work / ("block_" + block);
  opt.only = {block};
  const auto t0 = std::chrono::steady_clock::now();
  BlockRun r;
  const auto res = run_scenario(sc, opt);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.checks = res.checks;
  r.exit_code = res.exit_code;
  r.message = res.message;
  return r;
}

const Check* find(const BlockRun& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int failures = 0;

// Every named check must be present and passing, and the block must fit its time budget.
void report(int n, const std::string& title, const BlockRun& r, const std::vector<std::string>& names,
            double budget) {
  bool ok = r.seconds < budget;
  std::ostringstream detail;
  for (const auto& name : names) {
    const Check* c = find(r, name);
    if (!c) {
      ok = false;
      detail << name << "=missing; ";
      continue;
    }
    ok = ok && c->pass;
    detail << name << "=" << fmt(c->measured) << " " << c->relation << " " << fmt(c->tolerance)
           << "; ";
  }
  if (!r.message.empty() && r.exit_code == 2) {
    ok = false;
    detail << r.message << "; ";
  }
  detail << "time " << fmt(r.seconds) << " s (< " << fmt(budget) << ")";
  if (!ok) ++failures;
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", n, title.c_str(), detail.str().c_str());
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> csvs(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      m[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return m;
}

void determinism(const std::string& exe, const fs::path& work, const fs::path& scenario) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::map<std::string, std::string>> runs;
  bool ok = true;
  std::ostringstream detail;
  for (const char* tag : {"run_a", "run_b"}) {
    const fs::path out = work / tag;
    fs::remove_all(out);
    const std::string cmd = "\"" + exe + "\" run \"" + scenario.string() + "\" --out \"" +
                            out.string() + "\" > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
      ok = false;
      detail << tag << " exit status " << rc << "; ";
    }
    runs.push_back(fs::exists(out) ? csvs(out) : std::map<std::string, std::string>{});
  }
  int differing = 0;
  for (const auto& [name, body] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != body) ++differing;
  }
  for (const auto& [name, body] : runs[1])
    if (!runs[0].count(name)) ++differing;
  ok = ok && differing == 0 && !runs[0].empty();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail << runs[0].size() << " CSVs compared, " << differing << " differ; time " << fmt(secs)
         << " s";
  if (!ok) ++failures;
  std::printf("[%s] 11 determinism: %s\n", ok ? "PASS" : "FAIL", detail.str().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <qgevrey binary> <work dir>\n");
    return 2;
  }
  const fs::path scenario = QGEVREY_SCENARIO;
  const fs::path work = argv[2];
  fs::remove_all(work);
  fs::create_directories(work);

  Scenario sc;
  try {
    sc = load_scenario(scenario);
  } catch (const std::exception& e) {
    std::printf("[FAIL] 0 load scenario: %s\n", e.what());
    return 1;
  }

  const auto solve = run_block(sc, "solve", work);
  report(1, "laplace monomial identity", solve, {"laplace_monomial"}, 5);

  const auto borel = run_block(sc, "borel", work);
  report(2, "borel recursion residual", borel, {"series_residual"}, 10);
  report(3, "holomorphy domain", borel, {"holomorphy_domain"}, 5);

  report(4, "pde residual", run_block(sc, "residual", work), {"pde_residual"}, 60);
  report(5, "cocycle flatness", run_block(sc, "cocycle", work), {"cocycle_decay"}, 120);
  report(6, "dirichlet identity and bound", run_block(sc, "dirichlet", work),
         {"euler_maclaurin_identity", "dirichlet_E1_stability"}, 10);

  const auto asym = run_block(sc, "asymptotics", work);
  report(7, "gaussian identity", asym, {"gaussian_identity"}, 1);

  const auto ch = run_block(sc, "cauchy-heine", work);
  report(8, "cauchy-heine coboundary", ch, {"coboundary_gap"}, 30);
  report(9, "coefficient envelope", ch, {"alpha_envelope"}, 30);

  report(10, "flatness type round trip", asym,
         {"flat_type_A=0.5", "flat_type_A=1", "flat_type_A=2", "watson_transfer"}, 20);

  determinism(argv[1], work, scenario);

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

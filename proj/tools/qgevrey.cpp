#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qgevrey/scenario.hpp"
#include "qgevrey/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"q-Gevrey summation and asymptotics toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the blocks of a scenario config");
  std::string config, out, only;
  int threads = 1;
  std::uint64_t seed = 20240601;
  run->add_option("config", config, "scenario JSON")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--only", only, "comma-separated block names");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "random seed for sampled checks");

  CLI11_PARSE(app, argc, argv);

  qgevrey::RunOptions opt;
  opt.out_dir = out;
  opt.threads = threads;
  opt.seed = seed;
  if (const char* c = std::getenv("QGEVREY_CACHE_DIR"); c && *c) opt.cache_dir = c;
  std::stringstream ss(only);
  for (std::string b; std::getline(ss, b, ',');)
    if (!b.empty()) opt.only.insert(b);
  qgevrey::set_default_threads(threads);

  qgevrey::Scenario sc;
  try {
    sc = qgevrey::load_scenario(config);
  } catch (const qgevrey::ValidationError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const qgevrey::HypothesisError& e) {
    std::cerr << "hypothesis error: " << e.what() << "\n";
    return 2;
  }

  qgevrey::RunResult res;
  try {
    res = qgevrey::run_scenario(sc, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  int passed = 0;
  for (const auto& c : res.checks) passed += c.pass;
  std::cout << sc.name << ": " << passed << "/" << res.checks.size() << " checks passed, "
            << res.files.size() << " files in " << out << "\n";
  if (!res.message.empty()) std::cerr << res.message << "\n";
  return res.exit_code;
}

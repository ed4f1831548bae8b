#include "qgevrey/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace qgevrey {

namespace {
std::atomic<int> g_threads{1};
}

int default_threads() { return g_threads.load(); }
void set_default_threads(int n) { g_threads.store(std::max(1, n)); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 0) threads = default_threads();
  const std::size_t t = std::min<std::size_t>(threads, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) body(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

double gaussian_moment(double a) {
  // Integrand peaks at -a/2 and is below 1e-35 once |x + a/2| > 9.
  const double c = -a / 2;
  std::vector<double> br;
  for (int k = -9; k <= 9; ++k) br.push_back(c + k);
  auto f = [a](double x) { return std::exp(-x * x - a * x); };
  return integrate_panels<double>(f, br, 24).value;
}

}  // namespace qgevrey

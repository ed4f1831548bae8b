#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace qgevrey {

// Integer power by repeated squaring.
template <typename T>
T ipow(T x, int n) {
  if (n < 0) return T(1) / ipow(x, -n);
  T r(1);
  while (n) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

// Pairwise (tree) summation; order depends only on the input length.
template <typename T>
T pairwise_sum(const T* v, std::size_t n) {
  if (n == 0) return T(0);
  if (n <= 8) {
    T s = v[0];
    for (std::size_t i = 1; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

// Runs body(i) for i in [0, n) on up to `threads` workers with a static index split.
// Each index writes its own slot, so results do not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

int default_threads();
void set_default_threads(int n);

}  // namespace qgevrey

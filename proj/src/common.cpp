#include "dsdsim/common.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace dsd {

double wrap_2pi(double x) {
  double y = x - two_pi * std::floor(x / two_pi);
  if (y >= two_pi) y -= two_pi;
  if (y < 0) y = 0;
  return y;
}

double wrap_unit(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y -= 1.0;
  if (y < 0) y = 0;
  return y;
}

double unit_distance(double a, double b) {
  double d = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

cplx randn_c(rng_t& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  double re = n(rng);
  double im = n(rng);
  return {re, im};
}

rng_t trial_rng(std::uint64_t seed, std::uint64_t trial) {
  return rng_t(seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1)));
}

void parallel_for(int jobs, int n, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  int k = std::min(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace dsd

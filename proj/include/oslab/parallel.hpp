#pragma once

// Static-chunk parallel map and order-independent reductions.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace oslab {

/// Worker count from an explicit request, falling back to OSL_LAB_THREADS and
/// then to 1. Always at least 1.
int resolve_threads(int requested);

/// out[i] = fn(i) for i < count, using up to `threads` workers. The result does
/// not depend on the worker count. The first exception thrown by any worker
/// is rethrown after all workers join.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int threads, Fn&& fn) {
  std::vector<T> out(count);
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(count, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Pairwise-tree sum; the association order is fixed by the length alone.
double pairwise_sum(const double* data, std::size_t count);

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;  ///< sample standard deviation / sqrt(count)
  std::size_t count = 0;
};

/// Mean and standard error of the finite entries. Infinite entries are left
/// to the caller.
MeanAndError mean_and_error(const std::vector<double>& values);

/// Wilson score interval for `hits` successes out of `total`.
struct WilsonInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};
WilsonInterval wilson_interval(std::size_t hits, std::size_t total, double z = 1.959964);

/// Ordinary least squares y = a + b x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> residuals;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// Empirical quantile with linear interpolation (q in [0, 1]) of unsorted data.
double quantile(std::vector<double> values, double q);

}  // namespace oslab

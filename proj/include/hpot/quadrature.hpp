// One-dimensional rules, deterministic summation, and a data-parallel loop.
#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hpot {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Cached per n; thread-safe.
const Rule1D& gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [lo, hi].
Rule1D gauss_legendre(int n, double lo, double hi);

/// Pairwise (cascade) sum in fixed order; results do not depend on threading.
std::complex<double> pairwise_sum(std::span<const std::complex<double>> v);
double pairwise_sum(std::span<const double> v);

/// Worker count: HPOTENTIAL_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. body must only write
/// to per-index storage.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);

}  // namespace hpot

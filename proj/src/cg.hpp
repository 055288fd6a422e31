#pragma once

// Preconditioned conjugate gradient over flat double vectors. Internal header.

#include <cmath>
#include <span>
#include <vector>

#include "rainflow/parallel.hpp"

namespace rainflow::detail {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

/// Solves A x = b for symmetric positive definite A, starting from the
/// contents of x. `apply(in, out)` computes out = A in; `precondition(in, out)`
/// computes out = M^-1 in.
template <class Apply, class Precondition>
CgResult conjugate_gradient(Apply&& apply, Precondition&& precondition,
                            std::span<const double> b, std::span<double> x, double tolerance,
                            int max_iterations) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(q));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  const double b_norm = std::sqrt(dot(b, b));
  CgResult res;
  if (b_norm == 0.0) {
    // A is definite, so the solution is zero.
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.0;
    return res;
  }
  double r_norm = std::sqrt(dot(r, r));
  res.relative_residual = r_norm / b_norm;
  if (res.relative_residual <= tolerance) return res;

  precondition(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iterations; ++it) {
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double step = rz / pq;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      x[i] += step * p[i];
      r[i] -= step * q[i];
    }
    res.iterations = it + 1;
    r_norm = std::sqrt(dot(r, r));
    res.relative_residual = r_norm / b_norm;
    if (res.relative_residual <= tolerance) break;
    precondition(std::span<const double>(r), std::span<double>(z));
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      p[i] = z[i] + beta * p[i];
    }
  }
  return res;
}

}  // namespace rainflow::detail

#pragma once

#include <cstddef>
#include <vector>

namespace rainflow {

/// Caps the OpenMP worker count used by every kernel. 0 restores the default.
void set_thread_count(int threads);
int thread_count();

/// Fixed reduction chunk. Partial sums are formed per chunk of this many terms
/// and then added serially in chunk order, so results do not depend on the
/// number of worker threads.
inline constexpr std::size_t kReductionChunk = 4096;

template <class Term>
double deterministic_sum(std::size_t n, Term&& term) {
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t hi = lo + kReductionChunk < n ? lo + kReductionChunk : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace rainflow

#include "rainflow/parallel.hpp"

#include <omp.h>

namespace rainflow {

namespace {
int default_threads() {
  static const int n = omp_get_num_procs();
  return n > 0 ? n : 1;
}
}  // namespace

void set_thread_count(int threads) { omp_set_num_threads(threads > 0 ? threads : default_threads()); }

int thread_count() { return omp_get_max_threads(); }

}  // namespace rainflow

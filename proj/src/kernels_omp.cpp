#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pcaet/kernels.hpp"

namespace pcaet::kernels {

namespace omp {

#define PCAET_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#include "kernels_body.inc"
#undef PCAET_PARALLEL_FOR

}  // namespace omp

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace pcaet::kernels

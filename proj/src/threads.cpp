#include "vdmforge/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vdmforge {

namespace {
int g_thread_cap = 0;
}

void set_thread_cap(int n) {
  g_thread_cap = n < 0 ? 0 : n;
#ifdef _OPENMP
  if (g_thread_cap > 0) omp_set_num_threads(g_thread_cap);
#endif
}

int thread_cap() { return g_thread_cap; }

int effective_threads() {
#ifdef _OPENMP
  return g_thread_cap > 0 ? g_thread_cap : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace vdmforge

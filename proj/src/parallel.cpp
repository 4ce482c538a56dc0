#include "morphon/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace morphon {

namespace {

int default_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("MORPHON_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_override{0};

}  // namespace

int thread_count() {
#ifdef _OPENMP
  const int forced = g_override.load();
  if (forced > 0) return forced;
  static const int n = default_threads();
  return n;
#else
  return 1;
#endif
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace morphon

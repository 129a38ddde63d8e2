#include "occlab/parallel.hpp"

#include <cstdlib>

namespace occlab {

int default_thread_count() {
  if (const char* env = std::getenv("OCCUPANCY_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

}  // namespace occlab

#include "equistop/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace equistop {

void ExceptionSlot::Capture(std::size_t index) noexcept {
  std::lock_guard<std::mutex> lock(mu_);
  if (index < index_) {
    index_ = index;
    ptr_ = std::current_exception();
  }
}

void ExceptionSlot::Rethrow() const {
  if (ptr_) std::rethrow_exception(ptr_);
}

int ConfigureThreadsFromEnv() {
  if (const char* env = std::getenv("EQUISTOP_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0 && cap < omp_get_max_threads()) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // Ignore malformed values.
    }
  }
  return omp_get_max_threads();
}

int MaxThreads() { return omp_get_max_threads(); }

}  // namespace equistop

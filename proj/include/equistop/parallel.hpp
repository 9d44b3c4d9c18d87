#pragma once

#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>

namespace equistop {

// Collects exceptions thrown inside an OpenMP loop body and rethrows the one
// from the smallest index, so failures do not depend on the schedule.
class ExceptionSlot {
 public:
  // Call from inside a catch block.
  void Capture(std::size_t index) noexcept;
  void Rethrow() const;

 private:
  std::mutex mu_;
  std::exception_ptr ptr_;
  std::size_t index_ = std::numeric_limits<std::size_t>::max();
};

// Applies EQUISTOP_THREADS (if set) as an upper bound on OpenMP threads.
// Returns the resulting thread count.
int ConfigureThreadsFromEnv();

int MaxThreads();

}  // namespace equistop

#ifndef MFAC_PARALLEL_HPP
#define MFAC_PARALLEL_HPP

#include <functional>

namespace mfac {

// Worker count: explicit setter wins, else MFAC_THREADS, else 1.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n); results must not depend on the schedule.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace mfac

#endif

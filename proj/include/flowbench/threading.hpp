#pragma once

#include <cstdint>
#include <functional>

namespace flowbench {

// Process-wide worker count used by parallel_for. Defaults to 1; the CLI sets
// it from --threads / FLOWBENCH_THREADS. Work is split into chunks whose
// boundaries do not depend on the thread count, so outputs written to
// independent slots are bitwise identical for any setting.
void set_thread_count(int n);
int thread_count();

// Reads FLOWBENCH_THREADS; falls back to `fallback` when unset or invalid.
int threads_from_env(int fallback);

// Runs fn(i) for i in [0, n). Each index must write only to its own outputs.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace flowbench

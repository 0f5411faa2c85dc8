#pragma once

#include <cstddef>
#include <functional>

namespace flagcurv {

/// Worker count: min(hardware, FLAGCURV_THREADS). At least 1.
int worker_count();

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
/// any randomness inside fn must be derived from the index so the outcome
/// is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace flagcurv

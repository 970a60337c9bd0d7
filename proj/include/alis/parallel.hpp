#pragma once

namespace alis {

// Worker-count control for the OpenMP kernels. Kernels keep a fixed
// accumulation order per output element, so the thread count never changes
// results, only wall time.
void set_num_threads(int n);
int num_threads();

// Applies ALIS_THREADS when set to a positive integer. Returns the count in
// effect afterwards.
int configure_threads_from_env();

}  // namespace alis

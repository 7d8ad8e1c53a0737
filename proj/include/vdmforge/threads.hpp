#pragma once

namespace vdmforge {

// Caps the number of OpenMP threads used by all kernels. 0 keeps the
// runtime default. Every kernel in this library uses a fixed block
// decomposition, so results are identical for any cap.
void set_thread_cap(int n);
int thread_cap();

// Effective parallel width for the current cap.
int effective_threads();

}  // namespace vdmforge

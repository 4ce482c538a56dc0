#pragma once

namespace morphon {

// Worker count for internal data parallelism. Reads MORPHON_THREADS once;
// unset or invalid means "use the OpenMP default". Always 1 without OpenMP.
int thread_count();

// Overrides the environment for the rest of the process (n < 1 resets).
void set_thread_count(int n);

}  // namespace morphon

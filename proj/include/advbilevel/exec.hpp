#pragma once

namespace advbilevel {

// Selects between the OpenMP kernels and the plain serial reference loops.
// Both produce bitwise identical results: every reduction runs over samples
// in increasing index order regardless of thread count.
enum class Exec { serial, parallel };

int max_threads();

}  // namespace advbilevel

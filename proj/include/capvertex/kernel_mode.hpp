#pragma once

namespace capvertex {

/// Serial reference loops or OpenMP kernels. Both produce identical values:
/// the parallel kernels compute per-element terms independently and reduce
/// them in the same fixed order as the serial loops.
enum class KernelMode { Serial, Parallel };

}  // namespace capvertex

#pragma once

namespace gfs {

// Execution policy for the candidate-scan kernels.  Both policies produce
// bit-identical results; OpenMp distributes the scan across threads with a
// deterministic (score, index) reduction.
enum class Exec { Serial, OpenMp };

}  // namespace gfs

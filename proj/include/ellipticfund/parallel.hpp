#pragma once

namespace ellipticfund {

/// Worker count for OpenMP kernels: ELLIPTICFUND_THREADS when set to a
/// positive integer, else the OpenMP default.
int worker_threads();

}  // namespace ellipticfund

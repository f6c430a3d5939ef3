#include "ellipticfund/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace ellipticfund {

int worker_threads() {
    if (const char* env = std::getenv("ELLIPTICFUND_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return omp_get_max_threads();
}

}  // namespace ellipticfund

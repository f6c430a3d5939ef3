#include "ellipticfund/error.hpp"

namespace ellipticfund {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::internal: return "internal";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::step_size: return "step_size";
        case ErrorKind::bracket: return "bracket";
        case ErrorKind::decomposition: return "decomposition";
        case ErrorKind::undefined_ratio: return "undefined_ratio";
        case ErrorKind::classification: return "classification";
        case ErrorKind::ladder_too_deep: return "ladder_too_deep";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace ellipticfund

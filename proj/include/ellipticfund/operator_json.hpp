#pragma once

#include <string>

#include "ellipticfund/canonical_json.hpp"
#include "ellipticfund/operator.hpp"

namespace ellipticfund {

/// Parses the operator schema
///   {"kind": "pucci+"|"pucci-"|"linear"|"supinf"|"infsup"|"eigen_sym",
///    "dim": n, "lambda": x, "Lambda": y, "A"?, "families"?, "coeffs"?}
/// Matrices are full row-major n×n arrays, symmetrized on load; asymmetry
/// above 1e-8 is rejected. Errors are invalid_input with the field path.
OperatorSpec operator_from_json(const Json& j);

Json operator_to_json(const OperatorSpec& op);

/// Digest of the canonical JSON form.
std::string operator_hash(const OperatorSpec& op);

OperatorSpec load_operator_file(const std::string& path);

}  // namespace ellipticfund

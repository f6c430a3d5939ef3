#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace ellipticfund {

using Json = nlohmann::json;

/// Compact JSON with sorted keys and every floating value printed with 17
/// significant digits via std::to_chars (locale independent). Non-finite
/// floats become null.
std::string canonical_dump(const Json& j);

/// 64-bit FNV-1a digest rendered as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Formats a double the same way canonical_dump does.
std::string format_double(double v);

}  // namespace ellipticfund

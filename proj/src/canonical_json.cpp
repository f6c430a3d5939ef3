#include "ellipticfund/canonical_json.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace ellipticfund {

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    if (v == 0.0) return "0.0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    std::string s(buf, res.ptr);
    // keep a float marker so round-trips stay floating
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

namespace {

void dump_into(const Json& j, std::string& out) {
    switch (j.type()) {
        case Json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                dump_into(it.value(), out);
            }
            out += '}';
            break;
        }
        case Json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                dump_into(v, out);
            }
            out += ']';
            break;
        }
        case Json::value_t::number_float:
            out += format_double(j.get<double>());
            break;
        default:
            out += j.dump();
    }
}

}  // namespace

std::string canonical_dump(const Json& j) {
    std::string out;
    dump_into(j, out);
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ellipticfund

#include "ellipticfund/operator_json.hpp"

#include <cmath>
#include <fstream>
#include <variant>

#include "ellipticfund/error.hpp"

namespace ellipticfund {

namespace {

constexpr double kAsymmetryTol = 1e-8;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    fail(ErrorKind::invalid_input, path + ": " + what);
}

double number_at(const Json& j, const std::string& key) {
    if (!j.contains(key)) bad(key, "missing");
    if (!j[key].is_number()) bad(key, "expected a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) bad(key, "not finite");
    return v;
}

SymMatrix matrix_at(const Json& j, int n, const std::string& path) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) bad(path, "expected " + std::to_string(n) + " rows");
    std::vector<double> full(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != n) bad(rp, "expected " + std::to_string(n) + " columns");
        for (int k = 0; k < n; ++k) {
            const Json& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number()) bad(rp + "[" + std::to_string(k) + "]", "expected a number");
            full[i * n + k] = v.get<double>();
            if (!std::isfinite(full[i * n + k])) bad(rp + "[" + std::to_string(k) + "]", "not finite");
        }
    }
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
            if (std::abs(full[i * n + k] - full[k * n + i]) > kAsymmetryTol)
                bad(path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]",
                    "asymmetry " + std::to_string(std::abs(full[i * n + k] - full[k * n + i])) + " exceeds 1e-8");
    return SymMatrix::from_full(n, full);
}

std::vector<MatrixFamily> families_at(const Json& j, int n) {
    if (!j.contains("families") || !j["families"].is_array()) bad("families", "missing or not an array");
    std::vector<MatrixFamily> fams;
    const Json& fj = j["families"];
    for (std::size_t i = 0; i < fj.size(); ++i) {
        const std::string p = "families[" + std::to_string(i) + "]";
        if (!fj[i].is_array()) bad(p, "expected an array of matrices");
        MatrixFamily fam;
        for (std::size_t k = 0; k < fj[i].size(); ++k)
            fam.push_back(matrix_at(fj[i][k], n, p + "[" + std::to_string(k) + "]"));
        fams.push_back(std::move(fam));
    }
    return fams;
}

Json matrix_json(const SymMatrix& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.dim(); ++i) {
        Json row = Json::array();
        for (int k = 0; k < m.dim(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

Json families_json(const std::vector<MatrixFamily>& fams) {
    Json out = Json::array();
    for (const auto& fam : fams) {
        Json f = Json::array();
        for (const auto& a : fam) f.push_back(matrix_json(a));
        out.push_back(f);
    }
    return out;
}

}  // namespace

OperatorSpec operator_from_json(const Json& j) {
    if (!j.is_object()) bad("$", "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string()) bad("kind", "missing or not a string");
    if (!j.contains("dim") || !j["dim"].is_number_integer()) bad("dim", "missing or not an integer");
    const std::string kind = j["kind"].get<std::string>();
    const int n = j["dim"].get<int>();
    if (n < kMinDim || n > kMaxDim) bad("dim", "outside [2, 8]");
    const EllipticityPair pair{number_at(j, "lambda"), number_at(j, "Lambda")};
    if (!(pair.lambda > 0.0) || pair.Lambda < pair.lambda) bad("lambda", "need 0 < lambda <= Lambda");

    OperatorSpec op;
    op.dim = n;
    op.declared = pair;
    if (kind == "pucci+") {
        op.variant = PucciPlus{pair};
    } else if (kind == "pucci-") {
        op.variant = PucciMinus{pair};
    } else if (kind == "linear") {
        if (!j.contains("A")) bad("A", "missing");
        op.variant = Linear{matrix_at(j["A"], n, "A")};
    } else if (kind == "supinf") {
        op.variant = SupInf{families_at(j, n)};
    } else if (kind == "infsup") {
        op.variant = InfSup{families_at(j, n)};
    } else if (kind == "eigen_sym") {
        if (!j.contains("coeffs") || !j["coeffs"].is_array()) bad("coeffs", "missing or not an array");
        std::vector<double> c;
        for (std::size_t i = 0; i < j["coeffs"].size(); ++i) {
            if (!j["coeffs"][i].is_number()) bad("coeffs[" + std::to_string(i) + "]", "expected a number");
            c.push_back(j["coeffs"][i].get<double>());
        }
        op.variant = EigenSymmetric{std::move(c)};
    } else {
        bad("kind", "unknown operator kind '" + kind + "'");
    }
    validate(op);
    return op;
}

Json operator_to_json(const OperatorSpec& op) {
    Json j;
    j["kind"] = kind_name(op);
    j["dim"] = op.dim;
    j["lambda"] = op.declared.lambda;
    j["Lambda"] = op.declared.Lambda;
    if (const auto* l = std::get_if<Linear>(&op.variant)) j["A"] = matrix_json(l->A);
    if (const auto* s = std::get_if<SupInf>(&op.variant)) j["families"] = families_json(s->families);
    if (const auto* s = std::get_if<InfSup>(&op.variant)) j["families"] = families_json(s->families);
    if (const auto* e = std::get_if<EigenSymmetric>(&op.variant)) j["coeffs"] = e->coeffs;
    return j;
}

std::string operator_hash(const OperatorSpec& op) { return fnv1a_hex(canonical_dump(operator_to_json(op))); }

OperatorSpec load_operator_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "spec-file: cannot open '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::invalid_input, "spec-file: parse error: " + std::string(e.what()));
    }
    return operator_from_json(j);
}

}  // namespace ellipticfund

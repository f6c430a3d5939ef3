#include "ellipticfund/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ellipticfund/error.hpp"

namespace ellipticfund {

namespace {

constexpr double kFamilyTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_bounded(const SymMatrix& a, const EllipticityPair& pair, int n, const std::string& path) {
    if (a.dim() != n)
        fail(ErrorKind::invalid_input, path + ": dimension " + std::to_string(a.dim()) + " != " + std::to_string(n));
    if (!a.all_finite()) fail(ErrorKind::invalid_input, path + ": non-finite entry");
    std::array<double, kMaxDim> mu{};
    eigenvalues_sym(a, std::span<double>(mu.data(), static_cast<std::size_t>(n)));
    if (mu[0] < pair.lambda - kFamilyTol || mu[n - 1] > pair.Lambda + kFamilyTol)
        fail(ErrorKind::invalid_input, path + ": eigenvalues [" + std::to_string(mu[0]) + ", " +
                                           std::to_string(mu[n - 1]) + "] outside [lambda, Lambda]");
}

void check_families(const std::vector<MatrixFamily>& families, const EllipticityPair& pair, int n) {
    if (families.empty()) fail(ErrorKind::invalid_input, "families: empty");
    for (std::size_t i = 0; i < families.size(); ++i) {
        if (families[i].empty()) fail(ErrorKind::invalid_input, "families[" + std::to_string(i) + "]: empty");
        for (std::size_t j = 0; j < families[i].size(); ++j)
            check_bounded(families[i][j], pair, n,
                          "families[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
}

inline double neg_trace(const SymMatrix& a, const SymMatrix& m) { return -a.trace_product(m); }

double sup_inf(const std::vector<MatrixFamily>& families, const SymMatrix& m) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& fam : families) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& a : fam) worst = std::min(worst, neg_trace(a, m));
        best = std::max(best, worst);
    }
    return best;
}

double inf_sup(const std::vector<MatrixFamily>& families, const SymMatrix& m) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& fam : families) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& a : fam) worst = std::max(worst, neg_trace(a, m));
        best = std::min(best, worst);
    }
    return best;
}

}  // namespace

void validate(const OperatorSpec& op) {
    if (op.dim < kMinDim || op.dim > kMaxDim)
        fail(ErrorKind::invalid_input, "dim: " + std::to_string(op.dim) + " outside [2, 8]");
    op.declared.validate();
    const int n = op.dim;
    std::visit(overloaded{
                   [](const PucciPlus& p) { p.pair.validate(); },
                   [](const PucciMinus& p) { p.pair.validate(); },
                   [&](const Linear& l) { check_bounded(l.A, op.declared, n, "A"); },
                   [&](const SupInf& s) { check_families(s.families, op.declared, n); },
                   [&](const InfSup& s) { check_families(s.families, op.declared, n); },
                   [&](const EigenSymmetric& e) {
                       if (static_cast<int>(e.coeffs.size()) != n)
                           fail(ErrorKind::invalid_input, "coeffs: expected " + std::to_string(n) + " entries");
                       for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
                           const double c = e.coeffs[i];
                           if (!(c >= op.declared.lambda - kFamilyTol && c <= op.declared.Lambda + kFamilyTol))
                               fail(ErrorKind::invalid_input,
                                    "coeffs[" + std::to_string(i) + "]: outside [lambda, Lambda]");
                       }
                   },
               },
               op.variant);
}

std::string kind_name(const OperatorSpec& op) {
    return std::visit(overloaded{
                          [](const PucciPlus&) { return std::string("pucci+"); },
                          [](const PucciMinus&) { return std::string("pucci-"); },
                          [](const Linear&) { return std::string("linear"); },
                          [](const SupInf&) { return std::string("supinf"); },
                          [](const InfSup&) { return std::string("infsup"); },
                          [](const EigenSymmetric&) { return std::string("eigen_sym"); },
                      },
                      op.variant);
}

OperatorSpec make_pucci_plus(EllipticityPair pair, int n) {
    OperatorSpec op{PucciPlus{pair}, pair, n};
    validate(op);
    return op;
}

OperatorSpec make_pucci_minus(EllipticityPair pair, int n) {
    OperatorSpec op{PucciMinus{pair}, pair, n};
    validate(op);
    return op;
}

OperatorSpec make_linear(const SymMatrix& A, EllipticityPair pair) {
    OperatorSpec op{Linear{A}, pair, A.dim()};
    validate(op);
    return op;
}

OperatorSpec make_laplacian(int n) { return make_linear(SymMatrix::identity(n), {1.0, 1.0}); }

OperatorSpec make_sup_inf(std::vector<MatrixFamily> families, EllipticityPair pair) {
    const int n = families.empty() || families.front().empty() ? 0 : families.front().front().dim();
    OperatorSpec op{SupInf{std::move(families)}, pair, n};
    validate(op);
    return op;
}

OperatorSpec make_inf_sup(std::vector<MatrixFamily> families, EllipticityPair pair) {
    const int n = families.empty() || families.front().empty() ? 0 : families.front().front().dim();
    OperatorSpec op{InfSup{std::move(families)}, pair, n};
    validate(op);
    return op;
}

OperatorSpec make_eigen_symmetric(std::vector<double> coeffs, EllipticityPair pair) {
    const int n = static_cast<int>(coeffs.size());
    OperatorSpec op{EigenSymmetric{std::move(coeffs)}, pair, n};
    validate(op);
    return op;
}

OperatorSpec make_f1(EllipticityPair pair, int n) {
    std::vector<double> c(static_cast<std::size_t>(n), pair.lambda);
    c.front() = pair.Lambda;
    c.back() = pair.Lambda;
    return make_eigen_symmetric(std::move(c), pair);
}

OperatorSpec make_f2(EllipticityPair pair, int n) {
    std::vector<double> c(static_cast<std::size_t>(n), pair.Lambda);
    c.front() = pair.lambda;
    c.back() = pair.lambda;
    return make_eigen_symmetric(std::move(c), pair);
}

double pucci_plus(const EllipticityPair& pair, const SymMatrix& m) {
    std::array<double, kMaxDim> mu{};
    const int n = m.dim();
    eigenvalues_sym(m, std::span<double>(mu.data(), static_cast<std::size_t>(n)));
    double pos = 0.0;
    double neg = 0.0;
    for (int i = 0; i < n; ++i) (mu[i] > 0.0 ? pos : neg) += mu[i];
    return -pair.lambda * pos - pair.Lambda * neg;
}

double pucci_minus(const EllipticityPair& pair, const SymMatrix& m) {
    std::array<double, kMaxDim> mu{};
    const int n = m.dim();
    eigenvalues_sym(m, std::span<double>(mu.data(), static_cast<std::size_t>(n)));
    double pos = 0.0;
    double neg = 0.0;
    for (int i = 0; i < n; ++i) (mu[i] > 0.0 ? pos : neg) += mu[i];
    return -pair.Lambda * pos - pair.lambda * neg;
}

double eval(const OperatorSpec& op, const SymMatrix& m) {
    if (m.dim() != op.dim)
        fail(ErrorKind::invalid_input,
             "eval: matrix dimension " + std::to_string(m.dim()) + " != operator dimension " + std::to_string(op.dim));
    return std::visit(overloaded{
                          [&](const PucciPlus& p) { return pucci_plus(p.pair, m); },
                          [&](const PucciMinus& p) { return pucci_minus(p.pair, m); },
                          [&](const Linear& l) { return neg_trace(l.A, m); },
                          [&](const SupInf& s) { return sup_inf(s.families, m); },
                          [&](const InfSup& s) { return inf_sup(s.families, m); },
                          [&](const EigenSymmetric& e) {
                              std::array<double, kMaxDim> mu{};
                              eigenvalues_sym(m, std::span<double>(mu.data(), e.coeffs.size()));
                              double v = 0.0;
                              for (std::size_t i = 0; i < e.coeffs.size(); ++i) v -= e.coeffs[i] * mu[i];
                              return v;
                          },
                      },
                      op.variant);
}

OperatorSpec dual_operator(const OperatorSpec& op) {
    OperatorSpec out = op;
    out.variant = std::visit(overloaded{
                                 [](const PucciPlus& p) -> OperatorVariant { return PucciMinus{p.pair}; },
                                 [](const PucciMinus& p) -> OperatorVariant { return PucciPlus{p.pair}; },
                                 [](const Linear& l) -> OperatorVariant { return l; },
                                 [](const SupInf& s) -> OperatorVariant { return InfSup{s.families}; },
                                 [](const InfSup& s) -> OperatorVariant { return SupInf{s.families}; },
                                 [](const EigenSymmetric& e) -> OperatorVariant {
                                     return EigenSymmetric{{e.coeffs.rbegin(), e.coeffs.rend()}};
                                 },
                             },
                             op.variant);
    return out;
}

double h1_violation(const OperatorSpec& op, const EllipticityPair& pair, const SymMatrix& m, const SymMatrix& psd) {
    const double d = eval(op, m - psd) - eval(op, m);
    const double tr = psd.trace();
    return std::max(pair.lambda * tr - d, d - pair.Lambda * tr);
}

StructureReport verify_h1_h2(const OperatorSpec& op, const EllipticityPair& pair, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) fail(ErrorKind::invalid_input, "verify_h1_h2: n_samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_scale(std::log(0.1), std::log(10.0));
    std::uniform_real_distribution<double> t_dist(0.0, 10.0);
    std::normal_distribution<double> z(0.0, 1.0);
    const int n = op.dim;

    StructureReport rep;
    rep.n_samples = n_samples;
    rep.worst_h1 = -std::numeric_limits<double>::infinity();
    rep.worst_h2 = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const SymMatrix m = random_sym(n, rng, std::exp(log_scale(rng)));
        SymMatrix psd(n);
        if (s % 3 == 0) {
            std::vector<double> v(static_cast<std::size_t>(n));
            for (auto& x : v) x = z(rng);
            psd = SymMatrix::outer(v);
        } else {
            psd = random_psd(n, rng, std::exp(log_scale(rng)));
        }
        const double fm = eval(op, m);
        const double v1 = h1_violation(op, pair, m, psd);
        rep.worst_h1 = std::max(rep.worst_h1, v1);
        if (v1 > 1e-9 * (1.0 + std::abs(fm) + pair.Lambda * psd.trace())) rep.h1_pass = false;

        const double t = t_dist(rng);
        const double v2 = std::abs(eval(op, m * t) - t * fm);
        rep.worst_h2 = std::max(rep.worst_h2, v2);
        if (v2 > 1e-9 * (1.0 + t * std::abs(fm))) rep.h2_pass = false;
    }
    rep.worst_violation = std::max(rep.worst_h1, rep.worst_h2);
    return rep;
}

SandwichReport pucci_sandwich_check(const OperatorSpec& op, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) fail(ErrorKind::invalid_input, "pucci_sandwich_check: n_samples must be >= 1");
    std::mt19937_64 rng(seed);
    SandwichReport rep;
    rep.n_samples = n_samples;
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_samples; ++s) {
        const SymMatrix m = random_sym(op.dim, rng, 1.0 + 4.0 * (s % 5));
        const double f = eval(op, m);
        const double lo = pucci_minus(op.declared, m);
        const double hi = pucci_plus(op.declared, m);
        const double viol = std::max(lo - f, f - hi);
        rep.worst_violation = std::max(rep.worst_violation, viol);
        rep.min_gap = std::min(rep.min_gap, std::min(f - lo, hi - f));
        if (viol > 1e-10 * (1.0 + m.max_abs())) rep.pass = false;
    }
    return rep;
}

}  // namespace ellipticfund

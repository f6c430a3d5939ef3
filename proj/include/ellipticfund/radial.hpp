#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ellipticfund/operator.hpp"

namespace ellipticfund {

enum class Branch { power, log };
enum class ExponentMethod { rotinv_root, circle_bisection };

const char* to_string(Branch b);
const char* to_string(ExponentMethod m);

/// Scaling exponent alpha*(F) with provenance. For the rotationally invariant
/// path a_tilde is the root of a -> F(a e1⊗e1 - I) and alpha* = a_tilde - 2.
struct ExponentResult {
    double alpha_star = 0.0;
    Branch branch = Branch::power;
    std::optional<double> a_tilde;
    ExponentMethod method = ExponentMethod::rotinv_root;
    double residual = 0.0;
    double bracket_width = 0.0;
};

/// Lower and upper a-priori bounds lambda/Lambda (n-1) - 1 and Lambda/lambda (n-1) - 1.
double exponent_lower_bound(const EllipticityPair& pair, int n);
double exponent_upper_bound(const EllipticityPair& pair, int n);

/// xi_alpha(x): |x|^-alpha, -log|x| or -|x|^-alpha by the sign of alpha.
double xi_eval(double alpha, std::span<const double> x);
double xi_radial(double alpha, double r);

/// D^2 xi_alpha at x.
SymMatrix xi_hessian(double alpha, std::span<const double> x);

enum class PucciSign { plus, minus };

/// Closed form of P^±(D^2 xi_alpha) at |x| = r.
double pucci_of_xi(PucciSign sign, const EllipticityPair& pair, int n, double alpha, double r);

/// A function on R^n \ {0}.
using RadialFunction = std::function<double(std::span<const double>)>;

/// (T u)(x) = sigma^alpha u(sigma x), or u(sigma x) + log sigma when alpha = 0.
RadialFunction rescale_apply(double alpha, double sigma, RadialFunction u);

struct SymmetryCheck {
    bool symmetric = false;
    double worst_gap = 0.0;
};

/// Samples a in [1, Lambda/lambda (n-1) + 2] and unit vectors y, z and
/// compares F(a y⊗y - I) with F(a z⊗z - I).
SymmetryCheck is_rotationally_symmetric(const OperatorSpec& op, int n_samples, std::uint64_t seed);

/// Root of a -> F(a e1⊗e1 - I) by bisection; requires the symmetry check to
/// pass (throws invalid_input otherwise).
ExponentResult exponent_rotinv(const OperatorSpec& op);

/// Skips the symmetry pre-check; used when the caller already verified it.
ExponentResult exponent_rotinv_unchecked(const OperatorSpec& op);

}  // namespace ellipticfund

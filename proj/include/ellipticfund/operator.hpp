#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ellipticfund/sym_matrix.hpp"

namespace ellipticfund {

struct PucciPlus {
    EllipticityPair pair;
};
struct PucciMinus {
    EllipticityPair pair;
};
/// F(M) = -trace(A M).
struct Linear {
    SymMatrix A;
};
using MatrixFamily = std::vector<SymMatrix>;
/// F(M) = sup over families of inf over members of -trace(A M).
struct SupInf {
    std::vector<MatrixFamily> families;
};
/// F(M) = inf over families of sup over members of -trace(A M).
struct InfSup {
    std::vector<MatrixFamily> families;
};
/// F(M) = -sum_i c_i mu_i(M) with mu_i ascending.
struct EigenSymmetric {
    std::vector<double> coeffs;
};

using OperatorVariant = std::variant<PucciPlus, PucciMinus, Linear, SupInf, InfSup, EigenSymmetric>;

/// A positively homogeneous, uniformly elliptic operator F acting on S_n.
struct OperatorSpec {
    OperatorVariant variant;
    EllipticityPair declared;
    int dim = 2;
};

/// Checks the structural invariants (dimension range, family ellipticity,
/// coefficient range). Throws invalid_input with a field path on failure.
void validate(const OperatorSpec& op);

std::string kind_name(const OperatorSpec& op);

// Builders; all of them validate.
OperatorSpec make_pucci_plus(EllipticityPair pair, int n);
OperatorSpec make_pucci_minus(EllipticityPair pair, int n);
OperatorSpec make_linear(const SymMatrix& A, EllipticityPair pair);
OperatorSpec make_laplacian(int n);
OperatorSpec make_sup_inf(std::vector<MatrixFamily> families, EllipticityPair pair);
OperatorSpec make_inf_sup(std::vector<MatrixFamily> families, EllipticityPair pair);
OperatorSpec make_eigen_symmetric(std::vector<double> coeffs, EllipticityPair pair);
/// -Lambda(mu_1 + mu_n) - lambda(mu_2 + ... + mu_{n-1}).
OperatorSpec make_f1(EllipticityPair pair, int n);
/// -lambda(mu_1 + mu_n) - Lambda(mu_2 + ... + mu_{n-1}).
OperatorSpec make_f2(EllipticityPair pair, int n);

double pucci_plus(const EllipticityPair& pair, const SymMatrix& m);
double pucci_minus(const EllipticityPair& pair, const SymMatrix& m);

/// F(M). Throws invalid_input on dimension mismatch.
double eval(const OperatorSpec& op, const SymMatrix& m);

/// F~(M) = -F(-M).
OperatorSpec dual_operator(const OperatorSpec& op);

struct StructureReport {
    bool h1_pass = true;
    bool h2_pass = true;
    /// Largest signed violation seen; <= 0 means every sample passed.
    double worst_violation = 0.0;
    double worst_h1 = 0.0;
    double worst_h2 = 0.0;
    int n_samples = 0;
};

/// Signed H1 violation for a single (M, N): positive when
/// F(M-N) - F(M) leaves [lambda tr N, Lambda tr N].
double h1_violation(const OperatorSpec& op, const EllipticityPair& pair, const SymMatrix& m,
                    const SymMatrix& psd);

StructureReport verify_h1_h2(const OperatorSpec& op, const EllipticityPair& pair, int n_samples,
                             std::uint64_t seed);

struct SandwichReport {
    bool pass = true;
    double worst_violation = 0.0;
    /// Smallest of F - P^- and P^+ - F over the samples.
    double min_gap = 0.0;
    int n_samples = 0;
};

SandwichReport pucci_sandwich_check(const OperatorSpec& op, int n_samples, std::uint64_t seed);

/// Random symmetric matrix with entries of order `scale`; shared by the audit
/// tools and the tests.
template <class Rng>
SymMatrix random_sym(int n, Rng& rng, double scale = 1.0);

/// Random positive semidefinite matrix B B^T / n.
template <class Rng>
SymMatrix random_psd(int n, Rng& rng, double scale = 1.0);

}  // namespace ellipticfund

#include "ellipticfund/detail/random_matrix.hpp"

#pragma once

#include <array>
#include <vector>

#include "ellipticfund/sym_matrix.hpp"

namespace ellipticfund {

/// Primitive lattice direction (p, q), gcd(|p|, |q|) = 1, taken up to sign.
struct LatticeDir {
    int p = 0;
    int q = 0;

    double norm() const;
    bool operator==(const LatticeDir&) const = default;
};

/// Width 1: the two axes. Width 2: axes, diagonals and the four knight
/// moves (8 directions). Width 3: width 2 plus the eight (1,3)/(2,3) type
/// vectors (16 directions).
std::vector<LatticeDir> direction_set(int width);

struct WeightedDir {
    LatticeDir dir;
    double weight = 0.0;
};

struct Decomposition {
    std::vector<WeightedDir> terms;
    int width = 0;
    double residual = 0.0;
};

inline constexpr double kDecompositionTol = 1e-8;

/// A = sum_k c_k e_k e_k^T with e_k = d_k / |d_k| and c_k >= 0, by
/// nonnegative least squares over direction_set(width). Widens up to 3 when
/// the residual exceeds 1e-8; throws decomposition otherwise.
Decomposition direction_decomposition(const SymMatrix& a, int width);

/// Lawson-Hanson nonnegative least squares, min |E x - b| s.t. x >= 0.
/// E is row-major rows × cols.
std::vector<double> nnls(const std::vector<double>& e, int rows, int cols, const std::vector<double>& b);

}  // namespace ellipticfund

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ellipticfund {

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 8;

/// Dense real symmetric matrix of dimension 2..8. Only the upper triangle is
/// stored (row-major), so symmetry holds by construction. Storage is inline to
/// keep hot loops allocation-free.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int n);

    static SymMatrix zero(int n) { return SymMatrix(n); }
    static SymMatrix identity(int n);
    static SymMatrix diagonal(std::span<const double> d);
    /// Rank one product x⊗x.
    static SymMatrix outer(std::span<const double> x);
    /// Builds from a full row-major n×n array, averaging with the transpose.
    static SymMatrix from_full(int n, std::span<const double> full);

    int dim() const noexcept { return n_; }
    std::size_t packed_size() const noexcept { return static_cast<std::size_t>(n_ * (n_ + 1) / 2); }

    double operator()(int i, int j) const noexcept { return a_[index(i, j)]; }
    double& operator()(int i, int j) noexcept { return a_[index(i, j)]; }

    std::span<const double> packed() const noexcept { return {a_.data(), packed_size()}; }

    double trace() const noexcept;
    /// trace(A·B) for symmetric A, B of the same dimension.
    double trace_product(const SymMatrix& other) const noexcept;
    double max_abs() const noexcept;
    bool all_finite() const noexcept;
    std::vector<double> to_full() const;

    SymMatrix& operator+=(const SymMatrix& other) noexcept;
    SymMatrix& operator-=(const SymMatrix& other) noexcept;
    SymMatrix& operator*=(double s) noexcept;

    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) noexcept { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) noexcept { return a -= b; }
    friend SymMatrix operator*(SymMatrix a, double s) noexcept { return a *= s; }
    friend SymMatrix operator*(double s, SymMatrix a) noexcept { return a *= s; }
    friend SymMatrix operator-(SymMatrix a) noexcept { return a *= -1.0; }

    bool operator==(const SymMatrix& other) const noexcept;

private:
    std::size_t index(int i, int j) const noexcept {
        if (i > j) {
            const int t = i;
            i = j;
            j = t;
        }
        // row i of the upper triangle starts after i rows of decreasing length
        return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
    }

    int n_ = 0;
    std::array<double, kMaxDim*(kMaxDim + 1) / 2> a_{};
};

/// Eigenvalues sorted ascending. Closed form for n = 2, Eigen's
/// self-adjoint solver otherwise.
std::vector<double> eigenvalues_sym(const SymMatrix& m);

/// Same as eigenvalues_sym but writes into a caller buffer of size dim().
void eigenvalues_sym(const SymMatrix& m, std::span<double> out);

/// Eigen-decomposition: ascending eigenvalues and matching orthonormal
/// eigenvectors stored column-major (vectors[k*n + i] is component i of
/// vector k).
struct SymEigen {
    std::vector<double> values;
    std::vector<double> vectors;
};
SymEigen eigen_decompose(const SymMatrix& m);

/// Strictly positive ellipticity constants 0 < lambda <= Lambda.
struct EllipticityPair {
    double lambda = 1.0;
    double Lambda = 1.0;

    void validate() const;
    bool operator==(const EllipticityPair&) const = default;
};

}  // namespace ellipticfund

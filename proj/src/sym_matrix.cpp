#include "ellipticfund/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ellipticfund/error.hpp"

namespace ellipticfund {

SymMatrix::SymMatrix(int n) : n_(n) {
    if (n < kMinDim || n > kMaxDim)
        fail(ErrorKind::invalid_input, "SymMatrix dimension " + std::to_string(n) + " outside [2, 8]");
}

SymMatrix SymMatrix::identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[i];
    return m;
}

SymMatrix SymMatrix::outer(std::span<const double> x) {
    SymMatrix m(static_cast<int>(x.size()));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = i; j < m.dim(); ++j) m(i, j) = x[i] * x[j];
    return m;
}

SymMatrix SymMatrix::from_full(int n, std::span<const double> full) {
    if (full.size() != static_cast<std::size_t>(n * n))
        fail(ErrorKind::invalid_input, "full matrix has wrong number of entries");
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m(i, j) = 0.5 * (full[i * n + j] + full[j * n + i]);
    return m;
}

double SymMatrix::trace() const noexcept {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

double SymMatrix::trace_product(const SymMatrix& other) const noexcept {
    double diag = 0.0;
    double off = 0.0;
    for (int i = 0; i < n_; ++i) {
        diag += (*this)(i, i) * other(i, i);
        for (int j = i + 1; j < n_; ++j) off += (*this)(i, j) * other(i, j);
    }
    return diag + 2.0 * off;
}

double SymMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : packed()) m = std::max(m, std::abs(v));
    return m;
}

bool SymMatrix::all_finite() const noexcept {
    return std::all_of(packed().begin(), packed().end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> SymMatrix::to_full() const {
    std::vector<double> full(static_cast<std::size_t>(n_ * n_));
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) full[i * n_ + j] = (*this)(i, j);
    return full;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) a_[k] += other.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) a_[k] -= other.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) a_[k] *= s;
    return *this;
}

bool SymMatrix::operator==(const SymMatrix& other) const noexcept {
    return n_ == other.n_ && std::equal(packed().begin(), packed().end(), other.packed().begin());
}

namespace {

Eigen::MatrixXd to_eigen(const SymMatrix& m) {
    const int n = m.dim();
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = m(i, j);
    return a;
}

}  // namespace

void eigenvalues_sym(const SymMatrix& m, std::span<double> out) {
    const int n = m.dim();
    if (n == 2) {
        const double mean = 0.5 * (m(0, 0) + m(1, 1));
        const double rad = std::hypot(0.5 * (m(0, 0) - m(1, 1)), m(0, 1));
        out[0] = mean - rad;
        out[1] = mean + rad;
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(m), Eigen::EigenvaluesOnly);
    for (int i = 0; i < n; ++i) out[i] = solver.eigenvalues()(i);
}

std::vector<double> eigenvalues_sym(const SymMatrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.dim()));
    eigenvalues_sym(m, out);
    return out;
}

SymEigen eigen_decompose(const SymMatrix& m) {
    const int n = m.dim();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(m));
    SymEigen e;
    e.values.resize(static_cast<std::size_t>(n));
    e.vectors.resize(static_cast<std::size_t>(n * n));
    for (int k = 0; k < n; ++k) {
        e.values[k] = solver.eigenvalues()(k);
        for (int i = 0; i < n; ++i) e.vectors[k * n + i] = solver.eigenvectors()(i, k);
    }
    return e;
}

void EllipticityPair::validate() const {
    if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda))
        fail(ErrorKind::invalid_input, "ellipticity pair must satisfy 0 < lambda <= Lambda");
}

}  // namespace ellipticfund

#include "ellipticfund/stencil.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ellipticfund/canonical_json.hpp"
#include "ellipticfund/error.hpp"

namespace ellipticfund {

double LatticeDir::norm() const { return std::hypot(static_cast<double>(p), static_cast<double>(q)); }

std::vector<LatticeDir> direction_set(int width) {
    if (width < 1 || width > 3) fail(ErrorKind::invalid_input, "stencil width must be 1, 2 or 3");
    std::vector<LatticeDir> dirs{{1, 0}, {0, 1}};
    if (width >= 2) {
        for (LatticeDir d : {LatticeDir{1, 1}, {1, -1}, {1, 2}, {2, 1}, {1, -2}, {2, -1}}) dirs.push_back(d);
    }
    if (width >= 3) {
        for (LatticeDir d : {LatticeDir{1, 3}, {3, 1}, {1, -3}, {3, -1}, {2, 3}, {3, 2}, {2, -3}, {3, -2}})
            dirs.push_back(d);
    }
    return dirs;
}

std::vector<double> nnls(const std::vector<double>& e, int rows, int cols, const std::vector<double>& b) {
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const Mat> E(e.data(), rows, cols);
    const Eigen::Map<const Eigen::VectorXd> B(b.data(), rows);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    std::vector<bool> passive(static_cast<std::size_t>(cols), false);
    const double tol = 1e-13 * (1.0 + E.cwiseAbs().maxCoeff()) * (1.0 + B.cwiseAbs().maxCoeff());

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<int> idx;
        for (int j = 0; j < cols; ++j)
            if (passive[j]) idx.push_back(j);
        Mat sub(rows, static_cast<int>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<int>(k)) = E.col(idx[k]);
        const Eigen::VectorXd zs = sub.completeOrthogonalDecomposition().solve(B);
        z.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zs[static_cast<int>(k)];
    };

    for (int outer = 0; outer < 3 * cols + 10; ++outer) {
        const Eigen::VectorXd w = E.transpose() * (B - E * x);
        int best = -1;
        double best_w = tol;
        for (int j = 0; j < cols; ++j)
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;
        Eigen::VectorXd z(cols);
        for (int inner = 0; inner < 3 * cols + 10; ++inner) {
            solve_passive(z);
            bool feasible = true;
            for (int j = 0; j < cols; ++j)
                if (passive[j] && z[j] <= 0.0) feasible = false;
            if (feasible) break;
            double step = 1.0;
            for (int j = 0; j < cols; ++j)
                if (passive[j] && z[j] <= 0.0) step = std::min(step, x[j] / (x[j] - z[j]));
            x += step * (z - x);
            for (int j = 0; j < cols; ++j)
                if (passive[j] && x[j] <= 1e-15) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
        }
        x = z;
    }
    return {x.data(), x.data() + cols};
}

Decomposition direction_decomposition(const SymMatrix& a, int width) {
    if (a.dim() != 2) fail(ErrorKind::invalid_input, "direction_decomposition requires a 2×2 matrix");
    if (width < 1 || width > 3) fail(ErrorKind::invalid_input, "stencil width must be 1, 2 or 3");
    const std::vector<double> b{a(0, 0), a(0, 1), a(1, 1)};
    for (int w = width; w <= 3; ++w) {
        const auto dirs = direction_set(w);
        const int k = static_cast<int>(dirs.size());
        std::vector<double> e(static_cast<std::size_t>(3 * k));
        for (int j = 0; j < k; ++j) {
            const double n2 = dirs[j].norm() * dirs[j].norm();
            e[0 * k + j] = dirs[j].p * dirs[j].p / n2;
            e[1 * k + j] = dirs[j].p * dirs[j].q / n2;
            e[2 * k + j] = dirs[j].q * dirs[j].q / n2;
        }
        const std::vector<double> c = nnls(e, 3, k, b);
        double resid = 0.0;
        for (int r = 0; r < 3; ++r) {
            double s = -b[r];
            for (int j = 0; j < k; ++j) s += e[r * k + j] * c[j];
            resid = std::max(resid, std::abs(s));
        }
        if (resid <= kDecompositionTol) {
            Decomposition out;
            out.width = w;
            out.residual = resid;
            for (int j = 0; j < k; ++j)
                if (c[j] > 0.0) out.terms.push_back({dirs[j], c[j]});
            return out;
        }
    }
    fail(ErrorKind::decomposition, "no nonnegative decomposition at width 3 for A = [[" + format_double(a(0, 0)) +
                                       ", " + format_double(a(0, 1)) + "], [" + format_double(a(0, 1)) + ", " +
                                       format_double(a(1, 1)) + "]]");
}

}  // namespace ellipticfund

#include "ellipticfund/radial.hpp"

#include <cmath>
#include <random>

#include "ellipticfund/error.hpp"

namespace ellipticfund {

namespace {

constexpr double kMinRadius = 1e-12;
constexpr double kSymmetryTol = 1e-9;
constexpr double kRootTol = 1e-12;
constexpr int kRootMaxIter = 200;
constexpr double kLogCutoff = 1e-9;

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double checked_norm(std::span<const double> x) {
    const double r = norm(x);
    if (!(r >= kMinRadius)) fail(ErrorKind::invalid_input, "point too close to the origin");
    return r;
}

SymMatrix probe_matrix(double a, std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    return SymMatrix::outer(y) * a - SymMatrix::identity(n);
}

}  // namespace

const char* to_string(Branch b) { return b == Branch::power ? "power" : "log"; }

const char* to_string(ExponentMethod m) {
    return m == ExponentMethod::rotinv_root ? "rotinv_root" : "circle_bisection";
}

double exponent_lower_bound(const EllipticityPair& pair, int n) { return pair.lambda / pair.Lambda * (n - 1) - 1.0; }

double exponent_upper_bound(const EllipticityPair& pair, int n) { return pair.Lambda / pair.lambda * (n - 1) - 1.0; }

double xi_radial(double alpha, double r) {
    if (alpha > 0.0) return std::pow(r, -alpha);
    if (alpha < 0.0) return -std::pow(r, -alpha);
    return -std::log(r);
}

double xi_eval(double alpha, std::span<const double> x) { return xi_radial(alpha, checked_norm(x)); }

SymMatrix xi_hessian(double alpha, std::span<const double> x) {
    const double r = checked_norm(x);
    const int n = static_cast<int>(x.size());
    SymMatrix xx = SymMatrix::outer(x);
    if (alpha == 0.0) return xx * (2.0 * std::pow(r, -4.0)) - SymMatrix::identity(n) * std::pow(r, -2.0);
    const double a = std::abs(alpha);
    return xx * (a * (alpha + 2.0) * std::pow(r, -alpha - 4.0)) - SymMatrix::identity(n) * (a * std::pow(r, -alpha - 2.0));
}

double pucci_of_xi(PucciSign sign, const EllipticityPair& pair, int n, double alpha, double r) {
    if (!(r > 0.0)) fail(ErrorKind::invalid_input, "pucci_of_xi: r must be positive");
    const double l = pair.lambda;
    const double L = pair.Lambda;
    if (alpha == 0.0) {
        const double c = sign == PucciSign::minus ? l * (n - 1) - L : L * (n - 1) - l;
        return c / (r * r);
    }
    const double c = sign == PucciSign::minus ? l * (n - 1) - L * (alpha + 1.0) : L * (n - 1) - l * (alpha + 1.0);
    return std::abs(alpha) * std::pow(r, -alpha - 2.0) * c;
}

RadialFunction rescale_apply(double alpha, double sigma, RadialFunction u) {
    if (!(sigma > 0.0)) fail(ErrorKind::invalid_input, "rescale_apply: sigma must be positive");
    return [alpha, sigma, u = std::move(u)](std::span<const double> x) {
        std::array<double, kMaxDim> y{};
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigma * x[i];
        const double v = u(std::span<const double>(y.data(), x.size()));
        if (alpha == 0.0) return v + std::log(sigma);
        return std::pow(sigma, alpha) * v;
    };
}

SymmetryCheck is_rotationally_symmetric(const OperatorSpec& op, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) fail(ErrorKind::invalid_input, "is_rotationally_symmetric: n_samples must be >= 1");
    const int n = op.dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> a_dist(1.0, op.declared.Lambda / op.declared.lambda * (n - 1) + 2.0);
    std::normal_distribution<double> z(0.0, 1.0);
    auto unit = [&] {
        std::vector<double> v(static_cast<std::size_t>(n));
        double s = 0.0;
        do {
            s = 0.0;
            for (auto& c : v) {
                c = z(rng);
                s += c * c;
            }
        } while (s < 1e-20);
        for (auto& c : v) c /= std::sqrt(s);
        return v;
    };
    SymmetryCheck out;
    for (int k = 0; k < n_samples; ++k) {
        const double a = a_dist(rng);
        // include the coordinate axes so axis-aligned anisotropy is always probed
        std::vector<double> y = unit();
        std::vector<double> w = unit();
        if (k < n) {
            y.assign(static_cast<std::size_t>(n), 0.0);
            y[static_cast<std::size_t>(k)] = 1.0;
            w.assign(static_cast<std::size_t>(n), 0.0);
            w[static_cast<std::size_t>((k + 1) % n)] = 1.0;
        }
        const double gap = std::abs(eval(op, probe_matrix(a, y)) - eval(op, probe_matrix(a, w)));
        out.worst_gap = std::max(out.worst_gap, gap);
    }
    out.symmetric = out.worst_gap <= kSymmetryTol;
    return out;
}

ExponentResult exponent_rotinv_unchecked(const OperatorSpec& op) {
    const int n = op.dim;
    std::vector<double> e1(static_cast<std::size_t>(n), 0.0);
    e1[0] = 1.0;
    auto f = [&](double a) { return eval(op, probe_matrix(a, e1)); };

    double lo = 0.0;
    double hi = op.declared.Lambda / op.declared.lambda * (n - 1) + 2.0;
    double flo = f(lo);
    double fhi = f(hi);
    if (!(flo > 0.0 && fhi < 0.0))
        fail(ErrorKind::internal, "exponent_rotinv: root not bracketed (F(-I)=" + std::to_string(flo) +
                                      ", F(a e1e1 - I)=" + std::to_string(fhi) + ")");
    for (int it = 0; it < kRootMaxIter && hi - lo > kRootTol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm > 0.0) {
            lo = mid;
        } else if (fm < 0.0) {
            hi = mid;
        } else {
            lo = hi = mid;
        }
    }
    const double root = 0.5 * (lo + hi);
    ExponentResult res;
    res.a_tilde = root;
    res.alpha_star = root - 2.0;
    res.method = ExponentMethod::rotinv_root;
    res.residual = std::abs(f(root));
    res.bracket_width = hi - lo;
    res.branch = std::abs(res.alpha_star) <= kLogCutoff ? Branch::log : Branch::power;
    if (res.branch == Branch::log) res.alpha_star = 0.0;
    return res;
}

ExponentResult exponent_rotinv(const OperatorSpec& op) {
    const SymmetryCheck sym = is_rotationally_symmetric(op, 64, 0x5eed);
    if (!sym.symmetric)
        fail(ErrorKind::invalid_input,
             "exponent_rotinv: operator is not rotationally invariant (gap " + std::to_string(sym.worst_gap) + ")");
    return exponent_rotinv_unchecked(op);
}

}  // namespace ellipticfund

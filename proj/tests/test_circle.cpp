#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ellipticfund/circle_spectral.hpp"

using namespace ellipticfund;

namespace {

const EllipticityPair k12{1.0, 2.0};

CircleConfig small_grid(int n = 64) {
    CircleConfig c;
    c.n_theta = n;
    return c;
}

OperatorSpec ellipse_operator() {
    const double d[2] = {1, 4};
    return make_linear(SymMatrix::diagonal(d), {1, 4});
}

// Zero-mean log profile of the fundamental solution of -trace(diag(1,4) D^2),
// -log|y| with y = (x1, x2 / 2), evaluated on the grid.
std::vector<double> ellipse_log_profile(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double mean = 0;
    for (int k = 0; k < n; ++k) {
        const double t = 2 * std::numbers::pi * k / n;
        v[k] = -0.5 * std::log(std::cos(t) * std::cos(t) + 0.25 * std::sin(t) * std::sin(t));
        mean += v[k] / n;
    }
    for (auto& x : v) x -= mean;
    return v;
}

double fd_u(double x, double y) {
    const double r = std::hypot(x, y), t = std::atan2(y, x);
    return std::pow(r, -0.8) * (1 + 0.3 * std::cos(2 * t));
}

}  // namespace

TEST_CASE("hessian_homogeneous_2d") {
    for (double alpha : {-0.5, 0.7, 1.0, 2.0}) {
        const SymMatrix h = hessian_homogeneous_2d(1.0, 0.0, 0.0, alpha, 0.0, Branch::power);
        const double e1[2] = {1, 0};
        CHECK((h - xi_hessian(alpha, e1) * (alpha > 0 ? 1.0 : -1.0)).max_abs() <= 1e-14);
        CHECK(h(0, 0) == doctest::Approx(alpha * (alpha + 1)));
        CHECK(h(1, 1) == doctest::Approx(-alpha));
    }
    const SymMatrix hl = hessian_homogeneous_2d(0.0, 0.0, 0.0, 0.0, 0.0, Branch::log);
    CHECK(hl(0, 0) == doctest::Approx(1.0));
    CHECK(hl(1, 1) == doctest::Approx(-1.0));
    CHECK(std::abs(hl(0, 1)) <= 1e-15);

    const double h = 1e-4;
    for (int k = 0; k < 12; ++k) {
        const double t = 2 * std::numbers::pi * k / 12 + 0.1;
        const double x = std::cos(t), y = std::sin(t);
        const double dxx = (fd_u(x + h, y) - 2 * fd_u(x, y) + fd_u(x - h, y)) / (h * h);
        const double dyy = (fd_u(x, y + h) - 2 * fd_u(x, y) + fd_u(x, y - h)) / (h * h);
        const double dxy = (fd_u(x + h, y + h) - fd_u(x + h, y - h) - fd_u(x - h, y + h) + fd_u(x - h, y - h)) / (4 * h * h);
        const SymMatrix an = hessian_homogeneous_2d(1 + 0.3 * std::cos(2 * t), -0.6 * std::sin(2 * t),
                                                    -1.2 * std::cos(2 * t), 0.8, t, Branch::power);
        const double scale = an.max_abs();
        CHECK(std::abs(an(0, 0) - dxx) <= 1e-6 * scale);
        CHECK(std::abs(an(1, 1) - dyy) <= 1e-6 * scale);
        CHECK(std::abs(an(0, 1) - dxy) <= 1e-6 * scale);
    }
}

TEST_CASE("eigenpair_at_alpha against closed forms") {
    const EigenEstimate at1 = eigenpair_at_alpha(make_pucci_plus(k12, 2), 1.0, small_grid());
    CHECK(at1.converged);
    CHECK(std::abs(at1.mu) <= 1e-4);
    for (double v : at1.profile.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

    const EigenEstimate half = eigenpair_at_alpha(make_pucci_plus(k12, 2), 0.5, small_grid());
    CHECK(half.mu == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(half.eta == doctest::Approx(0.5).epsilon(1e-4));

    // Laplacian of r^-alpha is alpha(alpha + 2 - n) r^-alpha-2
    const EigenEstimate lap = eigenpair_at_alpha(make_laplacian(2), 0.5, small_grid());
    CHECK(lap.mu == doctest::Approx(-0.25).epsilon(1e-4));
    CHECK(lap.eta == doctest::Approx(-0.5).epsilon(1e-4));

    CHECK_THROWS_AS(eigenpair_at_alpha(make_laplacian(2), -1.0, small_grid()), Error);
    CHECK_THROWS_AS(eigenpair_at_alpha(make_laplacian(3), 0.5, small_grid()), Error);
}

TEST_CASE("exponent_2d on closed-form operators") {
    const Exponent2dDetail lap = exponent_2d_detailed(make_laplacian(2), small_grid());
    CHECK(lap.result.branch == Branch::log);
    CHECK(std::abs(lap.result.alpha_star) <= 1e-3);
    REQUIRE(lap.mu_log.has_value());
    CHECK(std::abs(*lap.mu_log) <= 1e-4);
    CHECK(lap.result.method == ExponentMethod::circle_bisection);

    const Exponent2dDetail pp = exponent_2d_detailed(make_pucci_plus(k12, 2), small_grid());
    CHECK(pp.result.alpha_star == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(pp.result.branch == Branch::power);
    // eta is nonincreasing over the audit points
    for (std::size_t i = 1; i < pp.audit.size(); ++i) CHECK(pp.audit[i].eta <= pp.audit[i - 1].eta + 1e-6);
    CHECK(pp.audit.size() == 9);

    CHECK(exponent_2d(make_pucci_minus(k12, 2), small_grid()).alpha_star == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK(exponent_2d(ellipse_operator(), small_grid()).branch == Branch::log);
}

TEST_CASE("fundamental profiles") {
    const CircleConfig c = small_grid();
    const OperatorSpec pp = make_pucci_plus(k12, 2);
    const CircleProfile flat = fundamental_profile_2d(pp, exponent_2d(pp, c), c);
    for (double v : flat.values) CHECK(std::abs(v - 1.0) <= 1e-4);

    // the ellipse profile at a grid of 128 stays within the 256-point budget
    const CircleConfig c128 = small_grid(128);
    const OperatorSpec el = ellipse_operator();
    const CircleProfile prof = fundamental_profile_2d(el, exponent_2d(el, c128), c128);
    CHECK(prof.branch == Branch::log);
    const auto exact = ellipse_log_profile(128);
    double err = 0;
    for (int k = 0; k < 128; ++k) err = std::max(err, std::abs(prof.values[k] - exact[k]));
    CHECK(err <= 1e-2);
    const auto resid = apply_circle_operator(el, prof);
    for (double r : resid) CHECK(std::abs(r) <= 1e-3 * std::max(1.0, prof.max_abs()));
}

TEST_CASE("profile does not depend on the starting guess") {
    std::vector<MatrixFamily> fams{{SymMatrix::identity(2), SymMatrix::identity(2) * 2.0},
                                   {[] {
                                       const double d[2] = {1.0, 1.7};
                                       return SymMatrix::diagonal(d);
                                   }()}};
    const OperatorSpec op = make_sup_inf(fams, k12);
    CircleConfig a = small_grid(), b = small_grid();
    a.init_seed = 1;
    b.init_seed = 2;
    const ExponentResult ra = exponent_2d(op, a);
    const ExponentResult rb = exponent_2d(op, b);
    CHECK(std::abs(ra.alpha_star - rb.alpha_star) <= 1e-5);
    const CircleProfile pa = fundamental_profile_2d(op, ra, a);
    const CircleProfile pb = fundamental_profile_2d(op, ra, b);
    for (int k = 0; k < pa.n_theta; ++k) CHECK(std::abs(pa.values[k] - pb.values[k]) <= 1e-3);

    // T-invariance of the reconstructed homogeneous function
    if (ra.branch == Branch::power) {
        RadialFunction u = [pa](std::span<const double> x) { return pa.u(x[0], x[1]); };
        for (double sigma : {0.5, 2.0}) {
            const RadialFunction t = rescale_apply(ra.alpha_star, sigma, u);
            for (double ang : {0.3, 1.9, 4.0}) {
                const double x[2] = {0.7 * std::cos(ang), 0.7 * std::sin(ang)};
                CHECK(std::abs(t(x) - u(x)) <= 1e-10 * std::abs(u(x)));
            }
        }
    }
}

TEST_CASE("grid refinement moves the exponent little") {
    for (const OperatorSpec& op : {make_pucci_plus(k12, 2), make_pucci_minus(k12, 2)}) {
        const double a256 = exponent_2d(op, small_grid(256)).alpha_star;
        const double a512 = exponent_2d(op, small_grid(512)).alpha_star;
        CHECK(std::abs(a256 - a512) <= 5e-4);
    }
}

TEST_CASE("profile CSV layout") {
    const CircleConfig c = small_grid(8);
    CircleProfile p;
    p.n_theta = 8;
    p.values.assign(8, 1.0);
    p.alpha = 1.0;
    std::ostringstream out;
    write_profile_csv(out, p, std::vector<double>(8, 0.0), "0123456789abcdef");
    const std::string s = out.str();
    CHECK(s.rfind("# alpha=1.0\n# branch=power\n# operator_hash=0123456789abcdef\ntheta,phi,residual\n", 0) == 0);
    CHECK(s.find('\r') == std::string::npos);
    (void)c;
}

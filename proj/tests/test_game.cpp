#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ellipticfund/error.hpp"
#include "ellipticfund/game.hpp"
#include "ellipticfund/radial.hpp"

using namespace ellipticfund;

namespace {

const EllipticityPair k12{1.0, 2.0};

SimConfig sim(double x0, long paths, std::uint64_t seed = 0) {
    SimConfig c;
    c.x0 = {x0, 0.0};
    c.n_paths = paths;
    c.master_seed = seed;
    return c;
}

HessianFn xi_hess(double alpha) {
    return [alpha](std::span<const double> x) { return xi_hessian(alpha, x); };
}

SymMatrix rank_one_control(double t) {
    const double e[2] = {std::cos(t), std::sin(t)};
    return SymMatrix::identity(2) * k12.lambda + SymMatrix::outer(e) * (k12.Lambda - k12.lambda);
}

}  // namespace

TEST_CASE("game validation") {
    GameSpec stalled;
    stalled.sigma = {{0, 0, 0, 0}};
    stalled.declared = k12;
    CHECK_THROWS_AS(validate(stalled), Error);
    CHECK_NOTHROW(validate(brownian_game(3)));
    CHECK_THROWS_AS(pucci_game_2d(k12, 8, 3), Error);
    SimConfig bad = sim(0.5, 10);
    bad.R = 0.2;
    CHECK_THROWS_AS(validate(bad, brownian_game(2)), Error);
    bad = sim(2.0, 10);
    CHECK_THROWS_AS(validate(bad, brownian_game(2)), Error);
}

TEST_CASE("Isaacs operators from controls") {
    std::vector<SymMatrix> ds;
    for (int k = 0; k < 4; ++k) ds.push_back(rank_one_control(std::numbers::pi * k / 4));
    const GameSpec g = make_game_from_diffusions(4, 1, ds, k12);
    const double m[2] = {1, -1};
    CHECK(eval(build_isaacs_from_controls(g, IsaacsConvention::upper), SymMatrix::diagonal(m)) == doctest::Approx(1.0));

    const OperatorSpec lap = build_isaacs_from_controls(brownian_game(2), IsaacsConvention::upper);
    std::mt19937_64 rng(1);
    for (int s = 0; s < 50; ++s) {
        const SymMatrix x = random_sym(2, rng);
        CHECK(eval(lap, x) == doctest::Approx(-x.trace()));
    }

    // singleton A or singleton B: the two conventions agree
    const GameSpec gb = make_game_from_diffusions(1, 4, ds, k12);
    for (const GameSpec* game : {&g, &gb}) {
        const OperatorSpec up = build_isaacs_from_controls(*game, IsaacsConvention::upper);
        const OperatorSpec lo = build_isaacs_from_controls(*game, IsaacsConvention::lower);
        const OperatorSpec vu = value_operator(*game, IsaacsConvention::upper);
        const OperatorSpec vl = value_operator(*game, IsaacsConvention::lower);
        for (int s = 0; s < 100; ++s) {
            const SymMatrix x = random_sym(2, rng);
            CHECK(std::abs(eval(up, x) - eval(lo, x)) <= 1e-12);
            CHECK(std::abs(eval(vu, x) - eval(vl, x)) <= 1e-12);
        }
    }
}

TEST_CASE("value operator of the Pucci games") {
    std::mt19937_64 rng(2);
    const OperatorSpec v2 = value_operator(pucci_game_2d(k12, 64, 2), IsaacsConvention::upper);
    const OperatorSpec v1 = value_operator(pucci_game_2d(k12, 64, 1), IsaacsConvention::upper);
    for (int s = 0; s < 100; ++s) {
        const SymMatrix x = random_sym(2, rng);
        // finite direction sets approximate the Pucci operators from inside
        CHECK(eval(v2, x) <= pucci_plus(k12, x) + 1e-12);
        CHECK(eval(v2, x) >= pucci_plus(k12, x) - 0.01 * x.max_abs());
        CHECK(eval(v1, x) >= pucci_minus(k12, x) - 1e-12);
        CHECK(eval(v1, x) <= pucci_minus(k12, x) + 0.01 * x.max_abs());
    }
}

TEST_CASE("optimal feedback against a radial Phi") {
    const GameSpec g = pucci_game_2d(k12, 64, 2);
    const FeedbackPolicy pol = optimal_feedback_policy(g, xi_hess(1.0), Player::two);
    CHECK(pol.kind == PolicyKind::argmin_drift);
    const double e1[2] = {1, 0};
    const SymMatrix d = g.diffusion(0, pol(e1));
    const double expect[2] = {1, 2};
    CHECK((d - SymMatrix::diagonal(expect)).max_abs() <= 1e-12);
    CHECK(std::abs(d.trace_product(xi_hessian(1.0, e1))) <= 1e-12);

    for (int j = 0; j < 8; ++j) {
        const double t = std::numbers::pi * j / 4;
        const double c = std::cos(t), s = std::sin(t);
        const double x[2] = {0.7 * c, 0.7 * s};
        const double x0[2] = {0.7, 0};
        const double q[4] = {c, -s, s, c};
        const SymMatrix base = g.diffusion(0, pol(x0));
        // Q D Q^T
        double rot[4] = {0, 0, 0, 0};
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) rot[i * 2 + k] += q[i * 2 + a] * base(a, b) * q[k * 2 + b];
        CHECK((g.diffusion(0, pol(x)) - SymMatrix::from_full(2, rot)).max_abs() <= 1e-12);
    }
    const FeedbackPolicy one = optimal_feedback_policy(brownian_game(2), xi_hess(1.0), Player::one);
    const double y[2] = {0.3, -0.2};
    CHECK(one(y) == 0);
}

TEST_CASE("simulate_exit edge cases") {
    const GameSpec g = brownian_game(2);
    const auto f = fixed_policy(0);
    const ExitOutcome at = simulate_exit(g, f, f, sim(0.25, 1), 0);
    CHECK(at.side == ExitSide::inner);
    CHECK(at.time == 0.0);
    SimConfig quick = sim(0.5, 1);
    quick.max_time = 1e-6;
    CHECK(simulate_exit(g, f, f, quick, 0).side == ExitSide::timeout);
    CHECK(path_seed(0, 1) != path_seed(0, 2));
    CHECK(path_seed(1, 1) != path_seed(0, 1));
}

TEST_CASE("Brownian exit laws") {
    const auto f = fixed_policy(0);
    // log law in the plane: log(R/|x0|) / log(R/r) = 1/2
    const HitStats two = estimate_hit_prob(brownian_game(2), f, f, sim(0.5, 20000, 3));
    CHECK(std::abs(two.p_hat - 0.5) <= 3 * two.std_error);
    CHECK(two.n_inner + two.n_outer + two.n_timeout == 20000);
    CHECK(two.p_hat >= 0.0);
    CHECK(two.p_hat <= 1.0);

    // halving dt_base moves the n = 3 estimate by at most two standard errors
    SimConfig c = sim(0.5, 20000, 5);
    c.x0 = {0.5, 0.0, 0.0};
    const HitStats a = estimate_hit_prob(brownian_game(3), f, f, c);
    c.dt_base /= 2;
    const HitStats b = estimate_hit_prob(brownian_game(3), f, f, c);
    CHECK(std::abs(a.p_hat - b.p_hat) <= 2 * a.std_error);
    CHECK(std::abs(a.p_hat - 1.0 / 3) <= 3 * a.std_error);
}

TEST_CASE("exit probability decreases along a ray") {
    const auto f = fixed_policy(0);
    double prev = 2;
    for (double x0 : {0.35, 0.5, 0.75}) {
        const HitStats s = estimate_hit_prob(brownian_game(2), f, f, sim(x0, 8000, 9));
        CHECK(s.p_hat <= prev + 3 * s.std_error);
        prev = s.p_hat;
    }
}

TEST_CASE("Pucci game sandwich") {
    const GameSpec g = pucci_game_2d(k12, 64, 2);
    const auto one = fixed_policy(0);
    const FeedbackPolicy opt = optimal_feedback_policy(g, xi_hess(1.0), Player::two);
    SimConfig c = sim(0.5, 4000, 1);
    const HitStats s = estimate_hit_prob(g, one, opt, c);
    CHECK(std::abs(s.p_hat - 1.0 / 3) <= 3 * s.std_error + 0.01);
    // a suboptimal escape rule can only raise the hitting probability
    const HitStats lazy = estimate_hit_prob(g, one, fixed_policy(0), c);
    CHECK(lazy.p_hat >= 1.0 / 3 - 3 * lazy.std_error);
}

TEST_CASE("parallel estimates match the serial reference bit for bit") {
    const GameSpec g = pucci_game_2d(k12, 16, 2);
    const FeedbackPolicy opt = optimal_feedback_policy(g, xi_hess(1.0), Player::two);
    const SimConfig c = sim(0.5, 2000, 42);
    omp_set_num_threads(4);
    const HitStats p4 = estimate_hit_prob(g, fixed_policy(0), opt, c);
    omp_set_num_threads(1);
    const HitStats p1 = estimate_hit_prob(g, fixed_policy(0), opt, c);
    const HitStats s = estimate_hit_prob_serial(g, fixed_policy(0), opt, c);
    CHECK(p4 == s);
    CHECK(p1 == s);
    CHECK(canonical_dump(to_json(p4, c)) == canonical_dump(to_json(s, c)));
    const HitStats other = estimate_hit_prob_serial(g, fixed_policy(0), opt, sim(0.5, 2000, 43));
    CHECK_FALSE(other == s);
}

TEST_CASE("scaling ladder") {
    const auto f = fixed_policy(0);
    SimConfig c;
    c.R = 4;
    c.x0 = {0.5, 0, 0};
    c.dt_base = 0.05;
    c.step_factor = 0.25;
    c.n_paths = 4000;
    const ScalingFit fit = recover_exponent_scaling(brownian_game(3), f, f, {0.2, 0.1, 0.05, 0.025}, c);
    CHECK(fit.points.size() == 4);
    CHECK(fit.local_slopes.size() == 3);
    CHECK(fit.power_law);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.1));
    CHECK_THROWS_AS(recover_exponent_scaling(brownian_game(3), f, f, {0.1, 0.2, 0.05}, c), Error);
    c.n_paths = 100;
    try {
        recover_exponent_scaling(brownian_game(3), f, f, {0.2, 0.02, 2e-4, 2e-6}, c);
        FAIL("deep ladder accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ladder_too_deep);
    }
    std::ostringstream out;
    write_ladder_csv(out, fit);
    CHECK(out.str().rfind("r,p_hat,stderr\n", 0) == 0);
}

TEST_CASE("classify_recurrence") {
    CHECK(classify_recurrence(3.0, 1e-6) == Recurrence::transient);
    CHECK(classify_recurrence(-0.5, 1e-6) == Recurrence::strongly_recurrent);
    CHECK(classify_recurrence(0.0, 1e-6) == Recurrence::neighborhood_recurrent);
    CHECK_THROWS_AS(classify_recurrence(0.0, -1.0), Error);
}

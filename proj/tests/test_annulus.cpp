#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ellipticfund/error.hpp"
#include "ellipticfund/annulus.hpp"
#include "ellipticfund/radial.hpp"

using namespace ellipticfund;

namespace {

const EllipticityPair k12{1.0, 2.0};

BoundaryFn constant(double c) {
    return [c](double, double) { return c; };
}

SymMatrix reconstruct(const Decomposition& d) {
    SymMatrix a = SymMatrix::zero(2);
    for (const auto& t : d.terms) {
        const double e[2] = {t.dir.p / t.dir.norm(), t.dir.q / t.dir.norm()};
        a += SymMatrix::outer(e) * t.weight;
    }
    return a;
}

double sup_error_radial(const DirichletSolution& sol, const std::function<double(double)>& exact) {
    const AnnulusGrid& g = sol.field.grid();
    double err = 0;
    for (std::size_t k = 0; k < g.active_count(); ++k) {
        const std::size_t nd = g.active_node(k);
        const double x = g.x(static_cast<int>(nd % g.side())), y = g.x(static_cast<int>(nd / g.side()));
        err = std::max(err, std::abs(sol.field.at_node(nd) - exact(std::hypot(x, y))));
    }
    return err;
}

}  // namespace

TEST_CASE("direction sets") {
    CHECK(direction_set(1).size() == 2);
    CHECK(direction_set(2).size() == 8);
    CHECK(direction_set(3).size() == 16);
    CHECK_THROWS_AS(direction_set(4), Error);
}

TEST_CASE("nnls") {
    // columns e1, e2, e1 + e2; b = (1, 2) is reached without the third column
    const std::vector<double> e{1, 0, 1, 0, 1, 1};
    const auto x = nnls(e, 2, 3, {1, 2});
    CHECK(x[0] * 1 + x[2] == doctest::Approx(1.0));
    CHECK(x[1] + x[2] == doctest::Approx(2.0));
    for (double v : x) CHECK(v >= 0);
    const auto neg = nnls({1, 0, 0, 1}, 2, 2, {-1, 3});
    CHECK(neg[0] == 0.0);
    CHECK(neg[1] == doctest::Approx(3.0));
}

TEST_CASE("direction decompositions") {
    const Decomposition id = direction_decomposition(SymMatrix::identity(2), 1);
    CHECK(id.width == 1);
    CHECK(id.terms.size() == 2);
    for (const auto& t : id.terms) CHECK(t.weight == doctest::Approx(1.0));

    const double full[4] = {1, 0.5, 0.5, 1};
    const SymMatrix a = SymMatrix::from_full(2, full);
    const Decomposition d = direction_decomposition(a, 1);
    CHECK(d.width == 2);
    CHECK(d.residual <= 1e-8);
    CHECK((reconstruct(d) - a).max_abs() <= 1e-8);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 100; ++s) {
        const double t = std::numbers::pi * u(rng), l1 = 1 + u(rng), l2 = 1 + u(rng);
        const double c = std::cos(t), sn = std::sin(t);
        const double f[4] = {l1 * c * c + l2 * sn * sn, (l1 - l2) * c * sn, (l1 - l2) * c * sn, l1 * sn * sn + l2 * c * c};
        const SymMatrix m = SymMatrix::from_full(2, f);
        const Decomposition dm = direction_decomposition(m, 2);
        CHECK(dm.residual <= 1e-8);
        CHECK((reconstruct(dm) - m).max_abs() <= 1e-8);
        for (const auto& term : dm.terms) CHECK(term.weight >= 0);
    }
    // nearly rank one along an angle no lattice direction of width 3 hits
    const double e[2] = {std::cos(0.3), std::sin(0.3)};
    const SymMatrix thin = SymMatrix::outer(e) + SymMatrix::identity(2) * 1e-4;
    try {
        direction_decomposition(thin, 1);
        FAIL("thin matrix decomposed");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::decomposition);
    }
}

TEST_CASE("annulus grid") {
    const AnnulusGrid g(0.25, 1.0, 1.0 / 32);
    CHECK(g.active_count() > 0);
    for (std::size_t k = 0; k < g.active_count(); ++k) {
        const std::size_t nd = g.active_node(k);
        const double r = std::hypot(g.x(static_cast<int>(nd % g.side())), g.x(static_cast<int>(nd / g.side())));
        CHECK(r > 0.25);
        CHECK(r < 1.0);
        CHECK(g.unknown(nd) == static_cast<long>(k));
    }
    CHECK_THROWS_AS(AnnulusGrid(0.25, 1.0, 0.1), Error);
    CHECK_THROWS_AS(AnnulusGrid(1.0, 0.25, 0.01), Error);
}

TEST_CASE("constant data give constant solutions") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 32);
    for (const OperatorSpec& op : {make_laplacian(2), make_pucci_plus(k12, 2), make_pucci_minus(k12, 2)}) {
        const DirichletSolution s = solve_dirichlet_2d(op, grid, constant(7), constant(7));
        CHECK(std::abs(s.field.min_active() - 7) <= 1e-10);
        CHECK(std::abs(s.field.max_active() - 7) <= 1e-10);
    }
}

TEST_CASE("laplacian and pucci radial solutions at h = 1/64") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 64);
    const DirichletSolution lap = solve_dirichlet_2d(make_laplacian(2), grid, constant(1), constant(0));
    const double e = sup_error_radial(lap, [](double r) { return std::log(1.0 / r) / std::log(4.0); });
    CHECK(e <= 2e-2);
    CHECK(lap.field.sample(0.5, 0.0) == doctest::Approx(0.5).epsilon(2e-2));
    CHECK(lap.report.method == "policy_iteration");

    const DirichletSolution pp = solve_dirichlet_2d(make_pucci_plus(k12, 2), grid, constant(1), constant(0));
    // xi_1 ratio: (1/r - 1) / (4 - 1)
    CHECK(sup_error_radial(pp, [](double r) { return (1 / r - 1) / 3; }) <= 2e-2);
    CHECK(pp.report.max_decomposition_residual <= 1e-8);
}

TEST_CASE("comparison, range and duality") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 32);
    const OperatorSpec op = make_pucci_plus(k12, 2);
    const BoundaryFn gi = [](double x, double y) { return 1 + 0.5 * x / std::hypot(x, y); };
    const BoundaryFn gi2 = [](double x, double y) { return 1.2 + 0.5 * x / std::hypot(x, y) + 0.1 * y; };
    const BoundaryFn go = [](double x, double) { return 0.2 * x; };
    const DirichletSolution lo = solve_dirichlet_2d(op, grid, gi, go);
    const DirichletSolution hi = solve_dirichlet_2d(op, grid, gi2, go);
    const auto& vl = lo.field.values();
    const auto& vh = hi.field.values();
    double gmin = -0.2, gmax = 1.5;
    for (std::size_t k = 0; k < grid->active_count(); ++k) {
        const std::size_t nd = grid->active_node(k);
        CHECK(vl[nd] <= vh[nd] + 1e-10);
        CHECK(vl[nd] >= gmin - 1e-10);
        CHECK(vl[nd] <= gmax + 1e-10);
    }
    const BoundaryFn ngi = [gi](double x, double y) { return -gi(x, y); };
    const BoundaryFn ngo = [go](double x, double y) { return -go(x, y); };
    const DirichletSolution dual = solve_dirichlet_2d(dual_operator(op), grid, ngi, ngo);
    double gap = 0;
    for (std::size_t k = 0; k < grid->active_count(); ++k) {
        const std::size_t nd = grid->active_node(k);
        gap = std::max(gap, std::abs(vl[nd] + dual.field.values()[nd]));
    }
    CHECK(gap <= 1e-8);
}

TEST_CASE("relaxation and policy iteration agree") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 24);
    const OperatorSpec op = make_pucci_minus(k12, 2);
    SolverConfig relax;
    relax.force_relaxation = true;
    const DirichletSolution a = solve_dirichlet_2d(op, grid, constant(1), constant(0));
    const DirichletSolution b = solve_dirichlet_2d(op, grid, constant(1), constant(0), relax);
    CHECK(b.report.method == "relaxation");
    double gap = 0;
    for (std::size_t k = 0; k < grid->active_count(); ++k) {
        const std::size_t nd = grid->active_node(k);
        gap = std::max(gap, std::abs(a.field.at_node(nd) - b.field.at_node(nd)));
    }
    CHECK(gap <= 1e-6);
}

TEST_CASE("genuine sup-inf operators use relaxation") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 24);
    const double d[2] = {1.0, 1.8};
    const OperatorSpec op = make_sup_inf({{SymMatrix::identity(2), SymMatrix::diagonal(d)}, {SymMatrix::identity(2) * 1.5}}, k12);
    const DirichletSolution s = solve_dirichlet_2d(op, grid, constant(1), constant(0));
    CHECK(s.report.method == "relaxation");
    CHECK(s.field.min_active() >= -1e-10);
    CHECK(s.field.max_active() <= 1 + 1e-10);
}

TEST_CASE("serial and parallel kernels agree") {
    omp_set_num_threads(4);
    const AnnulusGrid grid(0.25, 1.0, 1.0 / 40);
    const DiscreteOperator dop = discretize_operator(make_pucci_plus(k12, 2), 2, 64);
    const AnnulusStencil st(grid, dop.directions, constant(1), constant(0), BoundaryTreatment::shortened_arm);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(st.unknowns());
    for (auto& x : v) x = u(rng);
    std::vector<double> a, b;
    apply_discrete_operator_serial(dop, st, v, a);
    apply_discrete_operator_parallel(dop, st, v, b);
    CHECK(a == b);
    const auto tau = relaxation_steps(dop, st, 0.9);
    std::vector<double> na, nb;
    const double ra = relaxation_sweep_serial(dop, st, tau, v, na);
    const double rb = relaxation_sweep_parallel(dop, st, tau, v, nb);
    CHECK(ra == rb);
    CHECK(na == nb);
}

TEST_CASE("discretized Pucci operators") {
    const DiscreteOperator plus = discretize_operator(make_pucci_plus(k12, 2), 1, 64);
    CHECK(plus.outer == DiscreteOperator::Outer::sup);
    CHECK(plus.single_level());
    CHECK(plus.controls.size() == 66);
    const DiscreteOperator minus = discretize_operator(make_pucci_minus(k12, 2), 1, 64);
    // sup over a single group: the inf over all members
    CHECK(minus.groups.size() == 1);
    CHECK_FALSE(plus.controls.empty());
    CHECK_THROWS_AS(discretize_operator(make_laplacian(3), 1, 64), Error);
}

TEST_CASE("field CSV and sampling") {
    auto grid = std::make_shared<const AnnulusGrid>(0.25, 1.0, 1.0 / 32);
    const DirichletSolution s = solve_dirichlet_2d(make_laplacian(2), grid, constant(1), constant(0));
    std::ostringstream out;
    write_field_csv(out, s.field);
    CHECK(out.str().rfind("x,y,u\n", 0) == 0);
    CHECK_THROWS_AS(s.field.sample(0.0, 0.0), Error);
}

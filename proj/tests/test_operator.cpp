#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "ellipticfund/error.hpp"
#include "ellipticfund/operator.hpp"
#include "ellipticfund/operator_json.hpp"

using namespace ellipticfund;

namespace {

const EllipticityPair k12{1.0, 2.0};

SymMatrix diag2(double a, double b) {
    const double d[2] = {a, b};
    return SymMatrix::diagonal(d);
}

std::vector<OperatorSpec> sample_operators() {
    std::mt19937_64 rng(7);
    std::vector<OperatorSpec> ops;
    ops.push_back(make_pucci_plus(k12, 3));
    ops.push_back(make_pucci_minus(k12, 3));
    ops.push_back(make_laplacian(3));
    ops.push_back(make_f1(k12, 3));
    ops.push_back(make_f2(k12, 3));
    std::vector<MatrixFamily> fams;
    for (int f = 0; f < 3; ++f) {
        MatrixFamily fam;
        for (int m = 0; m < 3; ++m) {
            SymMatrix a = SymMatrix::identity(3) + random_psd(3, rng);
            // squeeze the spectrum into [1, 2]
            const auto ev = eigenvalues_sym(a);
            a = SymMatrix::identity(3) + (a - SymMatrix::identity(3)) * (1.0 / std::max(1.0, ev.back() - 1.0));
            fam.push_back(a);
        }
        fams.push_back(fam);
    }
    ops.push_back(make_sup_inf(fams, k12));
    ops.push_back(make_inf_sup(fams, k12));
    return ops;
}

}  // namespace

TEST_CASE("eval on the worked examples") {
    CHECK(eval(make_pucci_plus(k12, 2), diag2(1, -1)) == doctest::Approx(1.0));
    CHECK(eval(make_pucci_minus(k12, 2), diag2(1, -1)) == doctest::Approx(-1.0));
    CHECK(eval(make_laplacian(2), diag2(3, 4)) == doctest::Approx(-7.0));
    for (const auto& op : sample_operators()) CHECK(eval(op, SymMatrix::zero(op.dim)) == 0.0);
}

TEST_CASE("eval rejects a dimension mismatch") {
    CHECK_THROWS_AS(eval(make_laplacian(3), diag2(1, 1)), Error);
}

TEST_CASE("eigenvalues_sym") {
    const double full[4] = {0, 1, 1, 0};
    const auto ev = eigenvalues_sym(SymMatrix::from_full(2, full));
    CHECK(ev[0] == doctest::Approx(-1.0));
    CHECK(ev[1] == doctest::Approx(1.0));
    const double d[3] = {2, -1, -1};
    const auto e3 = eigenvalues_sym(SymMatrix::diagonal(d));
    CHECK(e3 == std::vector<double>{-1, -1, 2});

    std::mt19937_64 rng(11);
    for (int s = 0; s < 20; ++s) {
        const SymMatrix m = random_sym(4, rng);
        const auto mu = eigenvalues_sym(m);
        const std::vector<double> f = m.to_full();
        const Eigen::Matrix4d em = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(f.data());
        double sum = 0, prod = 1;
        for (double v : mu) {
            sum += v;
            prod *= v;
        }
        CHECK(std::abs(sum - m.trace()) <= 1e-9);
        CHECK(std::abs(prod - em.determinant()) <= 1e-9);
        CHECK(std::is_sorted(mu.begin(), mu.end()));
    }
}

TEST_CASE("eigen_decompose reproduces the matrix") {
    std::mt19937_64 rng(3);
    const SymMatrix m = random_sym(5, rng);
    const SymEigen e = eigen_decompose(m);
    SymMatrix back = SymMatrix::zero(5);
    for (int k = 0; k < 5; ++k) back += SymMatrix::outer(std::span<const double>(&e.vectors[k * 5], 5)) * e.values[k];
    CHECK((back - m).max_abs() <= 1e-12);
}

TEST_CASE("dual operator") {
    std::mt19937_64 rng(5);
    const OperatorSpec dp = dual_operator(make_pucci_plus(k12, 3));
    CHECK(std::holds_alternative<PucciMinus>(dp.variant));
    const OperatorSpec pm = make_pucci_minus(k12, 3);
    const SymMatrix a = SymMatrix::identity(3) * 1.5;
    const OperatorSpec lin = make_linear(a, k12);
    CHECK(std::get<Linear>(dual_operator(lin).variant).A == a);
    for (int s = 0; s < 100; ++s) {
        const SymMatrix m = random_sym(3, rng);
        CHECK(std::abs(eval(dp, m) - eval(pm, m)) <= 1e-12);
        for (const auto& op : sample_operators())
            CHECK(std::abs(eval(dual_operator(dual_operator(op)), m) - eval(op, m)) <= 1e-12);
    }
}

TEST_CASE("structural properties on sampled matrices") {
    std::mt19937_64 rng(13);
    for (const auto& op : sample_operators()) {
        for (int s = 0; s < 100; ++s) {
            const SymMatrix m = random_sym(3, rng);
            const SymMatrix nn = random_psd(3, rng);
            const double f = eval(op, m);
            for (double t : {0.0, 0.5, 1.0, 2.0, 10.0})
                CHECK(std::abs(eval(op, m * t) - t * f) <= 1e-9 * (1 + t * std::abs(f)));
            CHECK(eval(op, m - nn) >= f - 1e-12);
            CHECK(pucci_minus(k12, m) <= f + 1e-12);
            CHECK(f <= pucci_plus(k12, m) + 1e-12);
        }
    }
    for (int s = 0; s < 100; ++s) {
        const SymMatrix m = random_sym(4, rng);
        CHECK(std::abs(pucci_plus(k12, m) + pucci_minus(k12, -m)) <= 1e-15 * (1 + m.max_abs()));
    }
}

TEST_CASE("verify_h1_h2") {
    const auto pp = verify_h1_h2(make_pucci_plus(k12, 3), k12, 1000, 1);
    CHECK(pp.h1_pass);
    CHECK(pp.h2_pass);
    CHECK(pp.n_samples == 1000);
    const OperatorSpec lin = make_linear(diag2(1, 3), {1, 3});
    CHECK(verify_h1_h2(lin, {1, 3}, 1000, 1).h1_pass);
    const auto bad = verify_h1_h2(lin, k12, 1000, 1);
    CHECK_FALSE(bad.h1_pass);
    // N = e2 (x) e2: F(M - N) - F(M) = trace(A N) = 3 against the ceiling 2
    const double e2[2] = {0, 1};
    std::mt19937_64 rng(2);
    CHECK(h1_violation(lin, k12, random_sym(2, rng), SymMatrix::outer(e2)) == doctest::Approx(1.0));
}

TEST_CASE("pucci sandwich check") {
    CHECK(pucci_sandwich_check(make_f1(k12, 4), 1000, 3).pass);
    std::mt19937_64 rng(17);
    const OperatorSpec pm = make_pucci_minus(k12, 3);
    for (int s = 0; s < 100; ++s) {
        const SymMatrix m = random_sym(3, rng);
        CHECK(std::abs(eval(pm, m) - pucci_minus(k12, m)) <= 1e-12);
    }
    const OperatorSpec single = make_sup_inf({{SymMatrix::identity(2) * 1.5}}, k12);
    for (int s = 0; s < 100; ++s) {
        const SymMatrix m = random_sym(2, rng);
        const double f = eval(single, m);
        CHECK(f == doctest::Approx(-1.5 * m.trace()));
        CHECK(pucci_minus(k12, m) < f);
        CHECK(f < pucci_plus(k12, m));
    }
    CHECK(pucci_sandwich_check(single, 500, 4).pass);
}

TEST_CASE("builders validate") {
    CHECK_THROWS_AS(make_pucci_plus({2, 1}, 3), Error);
    CHECK_THROWS_AS(make_pucci_plus(k12, 1), Error);
    CHECK_THROWS_AS(make_linear(diag2(0.5, 1), k12), Error);
    CHECK_THROWS_AS(make_eigen_symmetric({1, 3}, k12), Error);
    const auto f1 = std::get<EigenSymmetric>(make_f1(k12, 4).variant).coeffs;
    CHECK(f1 == std::vector<double>{2, 1, 1, 2});
    const auto f2 = std::get<EigenSymmetric>(make_f2(k12, 4).variant).coeffs;
    CHECK(f2 == std::vector<double>{1, 2, 2, 1});
}

TEST_CASE("operator JSON") {
    const Json asym = Json::parse(R"({"kind":"linear","dim":2,"lambda":1,"Lambda":2,"A":[[1,0.001],[0,1]]})");
    try {
        operator_from_json(asym);
        FAIL("asymmetric A accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_input);
        CHECK(std::string(e.what()).find("A") != std::string::npos);
    }
    for (const auto& op : sample_operators()) {
        const OperatorSpec back = operator_from_json(operator_to_json(op));
        CHECK(operator_hash(back) == operator_hash(op));
        CHECK(operator_hash(back).size() == 16);
    }
    CHECK(operator_hash(make_pucci_plus(k12, 3)) != operator_hash(make_pucci_minus(k12, 3)));
    CHECK_THROWS_AS(operator_from_json(Json::parse(R"({"kind":"pucci+","dim":3,"lambda":2,"Lambda":1})")), Error);
    CHECK_THROWS_AS(load_operator_file("/nonexistent/op.json"), Error);
}

TEST_CASE("canonical JSON formatting") {
    CHECK(canonical_dump(Json{{"b", 1.0}, {"a", 0.1}}) == R"({"a":0.10000000000000001,"b":1.0})");
    CHECK(format_double(3.0) == "3.0");
    CHECK(canonical_dump(Json(std::nan(""))) == "null");
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

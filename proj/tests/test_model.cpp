#include <doctest.h>

#include <cmath>
#include <random>

#include "superrad/model.hpp"

using namespace superrad;

TEST_CASE("validate_params accepts and rejects") {
    SystemParams p;
    p.n_atoms = 1;
    p.gamma0 = 0.001;
    p.lambda = 0.01;
    const auto q = validate_params(p);
    CHECK(q.n_atoms == 1);
    CHECK(q.gamma0 == doctest::Approx(0.001));
    CHECK(q.lambda == doctest::Approx(0.01));

    SystemParams bad = p;
    bad.n_atoms = 0;
    try {
        validate_params(bad);
        FAIL("expected ParamError");
    } catch (const ParamError& e) {
        CHECK(e.field() == "n_atoms");
        CHECK(std::string(e.what()).find("n_atoms ≥ 1") != std::string::npos);
    }

    bad = p;
    bad.gamma0 = -1.0;
    CHECK_THROWS_AS(validate_params(bad), ParamError);
    bad = p;
    bad.gamma0 = 0.0;
    CHECK_THROWS_AS(validate_params(bad), ParamError);
    bad = p;
    bad.lambda = -1e-9;
    CHECK_THROWS_AS(validate_params(bad), ParamError);
    bad = p;
    bad.omega0 = 0.0;
    CHECK_THROWS_AS(validate_params(bad), ParamError);
    bad = p;
    bad.gamma0 = std::nan("");
    CHECK_THROWS_AS(validate_params(bad), ParamError);
    bad = p;
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(validate_params(bad), ParamError);
}

TEST_CASE("lossless cavity is valid but has no Markovian rate") {
    SystemParams p;
    p.gamma0 = 0.001;
    p.lambda = 0.0;
    CHECK_NOTHROW(validate_params(p));
    CHECK_THROWS_AS(markovian_rate(p), UndefinedRateError);
}

TEST_CASE("omega0 sets the unit system") {
    SystemParams p;
    p.gamma0 = 0.002;
    p.lambda = 0.01;
    p.omega0 = 2.0;
    const auto q = validate_params(p);
    CHECK(q.omega0 == 1.0);
    CHECK(q.gamma0 == doctest::Approx(0.001));
    CHECK(q.lambda == doctest::Approx(0.005));
}

TEST_CASE("markovian_rate quotients") {
    SystemParams p;
    p.gamma0 = 0.001;
    p.lambda = 0.001;
    CHECK(markovian_rate(p) == doctest::Approx(0.001));
    p.lambda = 0.01;
    CHECK(markovian_rate(p) == doctest::Approx(1e-4));
    p.gamma0 = 0.002;
    p.lambda = 0.001;
    CHECK(markovian_rate(p) == doctest::Approx(0.004));
}

TEST_CASE("derived frequencies vanish at their thresholds") {
    const double g = 1e-3;
    SystemParams p;
    p.gamma0 = g;
    p.lambda = std::sqrt(2.0) * g;
    // Rounding in the radicand leaves a root of order sqrt(eps) lambda.
    CHECK(std::abs(derived_frequencies(p).omega1) < 1e-7 * g);
    p.lambda = 2.0 * g;
    CHECK(std::abs(derived_frequencies(p).omega) < 1e-7 * g);
    p.lambda = 2.0 * std::sqrt(2.0) * g;
    CHECK(std::abs(derived_frequencies(p).omega_tilde) < 1e-7 * g);
}

TEST_CASE("derived frequencies satisfy their defining squares for random parameters") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> lg(-4.0, -1.0), ratio(0.0, 10.0);
    for (int k = 0; k < 200; ++k) {
        SystemParams p;
        p.gamma0 = std::pow(10.0, lg(rng));
        p.lambda = ratio(rng) * p.gamma0;
        p = validate_params(p);
        const auto f = derived_frequencies(p);
        const double l2 = p.lambda * p.lambda, g2 = p.gamma0 * p.gamma0;
        const double scale = l2 + 8.0 * g2;
        CHECK(std::abs(f.omega1 * f.omega1 + 2.0 * g2 - l2) <= 1e-14 * scale);
        CHECK(std::abs(f.omega * f.omega + 4.0 * g2 - l2) <= 1e-14 * scale);
        CHECK(std::abs(f.omega_tilde * f.omega_tilde + 8.0 * g2 - l2) <= 1e-14 * scale);
        // Negative radicands give purely imaginary roots.
        if (l2 < 8.0 * g2) CHECK(std::abs(f.omega_tilde.real()) <= 1e-12 * std::sqrt(scale));
    }
}

TEST_CASE("tolerances relax above N = 100") {
    SystemParams p;
    p.n_atoms = 100;
    CHECK(effective_abs_tol(p) == 1e-9);
    CHECK(effective_rel_tol(p) == 1e-9);
    p.n_atoms = 101;
    CHECK(effective_abs_tol(p) == 1e-7);
    p.abs_tol = 1e-11;
    CHECK(effective_abs_tol(p) == 1e-11);
}

TEST_CASE("horizon cap") {
    SystemParams p;
    p.gamma0 = 1e-3;
    p.lambda = 1e-2;
    CHECK(horizon_cap(p) == doctest::Approx(50.0 / 1e-4));
    p.lambda = 0.0;
    p.n_atoms = 4;
    CHECK(horizon_cap(p) == doctest::Approx(50.0 * std::sqrt(2.0) / (1e-3 * 2.0)));
    // Small lambda: 50/gamma_M would be shorter than the lossless cap.
    p.lambda = 1e-6;
    CHECK(horizon_cap(p) == doctest::Approx(50.0 * std::sqrt(2.0) / (1e-3 * 2.0)));
}

TEST_CASE("grids") {
    const auto g = uniform_grid(0.0, 1.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[2] == doctest::Approx(0.5));
    CHECK_NOTHROW(validate_grid(g));
    CHECK_THROWS_AS(validate_grid({}), ParamError);
    CHECK_THROWS_AS(validate_grid({-1.0, 0.0}), ParamError);
    CHECK_THROWS_AS(validate_grid({0.0, 1.0, 1.0}), ParamError);
    CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 1), ParamError);
}

TEST_CASE("checked_real rejects imaginary residue") {
    CHECK(checked_real(cdouble(2.0, 1e-12), 1.0, "x") == 2.0);
    CHECK_THROWS_AS(checked_real(cdouble(2.0, 1e-6), 1.0, "x"), ImaginaryResidueError);
}

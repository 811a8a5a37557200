#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "superrad/analytic.hpp"
#include "superrad/dopri5.hpp"
#include "superrad/pseudomode.hpp"

using namespace superrad;

namespace {

constexpr double g0 = 1e-3;

SystemParams pr(int n, double ratio) { return SystemParams::from_ratio(n, ratio, g0); }

// Embeds a block state into the full Dicke (x) Fock matrix of the oracle.
oracle::Mat embed(const BlockDensityMatrix& rho, const oracle::DickeFockModel& m) {
    oracle::Mat out = oracle::Mat::Zero(m.dim(), m.dim());
    const int n = rho.n_atoms();
    for (int M = 0; M <= n; ++M)
        for (int i = 0; i <= M; ++i)
            for (int j = 0; j <= M; ++j) out(m.idx(i, M - i), m.idx(j, M - j)) = rho.at(M, i, j);
    return out;
}

// Random Hermitian, block-diagonal state with unit trace.
BlockDensityMatrix random_state(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockDensityMatrix r(n);
    double tr = 0.0;
    for (int M = 0; M <= n; ++M)
        for (int i = 0; i <= M; ++i) {
            const double d = 1.0 + u(rng);
            r.at(M, i, i) = d;
            tr += d;
            for (int j = i + 1; j <= M; ++j) {
                const cdouble z(0.2 * u(rng), 0.2 * u(rng));
                r.at(M, i, j) = z;
                r.at(M, j, i) = std::conj(z);
            }
        }
    for (auto& z : r.data()) z /= tr;
    return r;
}

double peak(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("block layout") {
    CHECK(BlockDensityMatrix::entry_count(0) == 1);
    CHECK(BlockDensityMatrix::entry_count(2) == 1 + 4 + 9);
    CHECK(BlockDensityMatrix::block_offset(3) == 14);
    const auto e = BlockDensityMatrix::excited(4);
    CHECK(e.at(4, 4, 4) == cdouble(1.0));
    CHECK(e.trace() == cdouble(1.0));
    CHECK(e.expectation_n() == 4.0);
    CHECK(e.total_excitations() == 4.0);
    const auto g = BlockDensityMatrix::ground(4);
    CHECK(g.at(0, 0, 0) == cdouble(1.0));
    CHECK(g.expectation_n() == 0.0);
    CHECK(ReducedLayout::entry_count(2) == 1 + 3 + 6);
}

TEST_CASE("Hamiltonian blocks") {
    const BlockLiouvillian L(pr(2, 1.0));
    // Block M = 2 over |0>|2>, |1>|1>, |2>|0>.
    const auto h = L.hamiltonian_block(2);
    REQUIRE(h.size() == 9);
    CHECK(h[0 * 3 + 1] == doctest::Approx(std::sqrt(2.0) * g0));
    CHECK(h[1 * 3 + 2] == doctest::Approx(g0));
    CHECK(h[0 * 3 + 2] == 0.0);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) CHECK(h[a * 3 + b] == h[b * 3 + a]);
    // Agrees with the full oracle Hamiltonian for N = 5.
    const int n = 5;
    const BlockLiouvillian L5(pr(n, 1.0));
    const oracle::DickeFockModel m(n, n, g0, 1.0 * g0);
    for (int M = 0; M <= n; ++M) {
        const auto hb = L5.hamiltonian_block(M);
        for (int i = 0; i <= M; ++i)
            for (int j = 0; j <= M; ++j)
                CHECK(hb[i * (M + 1) + j] == doctest::Approx(m.h(m.idx(i, M - i), m.idx(j, M - j)).real()).epsilon(1e-14));
    }
}

TEST_CASE("single emitter generator by hand") {
    // N = 1 block M = 1 over |0>|1>, |1>|0>: coupling g = gamma0/sqrt2.
    const auto p = validate_params(pr(1, 3.0));
    const BlockLiouvillian L(p);
    BlockDensityMatrix r(1);
    r.at(1, 1, 1) = 1.0;
    const auto d = apply_generator(L, r);
    const double g = g0 / std::sqrt(2.0);
    // d rho/dt = -i [H, rho]: only the coherences move at t = 0.
    CHECK(std::abs(d.at(1, 1, 1)) < 1e-18);
    CHECK(std::abs(d.at(1, 0, 1) - cdouble(0.0, -g)) < 1e-18);
    CHECK(std::abs(d.at(1, 1, 0) - cdouble(0.0, g)) < 1e-18);
    CHECK(std::abs(d.at(0, 0, 0)) < 1e-18);
    // A photon decays into the ground block at 2 lambda.
    BlockDensityMatrix q(1);
    q.at(1, 0, 0) = 1.0;
    const auto dq = apply_generator(L, q);
    CHECK(dq.at(0, 0, 0).real() == doctest::Approx(2.0 * p.lambda));
    CHECK(dq.at(1, 0, 0).real() == doctest::Approx(-2.0 * p.lambda));
}

TEST_CASE("generator agrees with a dense Lindblad oracle") {
    for (int n : {2, 3, 4}) {
        const auto p = validate_params(pr(n, 2.5));
        const BlockLiouvillian L(p);
        const oracle::DickeFockModel m(n, n, g0, p.lambda);
        for (unsigned seed : {1u, 2u, 3u}) {
            const auto r = random_state(n, seed);
            const auto d = apply_generator(L, r);
            const oracle::Mat ref = m.generator(embed(r, m));
            const oracle::Mat got = embed(d, m);
            CHECK((ref - got).cwiseAbs().maxCoeff() < 1e-16);
            // Trace preserving, Hermiticity preserving.
            CHECK(std::abs(d.trace()) < 1e-16);
            CHECK(d.hermiticity_error() < 1e-18);
            CHECK(intensity_from_generator(L, r) == doctest::Approx(m.intensity(embed(r, m))).epsilon(1e-10));
        }
    }
}

TEST_CASE("reduced generator is the dense generator in disguise") {
    const int n = 6;
    const auto p = validate_params(pr(n, 1.7));
    const BlockLiouvillian L(p);
    const ReducedLayout lay(n);
    // A state with the reduced phase pattern: rho_ij = i^{j-i} r_ij.
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> r(lay.size());
    for (int M = 0; M <= n; ++M)
        for (int i = 0; i <= M; ++i)
            for (int j = i; j <= M; ++j) r[lay.index(M, i, j)] = (i == j ? 1.0 : 0.1) * u(rng);
    const auto full = expand_reduced(lay, n, r.data());
    std::vector<double> dr(lay.size());
    apply_reduced_generator(L, lay, r.data(), dr.data());
    const auto d_red = expand_reduced(lay, n, dr.data());
    const auto d_full = apply_generator(L, full);
    double err = 0.0;
    for (std::size_t k = 0; k < d_full.data().size(); ++k)
        err = std::max(err, std::abs(d_full.data()[k] - d_red.data()[k]));
    CHECK(err < 1e-17);
    CHECK(reduced_intensity(L, lay, r.data()) == doctest::Approx(intensity_from_generator(L, full)).epsilon(1e-12));
}

TEST_CASE("intensity vanishes at the start and in the ground state") {
    const BlockLiouvillian L(pr(5, 1.0));
    CHECK(intensity_from_generator(L, BlockDensityMatrix::excited(5)) == 0.0);
    CHECK(intensity_from_generator(L, BlockDensityMatrix::ground(5)) == 0.0);
    CHECK(expectation_n(BlockDensityMatrix::excited(5)) == 5.0);
}

TEST_CASE("trajectory agrees with the dense oracle") {
    const int n = 3;
    for (double ratio : {0.5, 5.0}) {
        CAPTURE(ratio);
        const auto p = validate_params(pr(n, ratio));
        const std::vector<double> ts = {0.0, 500.0, 1500.0, 3000.0, 6000.0};
        const auto res = evolve(p, ts);
        const oracle::DickeFockModel m(n, n, g0, p.lambda);
        const auto states = m.evolve(m.excited(), ts, 0.5);
        const double scale = peak(res.trace.intensity);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            CHECK(std::abs(res.trace.intensity[k] - m.intensity(states[k])) < 1e-6 * scale);
            const double ex = (m.n_atoms * states[k]).trace().real();
            CHECK(std::abs(res.trace.excitation[k] - ex) < 1e-6);
        }
    }
}

TEST_CASE("pair trajectory matches the closed form") {
    for (double ratio : {0.5, 0.9024, 5.0}) {
        CAPTURE(ratio);
        const auto p = validate_params(pr(2, ratio));
        const PairSolution sol(p);
        const auto grid = uniform_grid(0.0, 20.0 / g0, 401);
        const auto res = evolve(p, grid);
        double err = 0.0, mx = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            err = std::max(err, std::abs(res.trace.intensity[k] - pair_intensity(sol, grid[k])));
            mx = std::max(mx, std::abs(pair_intensity(sol, grid[k])));
        }
        CHECK(err / mx < 1e-6);
    }
}

TEST_CASE("intensity is minus the rate of change of the excitation") {
    const auto p = validate_params(pr(4, 1.0));
    const double h = 1.0;
    for (double t0 : {700.0, 2000.0, 4500.0}) {
        const std::vector<double> ts = {0.0, t0 - 2 * h, t0 - h, t0, t0 + h, t0 + 2 * h};
        SystemParams q = p;
        q.abs_tol = q.rel_tol = 1e-12;
        const auto tr = evolve(q, ts).trace;
        const double fd =
            (-tr.excitation[5] + 8 * tr.excitation[4] - 8 * tr.excitation[2] + tr.excitation[1]) / (12 * h);
        CHECK(tr.intensity[3] == doctest::Approx(-fd).epsilon(1e-6));
    }
}

TEST_CASE("engines agree") {
    const auto p = validate_params(pr(8, 1.2));
    const auto grid = uniform_grid(0.0, 8000.0, 201);
    EvolveOptions a, b;
    a.engine = Engine::dense;
    b.engine = Engine::reduced;
    const auto ra = evolve(p, grid, a), rb = evolve(p, grid, b);
    CHECK(ra.engine == Engine::dense);
    CHECK(rb.engine == Engine::reduced);
    CHECK(ra.trace.meta.solver == "pseudomode/dense");
    const double scale = peak(ra.trace.intensity);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(std::abs(ra.trace.intensity[k] - rb.trace.intensity[k]) < 1e-8 * scale);
        CHECK(std::abs(ra.trace.excitation[k] - rb.trace.excitation[k]) < 1e-8 * 8);
    }
    CHECK(resolve_engine(10, Engine::automatic) == Engine::dense);
    CHECK(resolve_engine(11, Engine::automatic) == Engine::reduced);
    CHECK(resolve_engine(50, Engine::dense) == Engine::dense);
}

TEST_CASE("state stays physical") {
    const auto p = validate_params(pr(5, 0.7));
    EvolveOptions opt;
    double worst_herm = 0.0, worst_eig = 0.0, worst_tr = 0.0;
    opt.state_observer = [&](double, const BlockDensityMatrix& r) {
        worst_herm = std::max(worst_herm, r.hermiticity_error());
        worst_eig = std::min(worst_eig, r.min_block_eigenvalue());
        worst_tr = std::max(worst_tr, std::abs(r.trace() - 1.0));
    };
    evolve(p, uniform_grid(0.0, 20000.0, 201), opt);
    CHECK(worst_herm < 1e-14);
    CHECK(worst_eig > -1e-8);
    CHECK(worst_tr < 1e-8);
}

TEST_CASE("energy only leaves; the top block only drains") {
    const auto p = validate_params(pr(12, 1.0));
    const auto grid = uniform_grid(0.0, 10000.0, 301);
    EvolveOptions opt;
    std::vector<double> top;
    opt.state_observer = [&](double, const BlockDensityMatrix& r) { top.push_back(r.block_populations().back()); };
    const auto res = evolve(p, grid, opt);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        CHECK(res.total_excitation[k] <= res.total_excitation[k - 1] + 1e-9);
        CHECK(top[k] <= top[k - 1] + 1e-12);
    }
}

TEST_CASE("lossless cavity conserves excitations") {
    for (int n : {3, 50}) {
        const auto p = validate_params(pr(n, 0.0));
        const auto res = evolve(p, uniform_grid(0.0, 3000.0, 31));
        for (double e : res.total_excitation) CHECK(e == doctest::Approx(n).epsilon(1e-8));
        for (double d : res.trace_error) CHECK(std::abs(d) < 1e-8);
    }
}

TEST_CASE("stopping rules") {
    const auto p = validate_params(pr(6, 5.0));
    const auto grid = horizon_grid(p, 2001);
    CHECK(grid.back() == doctest::Approx(horizon_cap(p)));
    EvolveOptions h;
    h.apply_horizon_policy = true;
    const auto rh = evolve(p, grid, h);
    CHECK(rh.trace.meta.stop_reason == "excitation_threshold");
    CHECK(rh.trace.excitation.back() < 1e-3 * 6);
    CHECK(rh.trace.size() < grid.size());

    EvolveOptions f;
    f.stop_below_peak_fraction = 0.5;
    const auto rf = evolve(p, grid, f);
    CHECK(rf.trace.meta.stop_reason == "past_peak");

    EvolveOptions o;
    o.stop_when = [](const IntensityTrace& t) { return t.size() >= 10; };
    const auto ro = evolve(p, grid, o);
    CHECK(ro.trace.meta.stop_reason == "observer");
    CHECK(ro.trace.size() == 10);

    EvolveOptions s;
    s.max_steps = 5;
    CHECK(evolve(p, grid, s).trace.meta.stop_reason == "max_steps");
    CHECK(evolve(p, uniform_grid(0.0, 100.0, 3)).trace.meta.stop_reason == "grid_end");
}

TEST_CASE("capacity, accuracy and stiffness failures") {
    try {
        build_liouvillian(pr(1000, 1.0), std::size_t{1} << 20);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.required_bytes() > e.budget_bytes());
        CHECK(e.budget_bytes() == std::size_t{1} << 20);
    }
    CHECK(evolve_required_bytes(100, Engine::reduced, false) < evolve_required_bytes(100, Engine::dense, false));
    EvolveOptions tight;
    tight.memory_budget_bytes = 1024;
    CHECK_THROWS_AS(evolve(pr(50, 1.0), {0.0, 1.0}, tight), CapacityError);

    SystemParams loose = pr(6, 1.0);
    loose.abs_tol = loose.rel_tol = 1e-2;
    EvolveOptions acc;
    acc.trace_tolerance = 1e-16;
    CHECK_THROWS_AS(evolve(validate_params(loose), uniform_grid(0.0, 20000.0, 21), acc), AccuracyError);

    // y' = y^2 from y(0) = 1 blows up at t = 1.
    std::vector<double> y = {1.0};
    auto f = [](double, const double* in, double* out) { out[0] = in[0] * in[0]; };
    auto obs = [](std::size_t, double, const std::vector<double>&, const std::vector<double>&) { return true; };
    CHECK_THROWS_AS(dopri5_integrate(f, y, std::vector<double>{0.0, 2.0}, Dopri5Options{}, obs), StiffnessError);
}

TEST_CASE("dopri5 hits every sample and meets its tolerance") {
    std::vector<double> y = {1.0, 0.0};
    auto f = [](double, const double* in, double* out) {
        out[0] = in[1];
        out[1] = -in[0];
    };
    const auto grid = uniform_grid(0.0, 20.0, 41);
    std::vector<double> seen;
    double err = 0.0;
    auto obs = [&](std::size_t k, double t, const std::vector<double>& s, const std::vector<double>&) {
        seen.push_back(t);
        err = std::max(err, std::abs(s[0] - std::cos(grid[k])));
        return true;
    };
    Dopri5Options o;
    o.abs_tol = o.rel_tol = 1e-11;
    dopri5_integrate(f, y, grid, o, obs);
    REQUIRE(seen.size() == grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(seen[k] == grid[k]);
    CHECK(err < 1e-8);
}

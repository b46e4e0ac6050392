#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "layerfront/problems.hpp"
#include "test_util.hpp"

using namespace layerfront;

namespace {

double outer_at(const ProblemSpec& p, Side side, std::vector<double> x) {
    return outer_value(p, side, x);
}

} // namespace

TEST_CASE("boundary identities hold on all three problems") {
    // radicands are exact squares at the walls
    auto p1 = make_problem(ProblemKey::ex1d);
    CHECK(std::abs(outer_at(p1, Side::minus, {0.0}) - p1.bc_left) < 1e-10);
    CHECK(std::abs(outer_at(p1, Side::plus, {1.0}) - p1.bc_right) < 1e-10);

    auto p2 = make_problem(ProblemKey::ex2d);
    auto p3 = make_problem(ProblemKey::ex3d);
    Rng rng(21);
    for (int i = 0; i < 25; ++i) {
        const double y2 = rng.uniform(-2, 2);
        CHECK(std::abs(outer_at(p2, Side::minus, {-2.0, y2}) - p2.bc_left) < 1e-10);
        CHECK(std::abs(outer_at(p2, Side::plus, {2.0, y2}) - p2.bc_right) < 1e-10);
        const double y3 = rng.uniform(-1, 1), z3 = rng.uniform(-1, 1);
        CHECK(std::abs(outer_at(p3, Side::minus, {-1.0, y3, z3}) - p3.bc_left) < 1e-10);
        CHECK(std::abs(outer_at(p3, Side::plus, {1.0, y3, z3}) - p3.bc_right) < 1e-10);
    }
}

TEST_CASE("1D: reduced-equation identity d(phi^2/2)/dx = f at 100 points") {
    auto p = make_problem(ProblemKey::ex1d);
    for (int i = 0; i < 100; ++i) {
        const double x = 0.005 + 0.99 * i / 99.0;
        for (Side s : {Side::minus, Side::plus}) {
            auto half_sq = [&](std::span<const double> q) {
                const double v = outer_at(p, s, {q[0]});
                return 0.5 * v * v;
            };
            const double lhs = testutil::central_fd(half_sq, {x}, 0, 1e-5);
            CHECK(std::abs(lhs - source_value(p, std::vector<double>{x})) < 1e-8);
        }
    }
}

TEST_CASE("1D: interior branch value against an ODE-integrated square") {
    // Integrate g' = 2 f from the right wall (g(1) = R^2) down to x = 0.1 and
    // compare sqrt(g) with the closed form.
    auto p = make_problem(ProblemKey::ex1d);
    auto f = [&](double x) { return source_value(p, std::vector<double>{x}); };
    double g = 25.0;
    const int n = 20000;
    const double dx = (0.1 - 1.0) / n;
    double x = 1.0;
    for (int i = 0; i < n; ++i) {
        const double k1 = 2.0 * f(x);
        const double k2 = 2.0 * f(x + 0.5 * dx);
        const double k4 = 2.0 * f(x + dx);
        g += dx / 6.0 * (k1 + 4.0 * k2 + k4);
        x += dx;
    }
    const double want = std::sqrt(g);
    const double got = outer_at(p, Side::plus, {0.1});
    CHECK(std::abs(got - want) < 1e-9);
    CHECK(std::abs(got - 4.91691) < 1e-5);
    CHECK(std::abs(outer_at(p, Side::minus, {0.1}) + 10.000469) < 1e-5);
}

TEST_CASE("2D/3D: reduced-equation identity along the characteristic direction") {
    auto p2 = make_problem(ProblemKey::ex2d);
    auto p3 = make_problem(ProblemKey::ex3d);
    Rng rng(31);
    for (int i = 0; i < 30; ++i) {
        {
            const double x = rng.uniform(-1.6, 1.6), y = rng.uniform(-2, 2);
            for (Side s : {Side::minus, Side::plus}) {
                const double h = 1e-5;
                const double gp = std::pow(outer_at(p2, s, {x + h, y + h}), 2) * 0.5;
                const double gm = std::pow(outer_at(p2, s, {x - h, y - h}), 2) * 0.5;
                const double want = source_value(p2, std::vector<double>{x, y});
                CHECK(std::abs((gp - gm) / (2 * h) - want) < 1e-6);
            }
        }
        {
            const double x = rng.uniform(-0.8, 0.8);
            const double y = rng.uniform(-1, 1), z = rng.uniform(-1, 1);
            for (Side s : {Side::minus, Side::plus}) {
                const double h = 1e-5;
                const double gp = std::pow(outer_at(p3, s, {x + h, y + h, z + h}), 2) * 0.5;
                const double gm = std::pow(outer_at(p3, s, {x - h, y - h, z - h}), 2) * 0.5;
                const double want = source_value(p3, std::vector<double>{x, y, z});
                CHECK(std::abs((gp - gm) / (2 * h) - want) < 1e-6);
            }
        }
    }
}

TEST_CASE("branch ordering and signs sampled over the boxes") {
    Rng rng(41);
    for (auto key : {ProblemKey::ex1d, ProblemKey::ex2d, ProblemKey::ex3d}) {
        auto p = make_problem(key);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> x{rng.uniform(p.x1_lo, p.x1_hi)};
            for (int a = 0; a < p.n_transverse(); ++a)
                x.push_back(rng.uniform(p.transverse_lo[std::size_t(a)],
                                        p.transverse_lo[std::size_t(a)] + p.period[std::size_t(a)]));
            const double pm = outer_value(p, Side::minus, x);
            const double pp = outer_value(p, Side::plus, x);
            CHECK(pp - pm > 0.0);
            CHECK(pm < 0.0);
        }
    }
}

TEST_CASE("source values") {
    auto p1 = make_problem(ProblemKey::ex1d);
    CHECK(source_value(p1, std::vector<double>{0.0}) == 0.0);
    CHECK(source_value(p1, std::vector<double>{1.0}) == 1.0);
    auto p2 = make_problem(ProblemKey::ex2d);
    CHECK(source_value(p2, std::vector<double>{0.0, 0.0}) == 1.0);
}

TEST_CASE("initial profiles") {
    auto p1 = make_problem(ProblemKey::ex1d);
    CHECK(initial_profile(p1, std::vector<double>{0.1}) == -2.5);
    auto p1s = p1;
    p1s.mu = 1e-4;
    CHECK(std::abs(initial_profile(p1s, std::vector<double>{1.0}) - 5.0) < 1e-12);
    auto p2 = make_problem(ProblemKey::ex2d);
    CHECK(initial_profile(p2, std::vector<double>{0.0, 0.0}) == -1.0);
}

TEST_CASE("3D branch integrals converge in the quadrature order") {
    auto p32 = make_problem(ProblemKey::ex3d);
    auto p48 = p32;
    p48.outer_quad_order = 48;
    Rng rng(51);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        for (Side s : {Side::minus, Side::plus})
            CHECK(std::abs(outer_value(p32, s, x) - outer_value(p48, s, x)) < 1e-10);
    }
}

TEST_CASE("negative radicand outside the validity region raises a domain error") {
    auto p2 = make_problem(ProblemKey::ex2d);
    CHECK_THROWS_AS(outer_at(p2, Side::minus, {-20.0, -20.0}), DomainError);
}

TEST_CASE("1D front trajectory: seed, slope, monotonicity, step refinement") {
    auto p = make_problem(ProblemKey::ex1d);
    FrontOracle oracle = build_front_oracle(p);
    CHECK(oracle.h0({}, 0.0) == 0.1);

    // slope at t=0 from the closed-form branches
    const double want_rhs = -0.5 * (outer_at(p, Side::minus, {0.1}) + outer_at(p, Side::plus, {0.1}));
    CHECK(std::abs(want_rhs - 2.54178) < 1e-5);
    CHECK(std::abs(oracle.state({}, 0.0).dh0_dt - want_rhs) < 1e-12);

    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const double h = oracle.h0({}, p.T * i / 200.0);
        CHECK(h > prev);
        prev = h;
    }
    CHECK(prev < p.x1_hi); // stays interior over the horizon

    FrontOracleConfig fine;
    fine.nt = 8000;
    FrontOracle oracle2 = build_front_oracle(p, fine);
    for (int i = 0; i <= 20; ++i) {
        const double t = p.T * i / 20.0;
        CHECK(std::abs(oracle.h0({}, t) - oracle2.h0({}, t)) < 1e-7);
    }
}

TEST_CASE("2D front trajectory: seed, periodicity, step refinement") {
    auto p = make_problem(ProblemKey::ex2d);
    FrontOracleConfig cfg;
    cfg.ny = 64;
    FrontOracle oracle = build_front_oracle(p, cfg);
    Rng rng(61);
    for (int i = 0; i < 40; ++i) {
        const double y = rng.uniform(-2, 2);
        std::vector<double> ys{y};
        CHECK(std::abs(oracle.h0(ys, 0.0)) < 1e-15);
        const double t = rng.uniform(0.0, p.T);
        std::vector<double> yp{y + 4.0};
        CHECK(std::abs(oracle.h0(ys, t) - oracle.h0(yp, t)) < 1e-9);
    }

    FrontOracleConfig fine = cfg;
    fine.nt = 4800;
    FrontOracle oracle2 = build_front_oracle(p, fine);
    for (int i = 0; i <= 10; ++i) {
        std::vector<double> ys{-2.0 + 4.0 * i / 10.0};
        CHECK(std::abs(oracle.h0(ys, p.T) - oracle2.h0(ys, p.T)) < 1e-7);
    }
}

TEST_CASE("front oracle rejects under-resolved configurations") {
    auto p = make_problem(ProblemKey::ex2d);
    FrontOracleConfig bad;
    bad.ny = 32;
    CHECK_THROWS_AS(build_front_oracle(p, bad), ConfigError);
    FrontOracleConfig bad2;
    bad2.nt = 500;
    CHECK_THROWS_AS(build_front_oracle(p, bad2), ConfigError);
}

TEST_CASE("standing assumptions hold on the 1D benchmark", "[assumptions]") {
    auto p = make_problem(ProblemKey::ex1d);
    FrontOracle oracle = build_front_oracle(p);
    auto front = [&](std::span<const double> xs, double t) { return oracle.state(xs, t); };
    AssumptionReport rep = assumption_check(p, front, 1000, 1234);
    CAPTURE(rep.violations.size());
    if (!rep.violations.empty()) {
        CAPTURE(rep.violations[0].which, rep.violations[0].location[0], rep.violations[0].value);
    }
    CHECK(rep.ok());
    CHECK(rep.samples == 1000);
}

TEST_CASE("assumption sampling reports sign violations instead of throwing") {
    auto p = make_problem(ProblemKey::ex1d);
    p.adv_coeff = +1.0; // flips the advection signs, violating both side conditions
    FrontOracle oracle = build_front_oracle(make_problem(ProblemKey::ex1d));
    auto front = [&](std::span<const double> xs, double t) { return oracle.state(xs, t); };
    AssumptionReport rep = assumption_check(p, front, 50, 7);
    CHECK_FALSE(rep.ok());
}

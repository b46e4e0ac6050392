#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "layerfront/asymptotics.hpp"
#include "layerfront/pinn.hpp"
#include "test_util.hpp"

using namespace layerfront;

namespace {

/// Jet of an arbitrary scalar field via central differences (test oracle).
FieldJetFn fd_field_jet(int dim, std::function<double(std::span<const double>, double)> f) {
    return [dim, f](std::span<const double> x, double t) {
        Jet<double> j = jet_const(f(x, t), dim + 1, dim);
        const double h1 = 1e-6, h2 = 5e-4;
        std::vector<double> q(x.begin(), x.end());
        for (int i = 0; i < dim; ++i) {
            const double xi = q[std::size_t(i)];
            q[std::size_t(i)] = xi + h1;
            const double fp = f(q, t);
            q[std::size_t(i)] = xi - h1;
            const double fm = f(q, t);
            q[std::size_t(i)] = xi + h2;
            const double fp2 = f(q, t);
            q[std::size_t(i)] = xi - h2;
            const double fm2 = f(q, t);
            q[std::size_t(i)] = xi;
            j.d1[std::size_t(i)] = (fp - fm) / (2 * h1);
            j.d2[std::size_t(i)] = (fp2 - 2 * j.v + fm2) / (h2 * h2);
        }
        j.d1[std::size_t(dim)] = (f(x, t + h1) - f(x, t - h1)) / (2 * h1);
        return j;
    };
}

} // namespace

TEST_CASE("equation residual of simple fields") {
    auto p = make_problem(ProblemKey::ex1d);

    // constant field: residual is -f(x)
    FieldJetFn constant = [](std::span<const double>, double) { return jet_const(3.7, 2, 1); };
    for (double x : {0.1, 0.5, 0.9}) {
        std::vector<double> xs{x};
        CHECK(std::abs(pde_residual(p, constant, xs, 0.2) + source_value(p, xs)) < 1e-15);
    }

    // linear field u = x: residual is x - f(x), zero at x = 1
    FieldJetFn linear = [](std::span<const double> x, double) {
        Jet<double> j = jet_const(x[0], 2, 1);
        j.d1[0] = 1.0;
        return j;
    };
    std::vector<double> one{1.0};
    CHECK(std::abs(pde_residual(p, linear, one, 0.1)) < 1e-15);
    std::vector<double> half{0.5};
    CHECK(std::abs(pde_residual(p, linear, half, 0.1) -
                   (0.5 - source_value(p, half))) < 1e-15);
}

TEST_CASE("the composite asymptotic field nearly solves the equation away from the layer") {
    auto p = make_problem(ProblemKey::ex1d); // mu = 1e-2
    FrontOracle oracle = build_front_oracle(p);
    FrontFn front = oracle_front_fn(oracle);
    FieldJetFn field = fd_field_jet(1, [&](std::span<const double> x, double t) {
        return assemble_u0(p, front, x, t);
    });

    Rng rng(17);
    double acc = 0.0;
    int n = 0;
    const double margin = 10.0 * p.mu * std::abs(std::log(p.mu));
    while (n < 200) {
        const double t = rng.uniform(0.02, p.T);
        const double x = rng.uniform(0.02, 0.98);
        if (std::abs(x - oracle.h0({}, t)) < margin) continue;
        std::vector<double> xs{x};
        acc += std::abs(pde_residual(p, field, xs, t));
        ++n;
    }
    CHECK(acc / n < 0.5);
}

TEST_CASE("residual is linear in the source") {
    auto p = make_problem(ProblemKey::ex1d);
    auto shifted = p;
    shifted.source_offset = 0.37;
    MlpShape shape = mlp_shape(2, 2, 6);
    auto params = mlp_init(shape, 5);
    FieldJetFn field = net_field_fn(p, shape, params);
    Rng rng(6);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x{rng.uniform(0, 1)};
        const double t = rng.uniform(0, p.T);
        const double r0 = pde_residual(p, field, x, t);
        const double r1 = pde_residual(shifted, field, x, t);
        CHECK(std::abs(r1 - (r0 - 0.37)) < 1e-13);
    }
}

TEST_CASE("jet Laplacian of the network matches five-point differences") {
    Rng rng(8);
    auto p = make_problem(ProblemKey::ex2d);
    MlpShape shape = mlp_shape(3, 2, 8);
    for (int trial = 0; trial < 10; ++trial) {
        auto params = mlp_init(shape, 100 + std::uint64_t(trial));
        for (auto& v : params) v += 0.05;
        FieldJetFn field = net_field_fn(p, shape, params);
        const double t = rng.uniform(0, 1);
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Jet<double> j = field(x, t);

        auto val = [&](double dx, double dy) {
            std::vector<double> q{x[0] + dx, x[1] + dy, t};
            return mlp_value<double>(shape, params, q);
        };
        const double h = 1e-4;
        const double lap_fd = (val(h, 0) - 2 * val(0, 0) + val(-h, 0)) / (h * h) +
                              (val(0, h) - 2 * val(0, 0) + val(0, -h)) / (h * h);
        CHECK(testutil::rel_err(j.d2[0] + j.d2[1], lap_fd) < 1e-4);
    }
}

TEST_CASE("boundary penalty of the zero field") {
    auto p = make_problem(ProblemKey::ex1d);
    MlpShape shape = mlp_shape(2, 1, 4);
    std::vector<double> zero(std::size_t(shape.num_params()), 0.0);
    PinnPointSets sets;
    sets.n_boundary = 1;
    sets.boundary = {0.13}; // a single wall time
    const double loss = pinn_loss_reference(p, shape, zero, sets);
    CHECK(std::abs(loss - 125.0) < 1e-12); // (0-(-10))^2 + (0-5)^2
}

TEST_CASE("recorded baseline loss matches the reference on every problem") {
    for (auto key : {ProblemKey::ex1d, ProblemKey::ex2d, ProblemKey::ex3d}) {
        auto p = make_problem(key);
        TrainConfig cfg;
        cfg.hidden = {6, 6};
        cfg.n_residual = 13;
        cfg.n_boundary = 7;
        cfg.n_initial = 9;
        cfg.iterations = 1;
        cfg.seed = 2024;
        FieldTrainer trainer(p, cfg);
        PinnPointSets sets = sample_pinn_points(p, 13, 7, 9, cfg.seed);
        const double want = pinn_loss_reference(p, trainer.shape(), trainer.params(), sets);
        CHECK(testutil::rel_err(trainer.loss(), want) < 1e-11);
    }
}

TEST_CASE("hand-computed composite loss on three fixed points") {
    auto p = make_problem(ProblemKey::ex1d);
    MlpShape shape = mlp_shape(2, 1, 3);
    auto params = mlp_init(shape, 9);
    for (auto& v : params) v += 0.1;
    auto value_at = [&](double x, double t) {
        return mlp_value<double>(shape, params, std::vector<double>{x, t});
    };

    PinnPointSets sets;
    sets.n_interior = 1;
    sets.interior = {0.4, 0.2, source_value(p, std::vector<double>{0.4})};
    sets.n_boundary = 1;
    sets.boundary = {0.05};
    sets.n_initial = 1;
    sets.initial = {0.7, initial_profile(p, std::vector<double>{0.7})};

    FieldJetFn field = net_field_fn(p, shape, params);
    const double r = pde_residual(p, field, std::vector<double>{0.4}, 0.2);
    const double bl = value_at(0.0, 0.05) + 10.0;
    const double br = value_at(1.0, 0.05) - 5.0;
    const double ic = value_at(0.7, 0.0) - initial_profile(p, std::vector<double>{0.7});
    const double want = r * r + bl * bl + br * br + ic * ic;
    CHECK(testutil::rel_err(pinn_loss_reference(p, shape, params, sets), want) < 1e-12);
}

TEST_CASE("recorded residual program agrees with the jet path and finite differences") {
    auto p = make_problem(ProblemKey::ex2d);
    TrainConfig cfg;
    cfg.hidden = {7, 7};
    cfg.n_residual = 16;
    cfg.n_boundary = 4;
    cfg.n_initial = 4;
    cfg.seed = 31;
    FieldTrainer trainer(p, cfg);
    Rng rng(14);
    std::vector<double> cands = trainer.sample_candidates(16, rng);
    std::vector<double> mags = trainer.residual_magnitudes(cands);
    FieldJetFn field = net_field_fn(p, trainer.shape(), trainer.params());
    for (int j = 0; j < 16; ++j) {
        const double* c = cands.data() + std::size_t(j) * 3;
        const double want = pde_residual(p, field, std::span<const double>(c, 2), c[2]);
        CHECK(testutil::rel_err(mags[std::size_t(j)], std::abs(want)) < 1e-10);
    }
}

TEST_CASE("baseline training is deterministic and makes progress") {
    auto p = make_problem(ProblemKey::ex1d);
    TrainConfig cfg;
    cfg.hidden = {8, 8};
    cfg.iterations = 300;
    cfg.n_residual = 64;
    cfg.n_boundary = 32;
    cfg.n_initial = 32;
    cfg.seed = 77;
    auto [params_a, res_a] = train_pinn(p, cfg);
    auto [params_b, res_b] = train_pinn(p, cfg);
    CHECK(res_a.loss_history == res_b.loss_history);
    CHECK(params_a == params_b);
    CHECK(res_a.loss_history.back() < res_a.loss_history.front());
}

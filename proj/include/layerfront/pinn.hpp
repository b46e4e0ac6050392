#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "layerfront/mlp.hpp"
#include "layerfront/problems.hpp"
#include "layerfront/train_core.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Full-field collocation baseline: one network for u(x, t) trained on the
// equation residual plus boundary/periodic and initial penalties. Unlike the
// front method this sees mu directly (in the residual and in the initial
// profile) and is the comparison case expected to degrade as mu shrinks.
// ---------------------------------------------------------------------------

/// Jet of a scalar field at (x, t): d1 slots are (x_1..x_d, t), d2 slots the
/// spatial diagonal.
using FieldJetFn = std::function<Jet<double>(std::span<const double> x, double t)>;

/// Equation residual  mu*Lap(u) - u_t - A(u)*(1 . grad u) - f(x)  of a field.
inline double pde_residual(const ProblemSpec& p, const FieldJetFn& field,
                           std::span<const double> x, double t) {
    const int d = p.dim;
    Jet<double> u = field(x, t);
    if (u.n1 != d + 1 || u.n2 != d) throw ConfigError("pde_residual: field jet slots mismatch");
    double lap = 0.0, conv = 0.0;
    for (int i = 0; i < d; ++i) {
        lap += u.d2[std::size_t(i)];
        conv += u.d1[std::size_t(i)];
    }
    return p.mu * lap - u.d1[std::size_t(d)] - (p.adv_coeff * u.v) * conv -
           source_value(p, x);
}

inline FieldJetFn net_field_fn(const ProblemSpec& p, const MlpShape& shape,
                               std::vector<double> params) {
    const int d = p.dim;
    return [d, shape, params = std::move(params)](std::span<const double> x, double t) {
        std::vector<Jet<double>> in(std::size_t(d) + 1);
        for (int i = 0; i < d; ++i) in[std::size_t(i)] = jet_input(x[std::size_t(i)], i, d + 1, d);
        in[std::size_t(d)] = jet_input(t, d, d + 1, d);
        return mlp_jet<double>(shape, params, in);
    };
}

/// Point sets of the baseline loss. Rows: interior (x..., t, f),
/// boundary (x*..., t, x_periodic..., t_periodic), initial (x..., u0).
struct PinnPointSets {
    std::vector<double> interior, boundary, initial;
    int n_interior = 0, n_boundary = 0, n_initial = 0;
};

inline PinnPointSets sample_pinn_points(const ProblemSpec& p, int n_f, int n_b, int n_i,
                                        std::uint64_t seed) {
    Rng rng(derive_seed(seed, "field-points"));
    PinnPointSets out;
    out.n_interior = n_f;
    out.n_boundary = n_b;
    out.n_initial = n_i;
    std::vector<double> x(std::size_t(p.dim));
    auto sample_x = [&] {
        x[0] = rng.uniform(p.x1_lo, p.x1_hi);
        for (int a = 0; a < p.n_transverse(); ++a)
            x[std::size_t(a) + 1] = rng.uniform(p.transverse_lo[std::size_t(a)],
                                                p.transverse_lo[std::size_t(a)] + p.period[std::size_t(a)]);
    };
    for (int j = 0; j < n_f; ++j) {
        sample_x();
        const double t = p.T * (1.0 - rng.next_double()); // interior time is (0, T]
        out.interior.insert(out.interior.end(), x.begin(), x.end());
        out.interior.push_back(t);
        out.interior.push_back(source_value(p, x));
    }
    for (int j = 0; j < n_b; ++j) {
        for (int a = 0; a < p.n_transverse(); ++a)
            out.boundary.push_back(rng.uniform(p.transverse_lo[std::size_t(a)],
                                               p.transverse_lo[std::size_t(a)] + p.period[std::size_t(a)]));
        out.boundary.push_back(rng.uniform(0.0, p.T));
        if (p.dim > 1) {
            sample_x();
            out.boundary.insert(out.boundary.end(), x.begin(), x.end());
            out.boundary.push_back(rng.uniform(0.0, p.T));
        }
    }
    for (int j = 0; j < n_i; ++j) {
        sample_x();
        out.initial.insert(out.initial.end(), x.begin(), x.end());
        out.initial.push_back(initial_profile(p, x));
    }
    return out;
}

namespace detail {

/// Squared equation residual as a function of [params..., x..., t, f].
inline LossProgram build_field_residual_program(const ProblemSpec& p, const MlpShape& shape,
                                                bool squared) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    const int d = p.dim;
    prog.n_params = std::size_t(shape.num_params());
    prog.n_coords = std::size_t(d) + 2;

    std::vector<Var> pv(prog.n_params);
    for (auto& v : pv) v = tape.input();
    std::vector<Var> coords(prog.n_coords);
    for (auto& v : coords) v = tape.input();

    std::vector<Jet<Var>> in(std::size_t(d) + 1);
    for (int i = 0; i <= d; ++i) in[std::size_t(i)] = jet_input(coords[std::size_t(i)], i, d + 1, d);
    Jet<Var> u = mlp_jet<Var>(shape, std::span<const Var>(pv), in);

    Var lap{}, conv{};
    for (int i = 0; i < d; ++i) {
        lap = lap + u.d2[std::size_t(i)];
        conv = conv + u.d1[std::size_t(i)];
    }
    Var f = coords[std::size_t(d) + 1];
    Var r = lap * p.mu - u.d1[std::size_t(d)] - (u.v * p.adv_coeff) * conv - f;
    tape.set_output(squared ? r * r : r);
    return prog;
}

/// Dirichlet + periodicity penalties as a function of
/// [params..., x*..., t_wall, (x..., t_periodic)].
inline LossProgram build_field_boundary_program(const ProblemSpec& p, const MlpShape& shape) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    const int d = p.dim;
    const int n_tr = p.n_transverse();
    prog.n_params = std::size_t(shape.num_params());
    prog.n_coords = std::size_t(n_tr) + 1 + (d > 1 ? std::size_t(d) + 1 : 0);

    std::vector<Var> pv(prog.n_params);
    for (auto& v : pv) v = tape.input();
    std::vector<Var> coords(prog.n_coords);
    for (auto& v : coords) v = tape.input();

    auto field = [&](std::span<const Var> xt) {
        return mlp_value<Var>(shape, std::span<const Var>(pv), xt);
    };

    std::vector<Var> xt(std::size_t(d) + 1);
    for (int i = 0; i < n_tr; ++i) xt[std::size_t(i) + 1] = coords[std::size_t(i)];
    xt[std::size_t(d)] = coords[std::size_t(n_tr)];
    xt[0] = tape.constant(p.x1_lo);
    Var left = field(xt) - p.bc_left;
    xt[0] = tape.constant(p.x1_hi);
    Var right = field(xt) - p.bc_right;
    Var acc = left * left + right * right;

    if (d > 1) {
        std::vector<Var> xp(coords.begin() + n_tr + 1, coords.end()); // (x..., t)
        Var base = field(xp);
        for (int a = 0; a < n_tr; ++a) {
            std::vector<Var> shifted(xp);
            shifted[std::size_t(a) + 1] = shifted[std::size_t(a) + 1] + p.period[std::size_t(a)];
            Var diff = field(shifted) - base;
            acc = acc + diff * diff;
        }
    }
    tape.set_output(acc);
    return prog;
}

/// Squared initial-condition mismatch as a function of [params..., x..., u0].
inline LossProgram build_field_initial_program(const ProblemSpec& p, const MlpShape& shape) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    const int d = p.dim;
    prog.n_params = std::size_t(shape.num_params());
    prog.n_coords = std::size_t(d) + 1;

    std::vector<Var> pv(prog.n_params);
    for (auto& v : pv) v = tape.input();
    std::vector<Var> coords(prog.n_coords);
    for (auto& v : coords) v = tape.input();

    std::vector<Var> xt(coords.begin(), coords.begin() + d);
    xt.push_back(tape.constant(0.0));
    Var diff = mlp_value<Var>(shape, std::span<const Var>(pv), xt) - coords[std::size_t(d)];
    tape.set_output(diff * diff);
    return prog;
}

} // namespace detail

/// Reference (double-path) baseline loss for cross-checking the programs.
inline double pinn_loss_reference(const ProblemSpec& p, const MlpShape& shape,
                                  std::span<const double> params, const PinnPointSets& sets) {
    FieldJetFn field = net_field_fn(p, shape, std::vector<double>(params.begin(), params.end()));
    auto value_at = [&](std::span<const double> x, double t) {
        std::vector<double> xt(x.begin(), x.end());
        xt.push_back(t);
        return mlp_value<double>(shape, params, xt);
    };
    const int d = p.dim;
    double loss = 0.0;
    if (sets.n_interior) {
        double acc = 0.0;
        const std::size_t stride = std::size_t(d) + 2;
        for (int j = 0; j < sets.n_interior; ++j) {
            const double* c = sets.interior.data() + std::size_t(j) * stride;
            const double r = pde_residual(p, field, std::span<const double>(c, std::size_t(d)),
                                          c[std::size_t(d)]);
            acc += r * r;
        }
        loss += acc / sets.n_interior;
    }
    if (sets.n_boundary) {
        double acc = 0.0;
        const std::size_t stride = std::size_t(p.n_transverse()) + 1 +
                                   (d > 1 ? std::size_t(d) + 1 : 0);
        for (int j = 0; j < sets.n_boundary; ++j) {
            const double* c = sets.boundary.data() + std::size_t(j) * stride;
            std::vector<double> x(std::size_t(d), 0.0);
            for (int a = 0; a < p.n_transverse(); ++a) x[std::size_t(a) + 1] = c[a];
            const double tw = c[p.n_transverse()];
            x[0] = p.x1_lo;
            const double dl = value_at(x, tw) - p.bc_left;
            x[0] = p.x1_hi;
            const double dr = value_at(x, tw) - p.bc_right;
            acc += dl * dl + dr * dr;
            if (d > 1) {
                const double* cp = c + p.n_transverse() + 1;
                std::span<const double> xp(cp, std::size_t(d));
                const double tp = cp[d];
                const double base = value_at(xp, tp);
                for (int a = 0; a < p.n_transverse(); ++a) {
                    std::vector<double> shifted(xp.begin(), xp.end());
                    shifted[std::size_t(a) + 1] += p.period[std::size_t(a)];
                    const double diff = value_at(shifted, tp) - base;
                    acc += diff * diff;
                }
            }
        }
        loss += acc / sets.n_boundary;
    }
    if (sets.n_initial) {
        double acc = 0.0;
        const std::size_t stride = std::size_t(d) + 1;
        for (int j = 0; j < sets.n_initial; ++j) {
            const double* c = sets.initial.data() + std::size_t(j) * stride;
            const double diff = value_at(std::span<const double>(c, std::size_t(d)), 0.0) -
                                c[std::size_t(d)];
            acc += diff * diff;
        }
        loss += acc / sets.n_initial;
    }
    return loss;
}

class FieldTrainer {
  public:
    FieldTrainer(const ProblemSpec& p, TrainConfig cfg) : p_(p), cfg_(cfg) {
        cfg_.validate();
        shape_.sizes.push_back(p.dim + 1); // (x, t)
        for (int w : cfg_.hidden) shape_.sizes.push_back(w);
        shape_.sizes.push_back(1);
        params_ = mlp_init(shape_, derive_seed(cfg_.seed, "init"));
        adam_ = AdamState(cfg_.adam(), params_.size());

        PinnPointSets sets =
            sample_pinn_points(p, cfg_.n_residual, cfg_.n_boundary, cfg_.n_initial, cfg_.seed);
        LossProgram res = detail::build_field_residual_program(p, shape_, true);
        res.points = std::move(sets.interior);
        residual_ = std::make_unique<ProgramRunner>(std::move(res));
        if (cfg_.n_boundary > 0) {
            LossProgram b = detail::build_field_boundary_program(p, shape_);
            b.points = std::move(sets.boundary);
            boundary_ = std::make_unique<ProgramRunner>(std::move(b));
        }
        if (cfg_.n_initial > 0) {
            LossProgram ic = detail::build_field_initial_program(p, shape_);
            ic.points = std::move(sets.initial);
            initial_ = std::make_unique<ProgramRunner>(std::move(ic));
        }
        LossProgram raw = detail::build_field_residual_program(p, shape_, false);
        raw_residual_ = std::make_unique<ProgramRunner>(std::move(raw));
    }

    TrainResult train(int iterations = 0) {
        std::vector<ProgramRunner*> terms{residual_.get()};
        if (boundary_) terms.push_back(boundary_.get());
        if (initial_) terms.push_back(initial_.get());
        TrainResult res = run_training(terms, params_, adam_,
                                       iterations > 0 ? iterations : cfg_.iterations);
        params_ = res.params;
        return res;
    }

    double loss() {
        double acc = residual_->run(params_, {}).loss;
        if (boundary_) acc += boundary_->run(params_, {}).loss;
        if (initial_) acc += initial_->run(params_, {}).loss;
        return acc;
    }

    /// |equation residual| on candidate rows (x..., t); used by refinement.
    std::vector<double> residual_magnitudes(std::span<const double> candidates) {
        const std::size_t d = std::size_t(p_.dim);
        const std::size_t n = candidates.size() / (d + 1);
        std::vector<double> rows;
        rows.reserve(n * (d + 2));
        for (std::size_t j = 0; j < n; ++j) {
            const double* c = candidates.data() + j * (d + 1);
            rows.insert(rows.end(), c, c + d + 1);
            rows.push_back(source_value(p_, std::span<const double>(c, d)));
        }
        raw_residual_->program().points = std::move(rows);
        std::vector<double> vals = raw_residual_->point_values(params_);
        for (double& v : vals) v = std::isfinite(v) ? std::abs(v) : kInvalidFieldResidual;
        return vals;
    }

    void add_residual_points(std::span<const double> pts) {
        const std::size_t d = std::size_t(p_.dim);
        auto& dest = residual_->program().points;
        const std::size_t n = pts.size() / (d + 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double* c = pts.data() + j * (d + 1);
            dest.insert(dest.end(), c, c + d + 1);
            dest.push_back(source_value(p_, std::span<const double>(c, d)));
        }
    }

    std::size_t residual_point_count() const { return residual_->program().n_points(); }

    /// Candidate rows for adaptive refinement: (x..., t) over the interior.
    std::vector<double> sample_candidates(int n, Rng& rng) const {
        std::vector<double> out;
        out.reserve(std::size_t(n) * (std::size_t(p_.dim) + 1));
        for (int j = 0; j < n; ++j) {
            out.push_back(rng.uniform(p_.x1_lo, p_.x1_hi));
            for (int a = 0; a < p_.n_transverse(); ++a)
                out.push_back(rng.uniform(p_.transverse_lo[std::size_t(a)],
                                          p_.transverse_lo[std::size_t(a)] + p_.period[std::size_t(a)]));
            out.push_back(p_.T * (1.0 - rng.next_double()));
        }
        return out;
    }

    double value(std::span<const double> x, double t) const {
        std::vector<double> xt(x.begin(), x.end());
        xt.push_back(t);
        return mlp_value<double>(shape_, params_, xt);
    }

    const MlpShape& shape() const { return shape_; }
    const std::vector<double>& params() const { return params_; }
    const AdamState& adam_state() const { return adam_; }
    const TrainConfig& config() const { return cfg_; }
    const ProblemSpec& problem() const { return p_; }

    static constexpr double kInvalidFieldResidual = 1e6;

  private:
    ProblemSpec p_;
    TrainConfig cfg_;
    MlpShape shape_;
    std::vector<double> params_;
    AdamState adam_;
    std::unique_ptr<ProgramRunner> residual_, boundary_, initial_, raw_residual_;
};

inline std::pair<std::vector<double>, TrainResult> train_pinn(const ProblemSpec& p,
                                                              const TrainConfig& cfg,
                                                              MlpShape* shape_out = nullptr) {
    FieldTrainer trainer(p, cfg);
    TrainResult res = trainer.train();
    if (shape_out) *shape_out = trainer.shape();
    return {trainer.params(), std::move(res)};
}

} // namespace layerfront

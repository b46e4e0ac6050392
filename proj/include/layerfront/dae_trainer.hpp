#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "layerfront/asymptotics.hpp"
#include "layerfront/first_order.hpp"
#include "layerfront/mlp.hpp"
#include "layerfront/problems.hpp"
#include "layerfront/quadrature.hpp"
#include "layerfront/train_core.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Front trainer: a hard-initial-condition network for the moving-front
// position, fitted by minimizing the quadrature residual of the interface
// integral over a fixed full-batch point set, plus a transverse periodicity
// penalty when the problem has transverse axes. The loss never references mu.
// ---------------------------------------------------------------------------

constexpr double kInvalidResidualPenalty = 1e6;

/// Residual of the interface equation at one collocation point, with the
/// integration interval spanned by the outer branches at the current front
/// position. Returns NaN when that interval is invalid (branch ordering
/// broken); callers decide how to penalize it.
inline double interface_residual_at(const ProblemSpec& p, const FrontFn& front,
                                    std::span<const double> xstar, double t,
                                    const QuadratureRule& rule) {
    const FrontState fs = front(xstar, t);
    double phim, phip;
    try {
        phim = outer_value_g<double>(p, Side::minus, fs.h0, xstar);
        phip = outer_value_g<double>(p, Side::plus, fs.h0, xstar);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (!(phip > phim) || !std::isfinite(phim) || !std::isfinite(phip))
        return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    const double center = 0.5 * (phim + phip), halfw = 0.5 * (phip - phim);
    for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
        const double u = center + halfw * rule.nodes[m];
        acc += rule.weights[m] * interface_integrand(p, fs, u);
    }
    return acc * halfw;
}

/// FrontFn backed by a hard-IC network (jets supply the time and transverse
/// derivatives).
inline FrontFn net_front_fn(const ProblemSpec& p, const HardIcNet& net) {
    const int n_tr = p.n_transverse();
    MlpShape shape = net.shape;
    std::vector<double> params = net.params;
    const double h0s = net.h0_star;
    return [n_tr, shape, params, h0s](std::span<const double> xstar, double t) {
        std::vector<Jet<double>> in(std::size_t(n_tr) + 1);
        for (int i = 0; i < n_tr; ++i) in[std::size_t(i)] = jet_input(xstar[std::size_t(i)], i, n_tr + 1, 0);
        in[std::size_t(n_tr)] = jet_input(t, n_tr, n_tr + 1, 0);
        Jet<double> h = hardic_jet<double>(shape, params, h0s, in);
        FrontState fs;
        fs.h0 = h.v;
        fs.n_transverse = n_tr;
        for (int i = 0; i < n_tr; ++i) fs.grad[std::size_t(i)] = h.d1[std::size_t(i)];
        fs.dh0_dt = h.d1[std::size_t(n_tr)];
        fs.has_dt = true;
        return fs;
    };
}

/// Reference (straight-line, double-path) front loss over explicit point
/// sets, used as the oracle against the recorded programs and for tests.
inline double front_loss_reference(const ProblemSpec& p, const FrontFn& front,
                                   std::span<const double> residual_pts,
                                   std::span<const double> periodic_pts,
                                   const QuadratureRule& rule) {
    const std::size_t stride = std::size_t(p.dim); // (x*, t)
    double loss = 0.0;
    const std::size_t nr = residual_pts.size() / stride;
    for (std::size_t j = 0; j < nr; ++j) {
        const double* c = residual_pts.data() + j * stride;
        std::span<const double> xstar(c, stride - 1);
        const double r = interface_residual_at(p, front, xstar, c[stride - 1], rule);
        loss += std::isfinite(r) ? r * r : kInvalidResidualPenalty;
    }
    if (nr) loss /= double(nr);

    const std::size_t np = periodic_pts.size() / stride;
    double ploss = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
        const double* c = periodic_pts.data() + j * stride;
        std::span<const double> xstar(c, stride - 1);
        const double t = c[stride - 1];
        const double base = front(xstar, t).h0;
        for (int a = 0; a < p.n_transverse(); ++a) {
            std::vector<double> shifted(xstar.begin(), xstar.end());
            shifted[std::size_t(a)] += p.period[std::size_t(a)];
            const double diff = front(shifted, t).h0 - base;
            ploss += diff * diff;
        }
    }
    if (np) loss += ploss / double(np);
    return loss;
}

namespace detail {

/// Records the squared (or raw) interface residual of the hard-IC network as
/// a function of [params..., x*..., t].
inline LossProgram build_front_residual_program(const ProblemSpec& p, const MlpShape& shape,
                                                double h0_star, int quad_order, bool squared) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    const int n_par = shape.num_params();
    const int n_tr = p.n_transverse();
    prog.n_params = std::size_t(n_par);
    prog.n_coords = std::size_t(n_tr) + 1;

    std::vector<Var> pv(std::size_t(n_par), Var{});
    for (auto& v : pv) v = tape.input();
    std::vector<Var> coords(prog.n_coords);
    for (auto& v : coords) v = tape.input();

    std::vector<Jet<Var>> in(prog.n_coords);
    for (int i = 0; i <= n_tr; ++i)
        in[std::size_t(i)] = jet_input(coords[std::size_t(i)], i, n_tr + 1, 0);
    Jet<Var> h = hardic_jet<Var>(shape, std::span<const Var>(pv), h0_star, in);

    std::span<const Var> xstar(coords.data(), std::size_t(n_tr));
    Var phim = outer_value_g<Var>(p, Side::minus, h.v, xstar);
    Var phip = outer_value_g<Var>(p, Side::plus, h.v, xstar);

    Var grad_sum{}, grad_sq{};
    for (int i = 0; i < n_tr; ++i) {
        grad_sum = grad_sum + h.d1[std::size_t(i)];
        grad_sq = grad_sq + h.d1[std::size_t(i)] * h.d1[std::size_t(i)];
    }
    Var inv_root = 1.0 / sqrt(grad_sq + 1.0);
    Var slope_factor = (1.0 - grad_sum) * p.adv_coeff; // coefficient of u in the integrand
    Var neg_dt = -h.d1[std::size_t(n_tr)];

    const QuadratureRule& rule = cached_rule(quad_order);
    Var center = (phim + phip) * 0.5;
    Var halfw = (phip - phim) * 0.5;
    std::vector<Var> terms(rule.nodes.size());
    for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
        Var um = center + halfw * rule.nodes[m];
        terms[std::size_t(m)] = neg_dt + um * slope_factor;
    }
    Var r = tape.dot_const(rule.weights, terms) * halfw * inv_root;
    tape.set_output(squared ? r * r : r);
    return prog;
}

/// Squared transverse periodicity error of the wrapper value, summed over the
/// transverse axes, as a function of [params..., x*..., t].
inline LossProgram build_front_periodic_program(const ProblemSpec& p, const MlpShape& shape,
                                                double h0_star) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    const int n_par = shape.num_params();
    const int n_tr = p.n_transverse();
    prog.n_params = std::size_t(n_par);
    prog.n_coords = std::size_t(n_tr) + 1;

    std::vector<Var> pv(std::size_t(n_par), Var{});
    for (auto& v : pv) v = tape.input();
    std::vector<Var> coords(prog.n_coords);
    for (auto& v : coords) v = tape.input();

    auto wrapper_value = [&](std::span<const Var> xt) {
        return mlp_value<Var>(shape, std::span<const Var>(pv), xt) * coords[std::size_t(n_tr)] +
               h0_star;
    };

    Var base = wrapper_value(coords);
    Var acc{};
    for (int a = 0; a < n_tr; ++a) {
        std::vector<Var> shifted(coords);
        shifted[std::size_t(a)] = shifted[std::size_t(a)] + p.period[std::size_t(a)];
        Var diff = wrapper_value(shifted) - base;
        acc = acc + diff * diff;
    }
    tape.set_output(acc);
    return prog;
}

inline std::vector<double> sample_front_points(const ProblemSpec& p, int n, Rng& rng) {
    std::vector<double> pts;
    pts.reserve(std::size_t(n) * std::size_t(p.dim));
    for (int j = 0; j < n; ++j) {
        for (int a = 0; a < p.n_transverse(); ++a)
            pts.push_back(rng.uniform(p.transverse_lo[std::size_t(a)],
                                      p.transverse_lo[std::size_t(a)] + p.period[std::size_t(a)]));
        pts.push_back(rng.uniform(0.0, p.T));
    }
    return pts;
}

} // namespace detail

class FrontTrainer {
  public:
    FrontTrainer(const ProblemSpec& p, TrainConfig cfg) : p_(p), cfg_(cfg) {
        cfg_.validate();
        if (p.dim == 1 && cfg_.n_boundary > 0)
            throw ConfigError("front trainer: no transverse periodicity in one dimension");

        shape_.sizes.push_back(p.dim); // (x*, t)
        for (int w : cfg_.hidden) shape_.sizes.push_back(w);
        shape_.sizes.push_back(1);
        params_ = mlp_init(shape_, derive_seed(cfg_.seed, "init"));
        adam_ = AdamState(cfg_.adam(), params_.size());

        Rng rng(derive_seed(cfg_.seed, "points"));
        LossProgram res =
            detail::build_front_residual_program(p, shape_, p.h0_star, cfg_.quad_order, true);
        res.points = detail::sample_front_points(p, cfg_.n_residual, rng);
        res.invalid_penalty = kInvalidResidualPenalty;
        residual_ = std::make_unique<ProgramRunner>(std::move(res));

        if (cfg_.n_boundary > 0) {
            LossProgram per = detail::build_front_periodic_program(p, shape_, p.h0_star);
            per.points = detail::sample_front_points(p, cfg_.n_boundary, rng);
            periodic_ = std::make_unique<ProgramRunner>(std::move(per));
        }

        LossProgram raw =
            detail::build_front_residual_program(p, shape_, p.h0_star, cfg_.quad_order, false);
        raw_residual_ = std::make_unique<ProgramRunner>(std::move(raw));
    }

    /// Runs `iterations` optimizer steps (default: the configured count),
    /// continuing from the current parameters.
    TrainResult train(int iterations = 0) {
        std::vector<ProgramRunner*> terms{residual_.get()};
        if (periodic_) terms.push_back(periodic_.get());
        TrainResult res = run_training(terms, params_, adam_,
                                       iterations > 0 ? iterations : cfg_.iterations);
        params_ = res.params;
        return res;
    }

    /// Current loss without taking a step.
    double loss() {
        double acc = residual_->run(params_, {}).loss;
        if (periodic_) acc += periodic_->run(params_, {}).loss;
        return acc;
    }

    /// |residual| on an arbitrary candidate set ((x*, t) rows); invalid
    /// residuals appear as the penalty magnitude.
    std::vector<double> residual_magnitudes(std::span<const double> candidates) {
        raw_residual_->program().points.assign(candidates.begin(), candidates.end());
        std::vector<double> vals = raw_residual_->point_values(params_);
        for (double& v : vals)
            v = std::isfinite(v) ? std::abs(v) : kInvalidResidualPenalty;
        return vals;
    }

    void add_residual_points(std::span<const double> pts) {
        auto& dest = residual_->program().points;
        dest.insert(dest.end(), pts.begin(), pts.end());
    }

    std::size_t residual_point_count() const { return residual_->program().n_points(); }
    std::span<const double> residual_points() const { return residual_->program().points; }
    std::span<const double> periodic_points() const {
        static const std::vector<double> none;
        return periodic_ ? std::span<const double>(periodic_->program().points)
                         : std::span<const double>(none);
    }

    /// Candidate rows for adaptive refinement: (x*, t).
    std::vector<double> sample_candidates(int n, Rng& rng) const {
        return detail::sample_front_points(p_, n, rng);
    }

    HardIcNet net() const { return HardIcNet{shape_, params_, p_.h0_star}; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }
    const MlpShape& shape() const { return shape_; }
    const AdamState& adam_state() const { return adam_; }
    const TrainConfig& config() const { return cfg_; }
    const ProblemSpec& problem() const { return p_; }

  private:
    ProblemSpec p_;
    TrainConfig cfg_;
    MlpShape shape_;
    std::vector<double> params_;
    AdamState adam_;
    std::unique_ptr<ProgramRunner> residual_, periodic_, raw_residual_;
};

/// One-shot training entry point.
inline std::pair<HardIcNet, TrainResult> train_dae(const ProblemSpec& p, const TrainConfig& cfg) {
    FrontTrainer trainer(p, cfg);
    TrainResult res = trainer.train();
    return {trainer.net(), std::move(res)};
}

// ---------------------------------------------------------------------------
// Residual-based adaptive refinement: score a fixed candidate set, move the
// worst-scoring points into the training set, retrain warm-started, repeat
// until the mean candidate residual drops below tolerance or the round budget
// is exhausted. Points are only ever added.
// ---------------------------------------------------------------------------

struct RarConfig {
    int candidate_count = 5000; // |S|
    int batch = 5;              // points added per round
    double tolerance = 1e-6;    // mean-|residual| stopping level
    int retrain_iterations = 0; // 0 = the trainer's configured count
    int max_rounds = 40;

    void validate() const {
        if (candidate_count < 1) throw ConfigError("rar: need a nonempty candidate set");
        if (batch < 1 || batch > candidate_count) throw ConfigError("rar: batch must be in [1, |S|]");
        if (!(tolerance > 0)) throw ConfigError("rar: tolerance must be positive");
        if (max_rounds < 0 || retrain_iterations < 0) throw ConfigError("rar: negative budget");
    }
};

struct RarResult {
    bool converged = false;
    int rounds = 0;
    long long added_points = 0;
    std::vector<double> mean_residuals; // on the candidate set, per scoring pass
    std::vector<double> loss_history;   // concatenated over retraining rounds
    bool aborted = false;
};

/// Picks the `m` indices with the largest scores (ties broken by index).
inline std::vector<std::size_t> top_magnitude_indices(std::span<const double> scores,
                                                      std::size_t m) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    m = std::min(m, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(m), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    idx.resize(m);
    return idx;
}

template <class Trainer>
RarResult rar_refine(Trainer& trainer, const RarConfig& rar) {
    rar.validate();
    RarResult out;
    Rng rng(derive_seed(trainer.config().seed, "rar-candidates"));
    const std::vector<double> candidates = trainer.sample_candidates(rar.candidate_count, rng);
    const std::size_t stride = candidates.size() / std::size_t(rar.candidate_count);

    for (;;) {
        std::vector<double> mags = trainer.residual_magnitudes(candidates);
        double mean = 0.0;
        for (double v : mags) mean += v;
        mean /= double(mags.size());
        out.mean_residuals.push_back(mean);
        if (mean < rar.tolerance) {
            out.converged = true;
            break;
        }
        if (out.rounds >= rar.max_rounds) break;

        std::vector<std::size_t> top = top_magnitude_indices(mags, std::size_t(rar.batch));
        std::vector<double> add;
        add.reserve(top.size() * stride);
        for (std::size_t i : top)
            add.insert(add.end(), candidates.begin() + std::ptrdiff_t(i * stride),
                       candidates.begin() + std::ptrdiff_t((i + 1) * stride));
        trainer.add_residual_points(add);
        out.added_points += static_cast<long long>(top.size());

        TrainResult tr = trainer.train(rar.retrain_iterations);
        out.loss_history.insert(out.loss_history.end(), tr.loss_history.begin(),
                                tr.loss_history.end());
        out.rounds += 1;
        if (tr.aborted) {
            out.aborted = true;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// First-order front-shift training: the coefficients of the linear shift ODE
// are frozen from the trained zero-order front, and a one-input hard-IC
// network in t is fitted to its residual.
// ---------------------------------------------------------------------------

namespace detail {

/// Residual program for the shift ODE: coords are (t, a, c1, c2) with the
/// precomputed coefficients of  a * s' + c1 * s = c2  at that time.
inline LossProgram build_shift_residual_program(const MlpShape& shape) {
    using ad::Var;
    LossProgram prog;
    ad::Tape& tape = prog.tape;
    prog.n_params = std::size_t(shape.num_params());
    prog.n_coords = 4;

    std::vector<Var> pv(prog.n_params);
    for (auto& v : pv) v = tape.input();
    Var t = tape.input(), a = tape.input(), c1 = tape.input(), c2 = tape.input();

    std::vector<Jet<Var>> in{jet_input(t, 0, 1, 0)};
    Jet<Var> s = hardic_jet<Var>(shape, std::span<const Var>(pv), 0.0, in);
    Var r = a * s.d1[0] + c1 * s.v - c2;
    tape.set_output(r * r);
    return prog;
}

} // namespace detail

/// Trains the first-order front shift against the frozen zero-order front.
/// Returns the wrapper network (initial value exactly zero) and the history.
inline std::pair<HardIcNet, TrainResult> train_h1(const ProblemSpec& p,
                                                  const std::function<double(double)>& h0_of_t,
                                                  const TrainConfig& cfg,
                                                  const FirstOrderConfig& focfg = {}) {
    detail::require_1d(p, "train_h1");
    cfg.validate();

    MlpShape shape;
    shape.sizes.push_back(1);
    for (int w : cfg.hidden) shape.sizes.push_back(w);
    shape.sizes.push_back(1);

    Rng rng(derive_seed(cfg.seed, "shift-points"));
    LossProgram prog = detail::build_shift_residual_program(shape);
    prog.points.reserve(std::size_t(cfg.n_residual) * 4);
    for (int j = 0; j < cfg.n_residual; ++j) {
        const double t = rng.uniform(0.0, p.T);
        H1Coefficients co = h1_coefficients(p, h0_of_t(t), focfg);
        prog.points.push_back(t);
        prog.points.push_back(co.a);
        prog.points.push_back(co.phi1);
        prog.points.push_back(co.phi2);
    }
    ProgramRunner runner(std::move(prog));

    std::vector<double> params = mlp_init(shape, derive_seed(cfg.seed, "shift-init"));
    AdamState adam(cfg.adam(), params.size());
    TrainResult res = run_training({&runner}, std::move(params), adam, cfg.iterations);
    return {HardIcNet{shape, res.params, 0.0}, std::move(res)};
}

} // namespace layerfront

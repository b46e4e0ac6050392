#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "layerfront/core.hpp"
#include "layerfront/mlp.hpp"
#include "layerfront/parallel.hpp"
#include "layerfront/tape.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// A loss term shared by both trainers: one recorded program evaluated over a
// set of points. The program's inputs are the network parameters followed by
// the per-point coordinates; its single output is the point's loss
// contribution (already squared). The runner evaluates points in fixed-size
// blocks with per-block partial sums merged in block order, so results do not
// depend on the worker count.
// ---------------------------------------------------------------------------

struct LossProgram {
    ad::Tape tape;
    std::size_t n_params = 0;
    std::size_t n_coords = 0;
    std::vector<double> points; // row-major [n_points][n_coords]
    double weight = 1.0;
    /// Non-finite point contributions become this penalty with zero gradient
    /// (negative disables the fallback; non-finite then poisons the loss).
    double invalid_penalty = -1.0;

    std::size_t n_points() const { return n_coords == 0 ? 0 : points.size() / n_coords; }
};

struct LossTermStats {
    double loss = 0.0;           // weight * mean contribution
    long long invalid_count = 0; // penalized points
};

namespace detail {
constexpr int kLanes = 8;
constexpr std::size_t kBatchesPerBlock = 32;
} // namespace detail

/// Evaluates one LossProgram over its point set; optionally accumulates
/// d(weighted mean loss)/d(params) into `grad`.
class ProgramRunner {
  public:
    explicit ProgramRunner(LossProgram prog) : prog_(std::move(prog)) {
        const int workers = worker_count();
        for (int w = 0; w < workers; ++w) evals_.push_back(prog_.tape.make_eval(detail::kLanes));
    }

    const LossProgram& program() const { return prog_; }
    LossProgram& program() { return prog_; }

    /// Loss (and gradient if grad is non-empty) at the given parameters.
    LossTermStats run(std::span<const double> params, std::span<double> grad) {
        const std::size_t n_points = prog_.n_points();
        if (n_points == 0) return {};
        constexpr int L = detail::kLanes;
        const std::size_t block_pts = detail::kBatchesPerBlock * L;
        const std::size_t n_blocks = (n_points + block_pts - 1) / block_pts;
        const bool want_grad = !grad.empty();
        const double scale = prog_.weight / double(n_points);

        block_loss_.assign(n_blocks, 0.0);
        block_invalid_.assign(n_blocks, 0);
        if (want_grad) block_grad_.assign(n_blocks * prog_.n_params, 0.0);

        parallel_for_blocks_indexed(int(n_blocks), max_workers(), [&](int bi, int w) {
            run_block(evals_[std::size_t(w)], std::size_t(bi), params, want_grad);
        });

        LossTermStats out;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            out.loss += block_loss_[b];
            out.invalid_count += block_invalid_[b];
        }
        out.loss *= scale;
        if (want_grad)
            for (std::size_t b = 0; b < n_blocks; ++b)
                for (std::size_t i = 0; i < prog_.n_params; ++i)
                    grad[i] += scale * block_grad_[b * prog_.n_params + i];
        return out;
    }

    /// Per-point outputs at the given parameters (no gradients).
    std::vector<double> point_values(std::span<const double> params) {
        const std::size_t n_points = prog_.n_points();
        std::vector<double> out(n_points, 0.0);
        constexpr int L = detail::kLanes;
        const std::size_t n_batches = (n_points + L - 1) / L;
        const std::size_t batches_per_block = detail::kBatchesPerBlock;
        const std::size_t n_blocks = (n_batches + batches_per_block - 1) / batches_per_block;
        parallel_for_blocks_indexed(int(n_blocks), max_workers(), [&](int bi, int w) {
            ad::Eval& ev = evals_[std::size_t(w)];
            bind_params(ev, params);
            const std::size_t b0 = std::size_t(bi) * batches_per_block;
            const std::size_t b1 = std::min(n_batches, b0 + batches_per_block);
            for (std::size_t batch = b0; batch < b1; ++batch) {
                const std::size_t p0 = batch * L;
                bind_batch(ev, p0);
                prog_.tape.forward<L>(ev);
                for (int l = 0; l < L && p0 + std::size_t(l) < n_points; ++l)
                    out[p0 + std::size_t(l)] = prog_.tape.output(ev, l);
            }
        });
        return out;
    }

  private:
    int max_workers() const {
        // threading pays off only when a sweep has enough arithmetic in it
        const std::size_t work = prog_.tape.size() * prog_.n_points();
        return work < 200000 ? 1 : int(evals_.size());
    }

    void bind_params(ad::Eval& ev, std::span<const double> params) {
        for (std::size_t i = 0; i < prog_.n_params; ++i) prog_.tape.bind_uniform(ev, i, params[i]);
    }

    void bind_batch(ad::Eval& ev, std::size_t p0) {
        constexpr int L = detail::kLanes;
        const std::size_t n_points = prog_.n_points();
        for (int l = 0; l < L; ++l) {
            // padded lanes replay the block's first point with zero seed
            const std::size_t pi = p0 + std::size_t(l) < n_points ? p0 + std::size_t(l) : p0;
            const double* c = prog_.points.data() + pi * prog_.n_coords;
            for (std::size_t k = 0; k < prog_.n_coords; ++k)
                prog_.tape.bind_lane(ev, prog_.n_params + k, l, c[k]);
        }
    }

    void run_block(ad::Eval& ev, std::size_t bi, std::span<const double> params, bool want_grad) {
        constexpr int L = detail::kLanes;
        const std::size_t n_points = prog_.n_points();
        const std::size_t block_pts = detail::kBatchesPerBlock * L;
        const std::size_t p_begin = bi * block_pts;
        const std::size_t p_end = std::min(n_points, p_begin + block_pts);

        bind_params(ev, params);
        if (want_grad) ad::clear_adjoints(ev);

        double loss_acc = 0.0;
        long long invalid = 0;
        const std::size_t param_bytes = prog_.n_params * L * sizeof(double);

        for (std::size_t p0 = p_begin; p0 < p_end; p0 += L) {
            bind_batch(ev, p0);
            prog_.tape.forward<L>(ev);

            double seeds[L];
            bool lane_ok[L];
            bool any_bad = false;
            const std::size_t active = std::min(std::size_t(L), p_end - p0);
            for (std::size_t l = 0; l < L; ++l) {
                const double v = prog_.tape.output(ev, int(l));
                lane_ok[l] = l < active && std::isfinite(v);
                seeds[l] = lane_ok[l] ? 1.0 : 0.0;
                if (l < active) {
                    if (lane_ok[l]) {
                        loss_acc += v;
                    } else {
                        if (prog_.invalid_penalty < 0.0)
                            loss_acc += v; // poison the sum; the trainer aborts
                        else
                            loss_acc += prog_.invalid_penalty;
                        ++invalid;
                        any_bad = true;
                    }
                }
                if (l >= active && !std::isfinite(v)) any_bad = true;
            }

            if (!want_grad) continue;
            if (any_bad) {
                // replay bad lanes with the first valid point so the reverse
                // sweep stays finite; their zero seeds keep them inert
                std::size_t good = p0;
                for (std::size_t l = 0; l < active; ++l)
                    if (lane_ok[l]) {
                        good = p0 + l;
                        break;
                    }
                for (std::size_t l = 0; l < L; ++l) {
                    if (lane_ok[l]) continue;
                    const double* c = prog_.points.data() + good * prog_.n_coords;
                    for (std::size_t k = 0; k < prog_.n_coords; ++k)
                        prog_.tape.bind_lane(ev, prog_.n_params + k, int(l), c[k]);
                }
                prog_.tape.forward<L>(ev);
            }
            // zero every adjoint except the parameter block, which keeps
            // accumulating across the batches of this block
            std::memset(ev.adj.data() + prog_.n_params * L, 0,
                        ev.adj.size() * sizeof(double) - param_bytes);
            for (std::size_t l = 0; l < L; ++l)
                if (seeds[l] != 0.0) prog_.tape.seed_output(ev, int(l), seeds[l]);
            prog_.tape.reverse<L>(ev);
        }

        block_loss_[bi] = loss_acc;
        block_invalid_[bi] = invalid;
        if (want_grad) {
            double* g = block_grad_.data() + bi * prog_.n_params;
            for (std::size_t i = 0; i < prog_.n_params; ++i) {
                g[i] = prog_.tape.input_adjoint_sum(ev, i);
                double* slot = &ev.adj[prog_.tape.input_ids()[i] * std::size_t(L)];
                for (int l = 0; l < L; ++l) slot[l] = 0.0;
            }
        }
    }

    LossProgram prog_;
    std::vector<ad::Eval> evals_;
    std::vector<double> block_loss_;
    std::vector<long long> block_invalid_;
    std::vector<double> block_grad_;
};

// ---------------------------------------------------------------------------
// Shared training-loop configuration and result.
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::vector<int> hidden{10, 10, 10, 10}; // hidden layer widths
    int iterations = 8000;                   // full-batch optimizer steps
    int n_residual = 1000;                   // interior/residual points
    int n_boundary = 0;                      // periodicity (front) or boundary (field) points
    int n_initial = 0;                       // initial-condition points (field method)
    int quad_order = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1234;
    double mu = 1e-2; // used by assembly/evaluation, never by the front loss

    AdamConfig adam() const { return AdamConfig{learning_rate, adam_beta1, adam_beta2, adam_eps}; }

    void validate() const {
        if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
        if (n_residual < 1) throw ConfigError("train: need at least one residual point");
        if (n_boundary < 0 || n_initial < 0) throw ConfigError("train: negative point count");
        if (hidden.empty()) throw ConfigError("train: need at least one hidden layer");
        for (int w : hidden)
            if (w < 1) throw ConfigError("train: zero-width hidden layer");
        if (quad_order < 1 || quad_order > 64) throw ConfigError("train: quadrature order in [1,64]");
        if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be positive");
        if (!(mu > 0)) throw ConfigError("train: mu must be positive");
    }
};

struct TrainResult {
    std::vector<double> params;
    std::vector<double> loss_history; // loss at the start of each iteration
    bool aborted = false;             // non-finite loss; params hold the last good state
    long long invalid_points = 0;     // penalized residual evaluations over the run
    long long adam_steps = 0;
};

/// Full-batch optimizer loop over a set of loss terms. Stops early (keeping
/// the previous parameters) if the loss or gradient turns non-finite.
inline TrainResult run_training(std::vector<ProgramRunner*> terms, std::vector<double> params,
                                AdamState& adam, int iterations) {
    TrainResult res;
    res.loss_history.reserve(std::size_t(iterations));
    std::vector<double> grad(params.size(), 0.0);
    std::vector<double> backup(params);

    for (int it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (ProgramRunner* t : terms) {
            LossTermStats st = t->run(params, grad);
            loss += st.loss;
            res.invalid_points += st.invalid_count;
        }
        if (!std::isfinite(loss)) {
            res.aborted = true;
            res.params = backup;
            return res;
        }
        res.loss_history.push_back(loss);
        backup = params;
        try {
            adam_step(adam, params, grad);
        } catch (const NumericError&) {
            res.aborted = true;
            res.params = backup;
            return res;
        }
        res.adam_steps += 1;
    }
    res.params = std::move(params);
    return res;
}

} // namespace layerfront

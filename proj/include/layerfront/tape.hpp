#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "layerfront/core.hpp"

namespace layerfront::ad {

// ---------------------------------------------------------------------------
// Reverse-mode autodiff over a recorded straight-line program.
//
// A Tape is recorded once through Var operator overloading and then evaluated
// many times with different input bindings. Evaluation state lives in a
// separate Eval workspace so one immutable Tape can be replayed concurrently
// by several workers. The forward/reverse interpreters process a small fixed
// number of lanes at a time so independent evaluation points share the
// instruction-decoding cost and vectorize.
// ---------------------------------------------------------------------------

enum class Op : std::uint8_t {
    input,    // leaf, value bound per evaluation
    constant, // leaf, value fixed at record time (consts[a])
    add,      // val[a] + val[b]
    sub,      // val[a] - val[b]
    mul,      // val[a] * val[b]
    div,      // val[a] / val[b]
    neg,      // -val[a]
    add_c,    // val[a] + consts[b]
    mul_c,    // val[a] * consts[b]
    csub,     // consts[b] - val[a]
    cdiv,     // consts[b] / val[a]
    tanh,     // tanh(val[a])
    exp,      // exp(val[a])
    sqrt,     // sqrt(val[a])
    sin,      // sin(val[a])
    cos,      // cos(val[a])
    dot,      // sum_k val[x_k]*val[y_k]; pairs at args[a..a+2b)
    dot_c,    // sum_k consts[c0+k]*val[x_k]; args[a] = c0, ids at args[a+1..a+1+b)
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::constant: return "constant";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::neg: return "neg";
        case Op::add_c: return "add_c";
        case Op::mul_c: return "mul_c";
        case Op::csub: return "csub";
        case Op::cdiv: return "cdiv";
        case Op::tanh: return "tanh";
        case Op::exp: return "exp";
        case Op::sqrt: return "sqrt";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::dot: return "dot";
        case Op::dot_c: return "dot_c";
    }
    return "?";
}

struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
};

class Tape;

/// Handle produced while recording. A default Var is the constant 0; constants
/// are folded at record time and only materialized as nodes when required, so
/// structurally-zero jet slots never emit work.
struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;
    bool is_const = true;
    double cval = 0.0;

    bool folded() const { return id < 0; }
    bool zero() const { return folded() && is_const && cval == 0.0; }
};

/// Per-worker evaluation workspace for one Tape.
struct Eval {
    std::vector<double> val;
    std::vector<double> adj;
    long long reverse_visits = 0; // nodes visited by reverse sweeps
    int lanes = 1;
};

class Tape {
  public:
    // -- recording ----------------------------------------------------------

    Var input() {
        Var v;
        v.tape = this;
        v.is_const = false;
        v.id = push(Op::input, 0, 0);
        input_ids_.push_back(std::uint32_t(v.id));
        return v;
    }

    Var constant(double c) {
        Var v;
        v.tape = this;
        v.is_const = true;
        v.cval = c;
        return v;
    }

    /// Gives a folded constant a node id (needed when it must be an output).
    Var materialize(Var v) {
        if (!v.folded()) return v;
        Var out;
        out.tape = this;
        out.is_const = v.is_const;
        out.cval = v.cval;
        out.id = push(Op::constant, push_const(v.cval), 0);
        return out;
    }

    void set_output(Var v) {
        v = materialize(attach(v));
        output_id_ = std::uint32_t(v.id);
        has_output_ = true;
    }

    std::size_t size() const { return nodes_.size(); }
    std::size_t num_inputs() const { return input_ids_.size(); }
    std::uint32_t output_id() const { return output_id_; }
    const std::vector<std::uint32_t>& input_ids() const { return input_ids_; }
    const Node& node(std::size_t i) const { return nodes_[i]; }

    // -- evaluation ---------------------------------------------------------

    Eval make_eval(int lanes = 1) const {
        Eval ev;
        ev.lanes = lanes;
        ev.val.assign(nodes_.size() * std::size_t(lanes), 0.0);
        ev.adj.assign(nodes_.size() * std::size_t(lanes), 0.0);
        return ev;
    }

    /// Binds one input across all lanes.
    void bind_uniform(Eval& ev, std::size_t input_idx, double value) const {
        double* slot = &ev.val[input_ids_[input_idx] * std::size_t(ev.lanes)];
        for (int l = 0; l < ev.lanes; ++l) slot[l] = value;
    }

    void bind_lane(Eval& ev, std::size_t input_idx, int lane, double value) const {
        ev.val[input_ids_[input_idx] * std::size_t(ev.lanes) + std::size_t(lane)] = value;
    }

    template <int L> void forward(Eval& ev) const { forward_impl<L, false>(ev, nullptr); }

    /// Forward pass that reports the first node producing a non-finite value
    /// (-1 if none). Slower; used for diagnostics and record_and_grad.
    template <int L> std::int64_t forward_checked(Eval& ev) const {
        std::int64_t bad = -1;
        forward_impl<L, true>(ev, &bad);
        return bad;
    }

    /// Reverse sweep. Adjoint seeds for the output node must be placed in
    /// ev.adj beforehand (see seed_output); every other adjoint is reset here.
    template <int L> void reverse(Eval& ev) const;

    void seed_output(Eval& ev, int lane, double seed) const {
        ev.adj[output_id_ * std::size_t(ev.lanes) + std::size_t(lane)] = seed;
    }

    double output(const Eval& ev, int lane = 0) const {
        return ev.val[output_id_ * std::size_t(ev.lanes) + std::size_t(lane)];
    }

    /// Gradient w.r.t. input `input_idx`, summed over lanes.
    double input_adjoint_sum(const Eval& ev, std::size_t input_idx) const {
        const double* slot = &ev.adj[input_ids_[input_idx] * std::size_t(ev.lanes)];
        double s = 0.0;
        for (int l = 0; l < ev.lanes; ++l) s += slot[l];
        return s;
    }

    std::string describe_node(std::int64_t id) const {
        return std::string(op_name(nodes_[std::size_t(id)].op)) + " node #" + std::to_string(id);
    }

    // -- record-time op construction (used by Var operators) -----------------

    Var unary(Op op, Var a, double (*fold)(double)) {
        a = attach(a);
        if (a.folded()) return constant(fold(a.cval));
        Var out = node_var();
        out.id = push(op, std::uint32_t(a.id), 0);
        return out;
    }

    Var binary(Op op, Var a, Var b) {
        Var out = node_var();
        out.id = push(op, std::uint32_t(a.id), std::uint32_t(b.id));
        return out;
    }

    Var with_const(Op op, Var a, double c) {
        Var out = node_var();
        out.id = push(op, std::uint32_t(a.id), push_const(c));
        return out;
    }

    /// sum_k xs[k]*ys[k] with record-time folding of constant operands.
    Var dot(std::span<const Var> xs, std::span<const Var> ys);
    /// sum_k cs[k]*xs[k].
    Var dot_const(std::span<const double> cs, std::span<const Var> xs);

    Var attach(Var v) {
        if (v.tape == nullptr) {
            v.tape = this;
            return v;
        }
        if (v.tape != this) throw ConfigError("tape: mixed variables from two tapes");
        return v;
    }

  private:
    Var node_var() {
        Var v;
        v.tape = this;
        v.is_const = false;
        return v;
    }

    std::uint32_t push(Op op, std::uint32_t a, std::uint32_t b) {
        nodes_.push_back(Node{op, a, b});
        return std::uint32_t(nodes_.size() - 1);
    }

    std::uint32_t push_const(double c) {
        consts_.push_back(c);
        return std::uint32_t(consts_.size() - 1);
    }

    template <int L, bool Checked>
    void forward_impl(Eval& ev, std::int64_t* bad) const;

    std::vector<Node> nodes_;
    std::vector<double> consts_;
    std::vector<std::uint32_t> args_;
    std::vector<std::uint32_t> input_ids_;
    std::uint32_t output_id_ = 0;
    bool has_output_ = false;

    friend struct VarOps;
    template <int, bool> friend struct ForwardKernel;

  public:
    // exposed for the interpreters
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<double>& consts() const { return consts_; }
    const std::vector<std::uint32_t>& args() const { return args_; }
    std::vector<std::uint32_t>& mutable_args() { return args_; }
};

// -- Var arithmetic ----------------------------------------------------------

inline Tape* common_tape(Var a, Var b) {
    Tape* t = a.tape ? a.tape : b.tape;
    if (a.tape && b.tape && a.tape != b.tape) throw ConfigError("tape: mixed variables from two tapes");
    return t;
}

inline Var operator+(Var a, Var b) {
    Tape* t = common_tape(a, b);
    if (a.folded() && b.folded()) return t ? t->constant(a.cval + b.cval) : Var{nullptr, -1, true, a.cval + b.cval};
    a = t->attach(a);
    b = t->attach(b);
    if (a.folded()) return a.cval == 0.0 ? b : t->with_const(Op::add_c, b, a.cval);
    if (b.folded()) return b.cval == 0.0 ? a : t->with_const(Op::add_c, a, b.cval);
    return t->binary(Op::add, a, b);
}

inline Var operator-(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, -a.cval};
    return a.tape->unary(Op::neg, a, [](double x) { return -x; });
}

inline Var operator-(Var a, Var b) {
    Tape* t = common_tape(a, b);
    if (a.folded() && b.folded()) return t ? t->constant(a.cval - b.cval) : Var{nullptr, -1, true, a.cval - b.cval};
    a = t->attach(a);
    b = t->attach(b);
    if (b.folded()) return b.cval == 0.0 ? a : t->with_const(Op::add_c, a, -b.cval);
    if (a.folded()) return a.cval == 0.0 ? -b : t->with_const(Op::csub, b, a.cval);
    return t->binary(Op::sub, a, b);
}

inline Var operator*(Var a, Var b) {
    Tape* t = common_tape(a, b);
    if (a.folded() && b.folded()) return t ? t->constant(a.cval * b.cval) : Var{nullptr, -1, true, a.cval * b.cval};
    a = t->attach(a);
    b = t->attach(b);
    if (a.folded()) {
        if (a.cval == 0.0) return t->constant(0.0);
        if (a.cval == 1.0) return b;
        return t->with_const(Op::mul_c, b, a.cval);
    }
    if (b.folded()) {
        if (b.cval == 0.0) return t->constant(0.0);
        if (b.cval == 1.0) return a;
        return t->with_const(Op::mul_c, a, b.cval);
    }
    return t->binary(Op::mul, a, b);
}

inline Var operator/(Var a, Var b) {
    Tape* t = common_tape(a, b);
    if (a.folded() && b.folded()) return t ? t->constant(a.cval / b.cval) : Var{nullptr, -1, true, a.cval / b.cval};
    a = t->attach(a);
    b = t->attach(b);
    if (b.folded()) return a * Var{t, -1, true, 1.0 / b.cval};
    if (a.folded()) {
        if (a.cval == 0.0) return t->constant(0.0);
        return t->with_const(Op::cdiv, b, a.cval);
    }
    return t->binary(Op::div, a, b);
}

inline Var operator+(Var a, double c) { return a + Var{a.tape, -1, true, c}; }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) { return Var{a.tape, -1, true, c} - a; }
inline Var operator*(Var a, double c) { return a * Var{a.tape, -1, true, c}; }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var a) { return Var{a.tape, -1, true, c} / a; }

inline Var tanh(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, std::tanh(a.cval)};
    return a.tape->unary(Op::tanh, a, [](double x) { return std::tanh(x); });
}
inline Var exp(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, std::exp(a.cval)};
    return a.tape->unary(Op::exp, a, [](double x) { return std::exp(x); });
}
inline Var sqrt(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, std::sqrt(a.cval)};
    return a.tape->unary(Op::sqrt, a, [](double x) { return std::sqrt(x); });
}
inline Var sin(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, std::sin(a.cval)};
    return a.tape->unary(Op::sin, a, [](double x) { return std::sin(x); });
}
inline Var cos(Var a) {
    if (a.folded()) return Var{a.tape, -1, true, std::cos(a.cval)};
    return a.tape->unary(Op::cos, a, [](double x) { return std::cos(x); });
}

inline Var Tape::dot(std::span<const Var> xs, std::span<const Var> ys) {
    assert(xs.size() == ys.size());
    double cacc = 0.0;
    std::vector<std::uint32_t> pairs;
    std::vector<Var> cx_vars;
    std::vector<double> cx_coefs;
    pairs.reserve(xs.size() * 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Var x = attach(xs[i]), y = attach(ys[i]);
        if (x.folded() && y.folded()) {
            cacc += x.cval * y.cval;
        } else if (x.folded()) {
            if (x.cval != 0.0) {
                cx_vars.push_back(y);
                cx_coefs.push_back(x.cval);
            }
        } else if (y.folded()) {
            if (y.cval != 0.0) {
                cx_vars.push_back(x);
                cx_coefs.push_back(y.cval);
            }
        } else {
            pairs.push_back(std::uint32_t(x.id));
            pairs.push_back(std::uint32_t(y.id));
        }
    }
    Var acc = constant(cacc);
    if (!pairs.empty()) {
        Var d = node_var();
        std::uint32_t off = std::uint32_t(args_.size());
        args_.insert(args_.end(), pairs.begin(), pairs.end());
        d.id = push(Op::dot, off, std::uint32_t(pairs.size() / 2));
        acc = acc + d;
    }
    if (!cx_vars.empty()) acc = acc + dot_const(cx_coefs, cx_vars);
    return acc;
}

inline Var Tape::dot_const(std::span<const double> cs, std::span<const Var> xs) {
    assert(cs.size() == xs.size());
    double cacc = 0.0;
    std::vector<std::uint32_t> ids;
    std::vector<double> coefs;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Var x = attach(xs[i]);
        if (x.folded()) {
            cacc += cs[i] * x.cval;
        } else if (cs[i] != 0.0) {
            ids.push_back(std::uint32_t(x.id));
            coefs.push_back(cs[i]);
        }
    }
    Var acc = constant(cacc);
    if (ids.size() == 1) return acc + Var{this, std::int32_t(ids[0]), false, 0.0} * coefs[0];
    if (!ids.empty()) {
        Var d = node_var();
        std::uint32_t c0 = std::uint32_t(consts_.size());
        consts_.insert(consts_.end(), coefs.begin(), coefs.end());
        std::uint32_t off = std::uint32_t(args_.size());
        args_.push_back(c0);
        args_.insert(args_.end(), ids.begin(), ids.end());
        d.id = push(Op::dot_c, off, std::uint32_t(ids.size()));
        acc = acc + d;
    }
    return acc;
}

// -- interpreters -------------------------------------------------------------

template <int L, bool Checked>
void Tape::forward_impl(Eval& ev, std::int64_t* bad) const {
    double* __restrict V = ev.val.data();
    const Node* nd = nodes_.data();
    const double* C = consts_.data();
    const std::uint32_t* A = args_.data();
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Node nodev = nd[i];
        double* __restrict out = V + i * L;
        const double* __restrict xa = V + std::size_t(nodev.a) * L;
        const double* __restrict xb = V + std::size_t(nodev.b) * L;
        switch (nodev.op) {
            case Op::input: break;
            case Op::constant:
                for (int l = 0; l < L; ++l) out[l] = C[nodev.a];
                break;
            case Op::add:
                for (int l = 0; l < L; ++l) out[l] = xa[l] + xb[l];
                break;
            case Op::sub:
                for (int l = 0; l < L; ++l) out[l] = xa[l] - xb[l];
                break;
            case Op::mul:
                for (int l = 0; l < L; ++l) out[l] = xa[l] * xb[l];
                break;
            case Op::div:
                for (int l = 0; l < L; ++l) out[l] = xa[l] / xb[l];
                break;
            case Op::neg:
                for (int l = 0; l < L; ++l) out[l] = -xa[l];
                break;
            case Op::add_c:
                for (int l = 0; l < L; ++l) out[l] = xa[l] + C[nodev.b];
                break;
            case Op::mul_c:
                for (int l = 0; l < L; ++l) out[l] = xa[l] * C[nodev.b];
                break;
            case Op::csub:
                for (int l = 0; l < L; ++l) out[l] = C[nodev.b] - xa[l];
                break;
            case Op::cdiv:
                for (int l = 0; l < L; ++l) out[l] = C[nodev.b] / xa[l];
                break;
            case Op::tanh:
                for (int l = 0; l < L; ++l) out[l] = std::tanh(xa[l]);
                break;
            case Op::exp:
                for (int l = 0; l < L; ++l) out[l] = std::exp(xa[l]);
                break;
            case Op::sqrt:
                for (int l = 0; l < L; ++l) out[l] = std::sqrt(xa[l]);
                break;
            case Op::sin:
                for (int l = 0; l < L; ++l) out[l] = std::sin(xa[l]);
                break;
            case Op::cos:
                for (int l = 0; l < L; ++l) out[l] = std::cos(xa[l]);
                break;
            case Op::dot: {
                for (int l = 0; l < L; ++l) out[l] = 0.0;
                const std::uint32_t* p = A + nodev.a;
                for (std::uint32_t k = 0; k < nodev.b; ++k) {
                    const double* __restrict u = V + std::size_t(p[2 * k]) * L;
                    const double* __restrict w = V + std::size_t(p[2 * k + 1]) * L;
                    for (int l = 0; l < L; ++l) out[l] += u[l] * w[l];
                }
                break;
            }
            case Op::dot_c: {
                for (int l = 0; l < L; ++l) out[l] = 0.0;
                const std::uint32_t* p = A + nodev.a;
                const double* cs = C + p[0];
                for (std::uint32_t k = 0; k < nodev.b; ++k) {
                    const double* __restrict u = V + std::size_t(p[1 + k]) * L;
                    for (int l = 0; l < L; ++l) out[l] += cs[k] * u[l];
                }
                break;
            }
        }
        if constexpr (Checked) {
            for (int l = 0; l < L; ++l) {
                if (!std::isfinite(out[l])) {
                    if (*bad < 0) *bad = std::int64_t(i);
                    return;
                }
            }
        }
    }
}

template <int L>
void Tape::reverse(Eval& ev) const {
    double* __restrict G = ev.adj.data();
    const double* __restrict V = ev.val.data();
    const Node* nd = nodes_.data();
    const std::uint32_t* A = args_.data();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const Node nodev = nd[i];
        double* __restrict g = G + i * L;
        double* __restrict ga = G + std::size_t(nodev.a) * L;
        double* __restrict gb = G + std::size_t(nodev.b) * L;
        const double* __restrict xa = V + std::size_t(nodev.a) * L;
        const double* __restrict xb = V + std::size_t(nodev.b) * L;
        const double* __restrict y = V + i * L;
        switch (nodev.op) {
            case Op::input:
            case Op::constant:
                continue; // leaves: keep their accumulated adjoints
            case Op::add:
                for (int l = 0; l < L; ++l) {
                    ga[l] += g[l];
                    gb[l] += g[l];
                }
                break;
            case Op::sub:
                for (int l = 0; l < L; ++l) {
                    ga[l] += g[l];
                    gb[l] -= g[l];
                }
                break;
            case Op::mul:
                for (int l = 0; l < L; ++l) {
                    ga[l] += g[l] * xb[l];
                    gb[l] += g[l] * xa[l];
                }
                break;
            case Op::div:
                for (int l = 0; l < L; ++l) {
                    const double inv = 1.0 / xb[l];
                    ga[l] += g[l] * inv;
                    gb[l] -= g[l] * y[l] * inv;
                }
                break;
            case Op::neg:
                for (int l = 0; l < L; ++l) ga[l] -= g[l];
                break;
            case Op::add_c:
                for (int l = 0; l < L; ++l) ga[l] += g[l];
                break;
            case Op::mul_c:
                for (int l = 0; l < L; ++l) ga[l] += g[l] * consts_[nodev.b];
                break;
            case Op::csub:
                for (int l = 0; l < L; ++l) ga[l] -= g[l];
                break;
            case Op::cdiv:
                for (int l = 0; l < L; ++l) ga[l] -= g[l] * y[l] / xa[l];
                break;
            case Op::tanh:
                for (int l = 0; l < L; ++l) ga[l] += g[l] * (1.0 - y[l] * y[l]);
                break;
            case Op::exp:
                for (int l = 0; l < L; ++l) ga[l] += g[l] * y[l];
                break;
            case Op::sqrt:
                for (int l = 0; l < L; ++l) ga[l] += g[l] * 0.5 / y[l];
                break;
            case Op::sin:
                for (int l = 0; l < L; ++l) ga[l] += g[l] * std::cos(xa[l]);
                break;
            case Op::cos:
                for (int l = 0; l < L; ++l) ga[l] -= g[l] * std::sin(xa[l]);
                break;
            case Op::dot: {
                const std::uint32_t* p = A + nodev.a;
                for (std::uint32_t k = 0; k < nodev.b; ++k) {
                    double* __restrict gu = G + std::size_t(p[2 * k]) * L;
                    double* __restrict gw = G + std::size_t(p[2 * k + 1]) * L;
                    const double* __restrict u = V + std::size_t(p[2 * k]) * L;
                    const double* __restrict w = V + std::size_t(p[2 * k + 1]) * L;
                    for (int l = 0; l < L; ++l) {
                        gu[l] += g[l] * w[l];
                        gw[l] += g[l] * u[l];
                    }
                }
                break;
            }
            case Op::dot_c: {
                const std::uint32_t* p = A + nodev.a;
                const double* cs = consts_.data() + p[0];
                for (std::uint32_t k = 0; k < nodev.b; ++k) {
                    double* __restrict gu = G + std::size_t(p[1 + k]) * L;
                    for (int l = 0; l < L; ++l) gu[l] += cs[k] * g[l];
                }
                break;
            }
        }
    }
    ev.reverse_visits += std::int64_t(nodes_.size());
}

/// Zeroes the adjoint buffer; call before placing reverse seeds.
inline void clear_adjoints(Eval& ev) {
    std::memset(ev.adj.data(), 0, ev.adj.size() * sizeof(double));
}

// -- record-and-differentiate convenience -------------------------------------

struct GradResult {
    double value = 0.0;
    std::vector<double> grad;
};

/// Records `f` over fresh input variables bound to `params`, evaluates it and
/// returns the value together with d(value)/d(params). Throws NumericError
/// naming the offending opcode and node index if any intermediate is
/// non-finite.
template <class F>
GradResult record_and_grad(F&& f, std::span<const double> params) {
    Tape tape;
    std::vector<Var> vars(params.size());
    for (auto& v : vars) v = tape.input();
    Var y = std::forward<F>(f)(std::span<const Var>(vars));
    tape.set_output(y);

    Eval ev = tape.make_eval(1);
    for (std::size_t i = 0; i < params.size(); ++i) tape.bind_uniform(ev, i, params[i]);
    std::int64_t bad = tape.forward_checked<1>(ev);
    if (bad >= 0)
        throw NumericError("record_and_grad: non-finite intermediate at " + tape.describe_node(bad));
    clear_adjoints(ev);
    tape.seed_output(ev, 0, 1.0);
    tape.reverse<1>(ev);

    GradResult out;
    out.value = tape.output(ev);
    out.grad.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out.grad[i] = tape.input_adjoint_sum(ev, i);
    return out;
}

} // namespace layerfront::ad

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "layerfront/core.hpp"
#include "layerfront/jet.hpp"
#include "layerfront/tape.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Fixed-topology fully connected tanh network with a linear output layer.
// Parameters live in one flat vector, laid out per layer as the row-major
// weight matrix followed by the bias vector. All forward passes are generic
// over the scalar type so the same code evaluates doubles and records tapes.
// ---------------------------------------------------------------------------

struct MlpShape {
    std::vector<int> sizes; // [input dim, hidden widths..., output dim]

    int num_layers() const { return int(sizes.size()) - 1; }
    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }

    int num_params() const {
        int n = 0;
        for (int l = 0; l + 1 < int(sizes.size()); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
        return n;
    }

    /// Offset of layer l's weight block; biases follow the weights.
    int layer_offset(int l) const {
        int off = 0;
        for (int k = 0; k < l; ++k) off += sizes[k] * sizes[k + 1] + sizes[k + 1];
        return off;
    }

    void validate() const {
        if (sizes.size() < 3) throw ConfigError("mlp: need at least one hidden layer");
        for (int s : sizes)
            if (s < 1) throw ConfigError("mlp: zero-width layer");
    }
};

inline MlpShape mlp_shape(int input_dim, int hidden_layers, int width) {
    MlpShape s;
    s.sizes.push_back(input_dim);
    for (int i = 0; i < hidden_layers; ++i) s.sizes.push_back(width);
    s.sizes.push_back(1);
    return s;
}

/// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
/// Bit-identical for equal seeds.
inline std::vector<double> mlp_init(const MlpShape& shape, std::uint64_t seed) {
    shape.validate();
    Rng rng(seed);
    std::vector<double> params(std::size_t(shape.num_params()), 0.0);
    for (int l = 0; l + 1 < int(shape.sizes.size()); ++l) {
        const int fan_in = shape.sizes[l], fan_out = shape.sizes[l + 1];
        const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
        double* w = params.data() + shape.layer_offset(l);
        for (int i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-bound, bound);
        // biases stay zero
    }
    return params;
}

namespace detail {

inline double dot_span(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline ad::Var dot_span(std::span<const ad::Var> a, std::span<const ad::Var> b) {
    ad::Tape* tape = nullptr;
    for (const auto& v : a)
        if (v.tape) {
            tape = v.tape;
            break;
        }
    if (!tape)
        for (const auto& v : b)
            if (v.tape) {
                tape = v.tape;
                break;
            }
    if (!tape) { // all operands folded constants
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cval * b[i].cval;
        return ad::Var{nullptr, -1, true, s};
    }
    return tape->dot(a, b);
}

} // namespace detail

/// Plain forward pass: affine layers with tanh activations, linear output.
template <class S>
S mlp_value(const MlpShape& shape, std::span<const S> params, std::span<const S> input) {
    if (int(input.size()) != shape.input_dim()) throw ConfigError("mlp: input dimension mismatch");
    using std::tanh;
    std::vector<S> cur(input.begin(), input.end());
    std::vector<S> next;
    for (int l = 0; l + 1 < int(shape.sizes.size()); ++l) {
        const int n_in = shape.sizes[l], n_out = shape.sizes[l + 1];
        const S* w = params.data() + shape.layer_offset(l);
        const S* b = w + n_in * n_out;
        next.assign(std::size_t(n_out), S{});
        const bool last = (l + 2 == int(shape.sizes.size()));
        for (int j = 0; j < n_out; ++j) {
            S z = detail::dot_span(std::span<const S>(w + j * n_in, std::size_t(n_in)),
                                   std::span<const S>(cur.data(), cur.size())) +
                  b[j];
            next[std::size_t(j)] = last ? z : tanh(z);
        }
        cur.swap(next);
    }
    return cur[0];
}

/// Jet forward pass, slot-wise so each layer reduces to dot products over the
/// value column and each derivative column.
template <class S>
Jet<S> mlp_jet(const MlpShape& shape, std::span<const S> params, std::span<const Jet<S>> input) {
    if (int(input.size()) != shape.input_dim()) throw ConfigError("mlp: input dimension mismatch");
    const int n1 = input.empty() ? 0 : input[0].n1;
    const int n2 = input.empty() ? 0 : input[0].n2;
    for (const auto& j : input)
        if (j.n1 != n1 || j.n2 != n2) throw ConfigError("jet: slot count mismatch");

    using std::tanh;
    // struct-of-arrays per layer: values, then one column per derivative slot
    std::vector<S> val(input.size()), nval;
    std::array<std::vector<S>, Jet<S>::kMaxD1> d1, nd1;
    std::array<std::vector<S>, Jet<S>::kMaxD2> d2, nd2;
    for (std::size_t i = 0; i < input.size(); ++i) val[i] = input[i].v;
    for (int k = 0; k < n1; ++k) {
        d1[k].resize(input.size());
        for (std::size_t i = 0; i < input.size(); ++i) d1[k][i] = input[i].d1[k];
    }
    for (int k = 0; k < n2; ++k) {
        d2[k].resize(input.size());
        for (std::size_t i = 0; i < input.size(); ++i) d2[k][i] = input[i].d2[k];
    }

    for (int l = 0; l + 1 < int(shape.sizes.size()); ++l) {
        const int n_in = shape.sizes[l], n_out = shape.sizes[l + 1];
        const S* w = params.data() + shape.layer_offset(l);
        const S* b = w + n_in * n_out;
        const bool last = (l + 2 == int(shape.sizes.size()));
        nval.assign(std::size_t(n_out), S{});
        for (int k = 0; k < n1; ++k) nd1[k].assign(std::size_t(n_out), S{});
        for (int k = 0; k < n2; ++k) nd2[k].assign(std::size_t(n_out), S{});
        for (int j = 0; j < n_out; ++j) {
            auto row = std::span<const S>(w + j * n_in, std::size_t(n_in));
            S z = detail::dot_span(row, std::span<const S>(val)) + b[j];
            std::array<S, Jet<S>::kMaxD1> dz{};
            std::array<S, Jet<S>::kMaxD2> dzz{};
            for (int k = 0; k < n1; ++k) dz[k] = detail::dot_span(row, std::span<const S>(d1[k]));
            for (int k = 0; k < n2; ++k) dzz[k] = detail::dot_span(row, std::span<const S>(d2[k]));
            if (last) {
                nval[std::size_t(j)] = z;
                for (int k = 0; k < n1; ++k) nd1[k][std::size_t(j)] = dz[k];
                for (int k = 0; k < n2; ++k) nd2[k][std::size_t(j)] = dzz[k];
            } else {
                S t = tanh(z);
                S f1 = 1.0 - t * t;
                nval[std::size_t(j)] = t;
                if (n2 > 0) {
                    S f2 = -2.0 * (t * f1);
                    for (int k = 0; k < n2; ++k)
                        nd2[k][std::size_t(j)] = f2 * (dz[k] * dz[k]) + f1 * dzz[k];
                }
                for (int k = 0; k < n1; ++k) nd1[k][std::size_t(j)] = f1 * dz[k];
            }
        }
        val.swap(nval);
        for (int k = 0; k < n1; ++k) d1[k].swap(nd1[k]);
        for (int k = 0; k < n2; ++k) d2[k].swap(nd2[k]);
    }

    Jet<S> out;
    out.n1 = std::uint8_t(n1);
    out.n2 = std::uint8_t(n2);
    out.v = val[0];
    for (int k = 0; k < n1; ++k) out.d1[k] = d1[k][0];
    for (int k = 0; k < n2; ++k) out.d2[k] = d2[k][0];
    return out;
}

// ---------------------------------------------------------------------------
// Hard initial-condition wrapper: h(x*, t) = h0* + t * net(x*, t), so the
// value at t = 0 is h0* identically rather than via a penalty.
// ---------------------------------------------------------------------------

struct HardIcNet {
    MlpShape shape;
    std::vector<double> params;
    double h0_star = 0.0;

    /// Plain value; input is (x*..., t) with t last.
    double value(std::span<const double> xstar_t) const {
        return h0_star + xstar_t.back() * mlp_value<double>(shape, params, xstar_t);
    }
};

/// Jet of the wrapper. The t-input must carry its derivative seed; the product
/// rule then yields dh/dt = net + t * dnet/dt and dh/dx_i = t * dnet/dx_i.
template <class S>
Jet<S> hardic_jet(const MlpShape& shape, std::span<const S> params, double h0_star,
                  std::span<const Jet<S>> xstar_t) {
    Jet<S> net = mlp_jet(shape, params, xstar_t);
    return (xstar_t.back() * net) + h0_star;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::vector<double> m, v;
    long long step = 0;

    explicit AdamState(AdamConfig c = {}, std::size_t n = 0)
        : cfg(c), m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& st, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw ConfigError("adam_step: shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
    st.step += 1;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, double(st.step));
    const double c2 = 1.0 - std::pow(b2, double(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
        const double mhat = st.m[i] / c1;
        const double vhat = st.v[i] / c2;
        params[i] -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
    }
}

} // namespace layerfront

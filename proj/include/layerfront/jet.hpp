#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include "layerfront/core.hpp"
#include "layerfront/tape.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Forward-mode jets: a value plus first derivatives w.r.t. up to four tracked
// inputs and the diagonal second derivatives for the first n2 of them. Mixed
// second partials are not tracked (the residuals only ever need gradients and
// Laplacians). The scalar type S is double for plain evaluation or ad::Var
// when a jet computation is being recorded for reverse mode.
// ---------------------------------------------------------------------------

template <class S>
struct Jet {
    static constexpr int kMaxD1 = 4;
    static constexpr int kMaxD2 = 3;

    S v{};
    std::array<S, kMaxD1> d1{};
    std::array<S, kMaxD2> d2{};
    std::uint8_t n1 = 0;
    std::uint8_t n2 = 0;
};

namespace detail {
template <class S>
inline void require_matching(const Jet<S>& a, const Jet<S>& b) {
    if (a.n1 != b.n1 || a.n2 != b.n2) throw ConfigError("jet: slot count mismatch");
}
} // namespace detail

/// Constant with the given slot layout (all derivatives zero).
template <class S>
Jet<S> jet_const(S value, int n1, int n2) {
    Jet<S> j;
    j.v = value;
    j.n1 = std::uint8_t(n1);
    j.n2 = std::uint8_t(n2);
    return j;
}

/// Tracked input occupying first-derivative slot `slot` (d1 seeded to 1).
template <class S>
Jet<S> jet_input(S value, int slot, int n1, int n2) {
    Jet<S> j = jet_const(value, n1, n2);
    if constexpr (std::is_same_v<S, double>) {
        j.d1[std::size_t(slot)] = 1.0;
    } else {
        j.d1[std::size_t(slot)] = j.v.tape ? j.v.tape->constant(1.0) : S{nullptr, -1, true, 1.0};
    }
    return j;
}

template <class S>
Jet<S> operator+(const Jet<S>& a, const Jet<S>& b) {
    detail::require_matching(a, b);
    Jet<S> r = a;
    r.v = a.v + b.v;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = a.d1[i] + b.d1[i];
    for (int i = 0; i < a.n2; ++i) r.d2[i] = a.d2[i] + b.d2[i];
    return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a, const Jet<S>& b) {
    detail::require_matching(a, b);
    Jet<S> r = a;
    r.v = a.v - b.v;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = a.d1[i] - b.d1[i];
    for (int i = 0; i < a.n2; ++i) r.d2[i] = a.d2[i] - b.d2[i];
    return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a) {
    Jet<S> r = a;
    r.v = -a.v;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = -a.d1[i];
    for (int i = 0; i < a.n2; ++i) r.d2[i] = -a.d2[i];
    return r;
}

template <class S>
Jet<S> operator*(const Jet<S>& a, const Jet<S>& b) {
    detail::require_matching(a, b);
    Jet<S> r = a;
    r.v = a.v * b.v;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
    for (int i = 0; i < a.n2; ++i)
        r.d2[i] = a.d2[i] * b.v + 2.0 * (a.d1[i] * b.d1[i]) + a.v * b.d2[i];
    return r;
}

template <class S>
Jet<S> operator/(const Jet<S>& a, const Jet<S>& b) {
    detail::require_matching(a, b);
    Jet<S> r = a;
    r.v = a.v / b.v;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = (a.d1[i] - r.v * b.d1[i]) / b.v;
    for (int i = 0; i < a.n2; ++i)
        r.d2[i] = (a.d2[i] - 2.0 * (r.d1[i] * b.d1[i]) - r.v * b.d2[i]) / b.v;
    return r;
}

// scalar (non-tracked) operands
template <class S> Jet<S> operator*(const Jet<S>& a, double c) {
    Jet<S> r = a;
    r.v = a.v * c;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = a.d1[i] * c;
    for (int i = 0; i < a.n2; ++i) r.d2[i] = a.d2[i] * c;
    return r;
}
template <class S> Jet<S> operator*(double c, const Jet<S>& a) { return a * c; }
template <class S> Jet<S> operator+(const Jet<S>& a, double c) {
    Jet<S> r = a;
    r.v = a.v + c;
    return r;
}
template <class S> Jet<S> operator+(double c, const Jet<S>& a) { return a + c; }
template <class S> Jet<S> operator-(const Jet<S>& a, double c) { return a + (-c); }
template <class S> Jet<S> operator-(double c, const Jet<S>& a) { return -(a - c); }

/// Scale by a scalar of the underlying type (e.g. a network weight).
template <class S>
Jet<S> scale(const Jet<S>& a, const S& w) {
    Jet<S> r = a;
    r.v = a.v * w;
    for (int i = 0; i < a.n1; ++i) r.d1[i] = a.d1[i] * w;
    for (int i = 0; i < a.n2; ++i) r.d2[i] = a.d2[i] * w;
    return r;
}

template <class S>
Jet<S> shift(const Jet<S>& a, const S& c) {
    Jet<S> r = a;
    r.v = a.v + c;
    return r;
}

namespace detail {
/// v = f(u): d1 = f'·u', diagonal d2 = f''·u'^2 + f'·u''.
template <class S>
Jet<S> chain(const Jet<S>& u, S value, S f1, S f2) {
    Jet<S> r = u;
    r.v = value;
    for (int i = 0; i < u.n1; ++i) r.d1[i] = f1 * u.d1[i];
    for (int i = 0; i < u.n2; ++i) r.d2[i] = f2 * (u.d1[i] * u.d1[i]) + f1 * u.d2[i];
    return r;
}
} // namespace detail

template <class S>
Jet<S> tanh(const Jet<S>& u) {
    using std::tanh;
    S t = tanh(u.v);
    S f1 = 1.0 - t * t;
    S f2 = -2.0 * (t * f1);
    return detail::chain(u, t, f1, f2);
}

template <class S>
Jet<S> exp(const Jet<S>& u) {
    using std::exp;
    S e = exp(u.v);
    return detail::chain(u, e, e, e);
}

template <class S>
Jet<S> sqrt(const Jet<S>& u) {
    using std::sqrt;
    S s = sqrt(u.v);
    S f1 = 0.5 / s;
    S f2 = -0.5 * (f1 / u.v);
    return detail::chain(u, s, f1, f2);
}

template <class S>
Jet<S> sin(const Jet<S>& u) {
    using std::cos;
    using std::sin;
    S sv = sin(u.v);
    S cv = cos(u.v);
    return detail::chain(u, sv, cv, -sv);
}

template <class S>
Jet<S> cos(const Jet<S>& u) {
    using std::cos;
    using std::sin;
    S cv = cos(u.v);
    S sv = sin(u.v);
    return detail::chain(u, cv, -sv, -cv);
}

/// Applies a jet-generic callable to already-seeded inputs. Validates that
/// the inputs agree on slot counts.
template <class F>
Jet<double> jet_eval(F&& f, std::span<const Jet<double>> inputs) {
    for (std::size_t i = 1; i < inputs.size(); ++i) detail::require_matching(inputs[0], inputs[i]);
    return std::forward<F>(f)(inputs);
}

} // namespace layerfront

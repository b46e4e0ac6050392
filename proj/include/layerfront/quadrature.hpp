#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "layerfront/core.hpp"

namespace layerfront {

/// Gauss-Legendre nodes/weights on (-1, 1). Immutable once built.
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;   // strictly increasing, symmetric about 0
    std::vector<double> weights; // positive, summing to 2
};

namespace detail {
/// P_M(x) and P_M'(x) via the three-term recurrence.
inline std::pair<double, double> legendre(int m, double x) {
    double p0 = 1.0, p1 = x;
    if (m == 0) return {p0, 0.0};
    for (int k = 2; k <= m; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = p2;
    }
    double dp = double(m) * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}
} // namespace detail

/// Builds the M-point rule: nodes are roots of P_M found by Newton iteration
/// from Chebyshev initial guesses, weights 2/((1-x^2) P_M'(x)^2).
inline QuadratureRule gauss_legendre(int m) {
    if (m < 1 || m > 64) throw ConfigError("gauss_legendre: order must be in [1, 64]");
    QuadratureRule rule;
    rule.order = m;
    rule.nodes.resize(std::size_t(m));
    rule.weights.resize(std::size_t(m));
    const int half = (m + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = -std::cos(kPi * (i + 0.75) / (m + 0.5));
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            auto [p, dp] = detail::legendre(m, x);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                converged = true;
                break;
            }
        }
        if (!converged) throw NumericError("gauss_legendre: Newton iteration failed for M=" + std::to_string(m));
        auto [p, dp] = detail::legendre(m, x);
        (void)p;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[std::size_t(i)] = x;
        rule.weights[std::size_t(i)] = w;
        rule.nodes[std::size_t(m - 1 - i)] = -x;
        rule.weights[std::size_t(m - 1 - i)] = w;
    }
    if (m % 2 == 1) rule.nodes[std::size_t(half - 1)] = 0.0; // exact midpoint
    return rule;
}

/// Shared immutable rule per order.
inline const QuadratureRule& cached_rule(int m) {
    static std::mutex mu;
    static std::map<int, QuadratureRule> rules;
    std::lock_guard<std::mutex> lock(mu);
    auto it = rules.find(m);
    if (it == rules.end()) it = rules.emplace(m, gauss_legendre(m)).first;
    return it->second;
}

/// Integrates f over [a, b] with the nodes mapped affinely. a > b flips the
/// sign. Non-finite integrand values are reported with the node location.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureRule& rule) {
    const double center = 0.5 * (a + b);
    const double halfwidth = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = center + halfwidth * rule.nodes[i];
        const double fu = f(u);
        if (!std::isfinite(fu))
            throw NumericError("integrate: non-finite integrand at u=" + std::to_string(u));
        acc += rule.weights[i] * fu;
    }
    return halfwidth * acc;
}

/// Composite rule over n equal panels, for integrands needing more reach.
template <class F>
double integrate_panels(F&& f, double a, double b, const QuadratureRule& rule, int n_panels) {
    double acc = 0.0;
    const double h = (b - a) / n_panels;
    for (int p = 0; p < n_panels; ++p) acc += integrate(f, a + p * h, a + (p + 1) * h, rule);
    return acc;
}

} // namespace layerfront

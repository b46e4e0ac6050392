#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "layerfront/core.hpp"
#include "layerfront/problems.hpp"
#include "layerfront/quadrature.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Zero-order composite solution: outer branch plus an exponentially decaying
// inner profile in the stretched coordinate xi0 across the moving front.
// ---------------------------------------------------------------------------

/// Stretched-coordinate data at one evaluation point.
struct LayerScale {
    double xi0 = 0.0;     // (x1 - h0) * sqrt(1 + |grad h0|^2) / mu
    double k = 0.0;       // (1 - sum grad h0) / sqrt(1 + |grad h0|^2)
    double p_minus = 0.0; // half-jump (phi_plus - phi_minus)/2 at the front, > 0
    double p_plus = 0.0;  // -p_minus
};

inline LayerScale layer_scale(const ProblemSpec& p, const FrontState& fs, double x1,
                              std::span<const double> xstar, double mu) {
    LayerScale sc;
    const double root = std::sqrt(1.0 + fs.grad_sq_sum());
    sc.xi0 = (x1 - fs.h0) * root / mu;
    sc.k = (1.0 - fs.grad_sum()) / root;
    const double phim = outer_value_g<double>(p, Side::minus, fs.h0, xstar);
    const double phip = outer_value_g<double>(p, Side::plus, fs.h0, xstar);
    sc.p_minus = 0.5 * (phip - phim);
    sc.p_plus = -sc.p_minus;
    return sc;
}

/// Closed-form inner profile for linear advection: a logistic bridge
/// 2P / (exp(-xi P k) + 1), evaluated with a clamped exponent.
inline double q0_value(Side side, const LayerScale& sc) {
    const double P = side == Side::minus ? sc.p_minus : sc.p_plus;
    return 2.0 * P / (clamped_exp(-sc.xi0 * P * sc.k) + 1.0);
}

/// Integrand of the interface equation at integration variable u.
inline double interface_integrand(const ProblemSpec& p, const FrontState& fs, double u) {
    if (!fs.has_dt) throw ConfigError("interface_integrand: front state lacks dh0/dt");
    return (-fs.dh0_dt - (p.adv_coeff * u) * (fs.grad_sum() - 1.0)) /
           std::sqrt(1.0 + fs.grad_sq_sum());
}

/// First integral of the inner equation: d(u~)/d(xi) as a function of u~.
/// Works for any advection law passed as `advection`.
inline double profile_slope(const ProblemSpec& p, const FrontState& fs, double phi_side,
                            double u_tilde, const std::function<double(double)>& advection,
                            const QuadratureRule& rule) {
    (void)p;
    if (!fs.has_dt) throw ConfigError("profile_slope: front state lacks dh0/dt");
    const double root = std::sqrt(1.0 + fs.grad_sq_sum());
    return integrate(
        [&](double u) { return (-fs.dh0_dt + advection(u) * (1.0 - fs.grad_sum())) / root; },
        phi_side, u_tilde, rule);
}

/// Inner profile for a general advection law, by integrating the first
/// integral outward from the midpoint value until the outer branch is reached
/// to 1e-10. Returns Q0 = u~ - phi_side sampled at the requested xi grid
/// (all xi <= 0 for the minus side, >= 0 for the plus side).
inline std::vector<double> q0_general(const ProblemSpec& p, const FrontState& fs,
                                      std::span<const double> xstar, Side side,
                                      std::span<const double> xi_grid,
                                      const std::function<double(double)>& advection) {
    const QuadratureRule& rule = cached_rule(32);
    const double phi_side = outer_value_g<double>(p, side, fs.h0, xstar);
    const double phim = outer_value_g<double>(p, Side::minus, fs.h0, xstar);
    const double phip = outer_value_g<double>(p, Side::plus, fs.h0, xstar);
    const double phi0 = 0.5 * (phim + phip);
    const double jump = phip - phim;
    const double dir = side == Side::minus ? -1.0 : 1.0;

    auto slope = [&](double u) { return profile_slope(p, fs, phi_side, u, advection, rule); };

    std::vector<double> out(xi_grid.size());
    double u = phi0;
    double xi = 0.0;
    bool converged = false;
    const double step = dir * std::min(0.01, 0.04 / std::max(1.0, std::abs(jump)));
    std::size_t next = 0;

    auto record_until = [&](double xi_now) {
        while (next < xi_grid.size() && xi_grid[next] * dir <= xi_now * dir + 1e-12) {
            out[next] = (converged ? phi_side : u) - phi_side;
            ++next;
        }
    };

    // grid points are expected ordered outward from 0
    for (std::size_t i = 1; i < xi_grid.size(); ++i)
        if (xi_grid[i] * dir < xi_grid[i - 1] * dir)
            throw ConfigError("q0_general: xi grid must be ordered outward");
    for (double g : xi_grid)
        if (g * dir < -1e-12) throw ConfigError("q0_general: xi grid lies on the wrong side");

    record_until(0.0);
    while (next < out.size()) {
        // integrate exactly onto the next requested grid point
        const double target = xi_grid[next];
        while ((target - xi) * dir > 1e-14) {
            double hstep = step;
            if ((xi + hstep - target) * dir > 0.0) hstep = target - xi;
            if (!converged) {
                const double k1 = slope(u);
                if (k1 < 1e-12 * jump * jump && std::abs(u - phi_side) > 1e-6)
                    throw DomainError("q0_general: degenerate profile (first integral hit zero)");
                const double k2 = slope(u + 0.5 * hstep * k1);
                const double k3 = slope(u + 0.5 * hstep * k2);
                const double k4 = slope(u + hstep * k3);
                u += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if ((side == Side::minus && u < phi_side) || (side == Side::plus && u > phi_side))
                    u = phi_side;
                if (std::abs(u - phi_side) < 1e-10) converged = true;
            }
            xi += hstep;
            if (std::abs(xi) > 200.0)
                throw NumericError("q0_general: profile failed to reach the outer branch");
        }
        record_until(xi);
    }
    return out;
}

inline std::vector<double> q0_general(const ProblemSpec& p, const FrontState& fs,
                                      std::span<const double> xstar, Side side,
                                      std::span<const double> xi_grid) {
    return q0_general(p, fs, xstar, side, xi_grid,
                      [&p](double u) { return p.adv_coeff * u; });
}

/// Zero-order composite value at (x, t): branch chosen by the sign of
/// x1 - h0, outer branch plus the logistic inner profile.
inline double assemble_u0(const ProblemSpec& p, const FrontFn& front, std::span<const double> x,
                          double t, double mu) {
    std::span<const double> xstar = x.subspan(1);
    const FrontState fs = front(xstar, t);
    const Side side = x[0] <= fs.h0 ? Side::minus : Side::plus;
    const LayerScale sc = layer_scale(p, fs, x[0], xstar, mu);
    return outer_value_g<double>(p, side, x[0], xstar) + q0_value(side, sc);
}

inline double assemble_u0(const ProblemSpec& p, const FrontFn& front, std::span<const double> x,
                          double t) {
    return assemble_u0(p, front, x, t, p.mu);
}

/// Adapter: front state of a classical oracle as a FrontFn.
inline FrontFn oracle_front_fn(const FrontOracle& oracle) {
    return [&oracle](std::span<const double> xstar, double t) { return oracle.state(xstar, t); };
}

} // namespace layerfront

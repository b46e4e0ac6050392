#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerfront/core.hpp"
#include "layerfront/parallel.hpp"
#include "layerfront/quadrature.hpp"

namespace layerfront {

// ---------------------------------------------------------------------------
// Benchmark instances of the reaction-advection-diffusion problem
//   mu * Lap(u) - u_t = A(u) * (1 . grad u) + f(x),   A(u) = adv_coeff * u,
// with Dirichlet data on the x1 walls and periodic transverse directions.
// Each instance carries closed-form outer branches phi_minus < 0 < phi_plus
// solving the reduced equation, plus the moving-front seed h0*.
// ---------------------------------------------------------------------------

enum class ProblemKey { ex1d, ex2d, ex3d };
enum class Side { minus, plus };

struct ProblemSpec {
    ProblemKey key = ProblemKey::ex1d;
    int dim = 1;
    double x1_lo = 0.0, x1_hi = 1.0; // layer axis interval
    double T = 0.3;
    double mu = 1e-2;
    double h0_star = 0.1;
    double bc_left = -10.0, bc_right = 5.0;      // L(x*), R(x*) (constant here)
    std::array<double, 2> period{0.0, 0.0};      // transverse period per axis
    std::array<double, 2> transverse_lo{0.0, 0.0};
    double adv_coeff = -1.0;  // A(u) = adv_coeff * u
    double source_offset = 0.0;
    int outer_quad_order = 32; // order for the integral inside the 3D branches

    int n_transverse() const { return dim - 1; }
};

inline ProblemSpec make_problem(ProblemKey key) {
    ProblemSpec p;
    p.key = key;
    switch (key) {
        case ProblemKey::ex1d:
            break; // defaults above
        case ProblemKey::ex2d:
            p.dim = 2;
            p.x1_lo = -2.0;
            p.x1_hi = 2.0;
            p.T = 1.0;
            p.mu = 1e-2;
            p.h0_star = 0.0;
            p.bc_left = -4.0;
            p.bc_right = 2.0;
            p.period = {4.0, 0.0};
            p.transverse_lo = {-2.0, 0.0};
            break;
        case ProblemKey::ex3d:
            p.dim = 3;
            p.x1_lo = -1.0;
            p.x1_hi = 1.0;
            p.T = 0.5;
            p.mu = 1e-2;
            p.h0_star = 0.0;
            p.bc_left = -4.0;
            p.bc_right = 2.0;
            p.period = {2.0, 2.0};
            p.transverse_lo = {-1.0, -1.0};
            break;
    }
    return p;
}

inline ProblemSpec make_problem(std::string_view name) {
    if (name == "ex1d") return make_problem(ProblemKey::ex1d);
    if (name == "ex2d") return make_problem(ProblemKey::ex2d);
    if (name == "ex3d") return make_problem(ProblemKey::ex3d);
    throw ConfigError("unknown problem key '" + std::string(name) + "' (valid: ex1d, ex2d, ex3d)");
}

inline const char* problem_name(ProblemKey key) {
    switch (key) {
        case ProblemKey::ex1d: return "ex1d";
        case ProblemKey::ex2d: return "ex2d";
        case ProblemKey::ex3d: return "ex3d";
    }
    return "?";
}

// -- source term --------------------------------------------------------------

template <class S>
S source_value_g(const ProblemSpec& p, S x1, std::span<const S> xstar) {
    using std::cos;
    const S y = xstar.size() > 0 ? xstar[0] : S{};
    const S z = xstar.size() > 1 ? xstar[1] : S{};
    switch (p.key) {
        case ProblemKey::ex1d:
            return x1 - x1 * x1 + x1 * x1 * x1 + p.source_offset;
        case ProblemKey::ex2d:
            return cos(x1 * (kPi / 4.0)) * cos(y * (kPi / 4.0)) + p.source_offset;
        case ProblemKey::ex3d:
            return cos(x1 * kPi) * cos(y * kPi) * cos(z * kPi) + p.source_offset;
    }
    return S{};
}

inline double source_value(const ProblemSpec& p, std::span<const double> x) {
    return source_value_g<double>(p, x[0], x.subspan(1));
}

// -- outer branches ------------------------------------------------------------

namespace detail {

template <class S>
S outer_ex1d(const ProblemSpec& p, Side side, S x) {
    using std::sqrt;
    (void)p;
    const double c0 = side == Side::minus ? 600.0 : 145.0;
    S poly = x * x;
    S rad = (c0 + 6.0 * poly - 4.0 * (poly * x) + 3.0 * (poly * poly)) * (1.0 / 6.0);
    if constexpr (std::is_same_v<S, double>) {
        if (rad < 0.0) throw DomainError("outer_value: negative radicand (ex1d)");
    }
    S root = sqrt(rad);
    return side == Side::minus ? -root : root;
}

template <class S>
S outer_ex2d(Side side, S x, S y) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const double sgn = side == Side::plus ? 1.0 : -1.0;
    const double q = kPi / 4.0;
    S cq = cos((y - x) * q);
    S rad = ((10.0 - 6.0 * sgn) * kPi) - (2.0 * kPi * sgn) * cq + kPi * (x * cq) -
            2.0 * sin((4.0 * sgn - x + y) * q) + 2.0 * sin((x + y) * q);
    if constexpr (std::is_same_v<S, double>) {
        if (rad < 0.0) {
            if (rad > -1e-12) rad = 0.0; // the plus branch grazes zero at one corner
            else throw DomainError("outer_value: negative radicand (ex2d)");
        }
    }
    return sgn * sqrt(rad * (1.0 / kPi));
}

// Small per-thread memo for the 3D branch integrals; keys are the rounded
// evaluation coordinates.
struct Outer3dCache {
    struct Entry {
        std::uint64_t key = 0;
        double value = 0.0;
        bool used = false;
    };
    static constexpr std::size_t kSlots = 1u << 14;
    std::vector<Entry> slots = std::vector<Entry>(kSlots);

    static std::uint64_t key_of(Side side, double x, double y, double z, int order) {
        auto q = [](double v) { return std::int64_t(std::llround(v * 1e12)); };
        std::uint64_t h = 0x9e3779b97f4a7c15ull ^ std::uint64_t(order);
        auto mix = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        mix(std::uint64_t(q(x)));
        mix(std::uint64_t(q(y)));
        mix(std::uint64_t(q(z)));
        mix(side == Side::plus ? 2u : 1u);
        return h == 0 ? 1 : h;
    }
};

/// Integral of cos(pi s) cos(pi (s+y-x)) cos(pi (s+z-x)) over [lo, hi].
template <class S>
S triple_cos_integral(S lo_or_x, S hi_or_x, S y, S x_ref, S z, const QuadratureRule& rule) {
    using std::cos;
    S center = (lo_or_x + hi_or_x) * 0.5;
    S halfw = (hi_or_x - lo_or_x) * 0.5;
    S dy = y - x_ref;
    S dz = z - x_ref;
    S acc{};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        S s = center + halfw * rule.nodes[i];
        S term = cos(s * kPi) * cos((s + dy) * kPi) * cos((s + dz) * kPi);
        acc = acc + rule.weights[i] * term;
    }
    return halfw * acc;
}

template <class S>
S outer_ex3d(Side side, S x, S y, S z, int quad_order) {
    using std::sqrt;
    const QuadratureRule& rule = cached_rule(quad_order);

    if constexpr (std::is_same_v<S, double>) {
        thread_local Outer3dCache cache;
        const std::uint64_t key = Outer3dCache::key_of(side, x, y, z, quad_order);
        auto& slot = cache.slots[key & (Outer3dCache::kSlots - 1)];
        if (slot.used && slot.key == key) return slot.value;
        double val;
        if (side == Side::minus) {
            double integral = triple_cos_integral<double>(-1.0, x, y, x, z, rule);
            double rad = 16.0 + 2.0 * integral;
            if (rad < 0.0) throw DomainError("outer_value: negative radicand (ex3d)");
            val = -std::sqrt(rad);
        } else {
            double integral = triple_cos_integral<double>(x, 1.0, y, x, z, rule);
            double rad = 4.0 - 2.0 * integral;
            if (rad < 0.0) throw DomainError("outer_value: negative radicand (ex3d)");
            val = std::sqrt(rad);
        }
        slot = {key, val, true};
        return val;
    } else {
        if (side == Side::minus) {
            S integral = triple_cos_integral<S>(S{} - 1.0, x, y, x, z, rule);
            return S{} - sqrt(16.0 + 2.0 * integral);
        }
        S integral = triple_cos_integral<S>(x, S{} + 1.0, y, x, z, rule);
        return sqrt(4.0 - 2.0 * integral);
    }
}

} // namespace detail

/// Closed-form outer branch value at (x1, x*). The minus branch is negative,
/// the plus branch positive.
template <class S>
S outer_value_g(const ProblemSpec& p, Side side, S x1, std::span<const S> xstar) {
    const S y = xstar.size() > 0 ? xstar[0] : S{};
    const S z = xstar.size() > 1 ? xstar[1] : S{};
    switch (p.key) {
        case ProblemKey::ex1d: return detail::outer_ex1d<S>(p, side, x1);
        case ProblemKey::ex2d: return detail::outer_ex2d<S>(side, x1, y);
        case ProblemKey::ex3d: return detail::outer_ex3d<S>(side, x1, y, z, p.outer_quad_order);
    }
    return S{};
}

inline double outer_value(const ProblemSpec& p, Side side, std::span<const double> x) {
    return outer_value_g<double>(p, side, x[0], x.subspan(1));
}

/// d(phi)/d(x1) along the layer axis, used by the first-order corrections
/// (1D only, where phi' = f/phi follows from the characteristic identity).
inline double outer_deriv1(const ProblemSpec& p, Side side, double x) {
    if (p.key != ProblemKey::ex1d) throw ConfigError("outer_deriv1: 1D only");
    return source_value_g<double>(p, x, {}) / outer_value_g<double>(p, side, x, {});
}

/// Second x1-derivative of the 1D branches: phi'' = f'/phi - f^2/phi^3.
inline double outer_deriv2(const ProblemSpec& p, Side side, double x) {
    if (p.key != ProblemKey::ex1d) throw ConfigError("outer_deriv2: 1D only");
    const double phi = outer_value_g<double>(p, Side(side), x, {});
    const double f = source_value_g<double>(p, x, {});
    const double fp = 1.0 - 2.0 * x + 3.0 * x * x;
    return fp / phi - f * f / (phi * phi * phi);
}

// -- initial profile -----------------------------------------------------------

inline double initial_profile(const ProblemSpec& p, std::span<const double> x) {
    const double halfjump = 0.5 * (p.bc_right - p.bc_left);
    const double mid = 0.5 * (p.bc_right + p.bc_left);
    double arg = (x[0] - p.h0_star) / p.mu;
    for (int i = 1; i < p.dim; ++i) arg += x[std::size_t(i)];
    return halfjump * std::tanh(arg) + mid;
}

// -- moving-front state and classical oracle ------------------------------------

/// Front position with its transverse gradient and, when known, time slope.
struct FrontState {
    double h0 = 0.0;
    std::array<double, 2> grad{0.0, 0.0}; // d h0 / d x_i, transverse axes
    double dh0_dt = 0.0;
    bool has_dt = false;
    int n_transverse = 0;

    double grad_sum() const {
        double s = 0.0;
        for (int i = 0; i < n_transverse; ++i) s += grad[std::size_t(i)];
        return s;
    }
    double grad_sq_sum() const {
        double s = 0.0;
        for (int i = 0; i < n_transverse; ++i) s += grad[std::size_t(i)] * grad[std::size_t(i)];
        return s;
    }
};

using FrontFn = std::function<FrontState(std::span<const double> xstar, double t)>;

/// Right-hand side of the front equation for linear advection A(u)=c*u,
/// obtained by carrying out the interface integral in closed form:
///   dh/dt = -c/2 * (grad_sum - 1) * (phi_plus(h) + phi_minus(h)).
inline double front_rhs(const ProblemSpec& p, double h, std::span<const double> xstar,
                        double grad_sum) {
    const double sum = outer_value_g<double>(p, Side::minus, h, xstar) +
                       outer_value_g<double>(p, Side::plus, h, xstar);
    return -0.5 * p.adv_coeff * (grad_sum - 1.0) * sum;
}

struct FrontOracleConfig {
    int nt = 0;          // time steps; 0 = max(4000, 2 * ceil(T / (T/2000)))
    int ny = 0;          // transverse grid (2D/3D); 0 = default per problem
    int nz = 0;
    int store_stride = 0; // 0 = auto (~<=600 stored slices)
};

/// Classical front trajectory: RK4 in time; 2D/3D use method of lines on a
/// periodic transverse grid with 4th-order central differences.
class FrontOracle {
  public:
    FrontOracle(const ProblemSpec& p, FrontOracleConfig cfg);

    double h0(std::span<const double> xstar, double t) const;
    FrontState state(std::span<const double> xstar, double t) const;

    int dim() const { return dim_; }
    double final_time() const { return T_; }
    int stored_slices() const { return int(times_.size()); }
    int grid_ny() const { return ny_; }
    int grid_nz() const { return nz_; }
    double grid_y(int iy) const { return y0_ + dy_ * iy; }
    double grid_z(int iz) const { return z0_ + dz_ * iz; }

  private:
    void integrate(const ProblemSpec& p, int nt, int stride);
    std::vector<double> rhs_field(const ProblemSpec& p, const std::vector<double>& h) const;

    // Hermite interpolation in t of field `f` (and slope field `ft`) at grid
    // node `node`, plus the interpolated time derivative.
    void t_interp(double t, std::size_t node, double& value, double& slope) const;

    int dim_ = 1;
    double T_ = 0.0;
    int ny_ = 1, nz_ = 1;
    double y0_ = 0.0, z0_ = 0.0, dy_ = 0.0, dz_ = 0.0;
    double Py_ = 0.0, Pz_ = 0.0;
    double x_lo_ = 0.0, x_hi_ = 0.0;
    std::vector<double> times_;          // stored slice times
    std::vector<std::vector<double>> h_; // per stored slice, grid field
    std::vector<std::vector<double>> ht_;
};

inline FrontOracle::FrontOracle(const ProblemSpec& p, FrontOracleConfig cfg) {
    dim_ = p.dim;
    T_ = p.T;
    x_lo_ = p.x1_lo;
    x_hi_ = p.x1_hi;
    int nt = cfg.nt > 0 ? cfg.nt : (dim_ == 1 ? 4000 : (dim_ == 2 ? 2400 : 2000));
    if (nt < 2000) throw ConfigError("front oracle: time step must be at most T/2000");
    if (dim_ >= 2) {
        ny_ = cfg.ny > 0 ? cfg.ny : (dim_ == 2 ? 256 : 64);
        Py_ = p.period[0];
        y0_ = p.transverse_lo[0];
        dy_ = Py_ / ny_;
        if (ny_ < 64) throw ConfigError("front oracle: need at least 64 transverse points per axis");
    }
    if (dim_ == 3) {
        nz_ = cfg.nz > 0 ? cfg.nz : 64;
        Pz_ = p.period[1];
        z0_ = p.transverse_lo[1];
        dz_ = Pz_ / nz_;
        if (nz_ < 64) throw ConfigError("front oracle: need at least 64 transverse points per axis");
    }
    int stride = cfg.store_stride > 0 ? cfg.store_stride : std::max(1, nt / 600);
    integrate(p, nt, stride);
}

inline std::vector<double> FrontOracle::rhs_field(const ProblemSpec& p,
                                                  const std::vector<double>& h) const {
    std::vector<double> out(h.size());
    if (dim_ == 1) {
        out[0] = front_rhs(p, h[0], {}, 0.0);
        return out;
    }
    const int ny = ny_, nz = nz_;
    auto wrap = [](int i, int n) { return (i % n + n) % n; };
    const int n_blocks = dim_ == 3 ? nz : 1;
    parallel_for_blocks(n_blocks, [&](int iz) {
        std::array<double, 2> xs{};
        for (int iy = 0; iy < ny; ++iy) {
            const std::size_t idx = std::size_t(iz) * std::size_t(ny) + std::size_t(iy);
            double gsum = 0.0;
            {
                const double hm2 = h[std::size_t(iz) * ny + std::size_t(wrap(iy - 2, ny))];
                const double hm1 = h[std::size_t(iz) * ny + std::size_t(wrap(iy - 1, ny))];
                const double hp1 = h[std::size_t(iz) * ny + std::size_t(wrap(iy + 1, ny))];
                const double hp2 = h[std::size_t(iz) * ny + std::size_t(wrap(iy + 2, ny))];
                gsum += (8.0 * (hp1 - hm1) - (hp2 - hm2)) / (12.0 * dy_);
            }
            if (dim_ == 3) {
                const double hm2 = h[std::size_t(wrap(iz - 2, nz)) * ny + std::size_t(iy)];
                const double hm1 = h[std::size_t(wrap(iz - 1, nz)) * ny + std::size_t(iy)];
                const double hp1 = h[std::size_t(wrap(iz + 1, nz)) * ny + std::size_t(iy)];
                const double hp2 = h[std::size_t(wrap(iz + 2, nz)) * ny + std::size_t(iy)];
                gsum += (8.0 * (hp1 - hm1) - (hp2 - hm2)) / (12.0 * dz_);
            }
            xs[0] = y0_ + dy_ * iy;
            if (dim_ == 3) xs[1] = z0_ + dz_ * iz;
            out[idx] = front_rhs(p, h[idx], std::span<const double>(xs.data(), std::size_t(dim_ - 1)),
                                 gsum);
        }
    });
    return out;
}

inline void FrontOracle::integrate(const ProblemSpec& p, int nt, int stride) {
    const std::size_t n = dim_ == 1 ? 1 : std::size_t(ny_) * std::size_t(nz_);
    std::vector<double> h(n, p.h0_star);
    const double dt = T_ / nt;
    const double bound = std::max(std::abs(x_lo_), std::abs(x_hi_)) * 1.05 + 0.05;

    auto check = [&](const std::vector<double>& field) {
        for (double v : field)
            if (!std::isfinite(v) || std::abs(v) > bound)
                throw NumericError("front oracle: trajectory left the domain; refine the step");
    };
    auto store = [&](double t, const std::vector<double>& field) {
        times_.push_back(t);
        h_.push_back(field);
        ht_.push_back(rhs_field(p, field));
    };

    store(0.0, h);
    std::vector<double> k1, k2, k3, k4, tmp(n);
    for (int it = 1; it <= nt; ++it) {
        k1 = rhs_field(p, h);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = h[i] + 0.5 * dt * k1[i];
        k2 = rhs_field(p, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = h[i] + 0.5 * dt * k2[i];
        k3 = rhs_field(p, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = h[i] + dt * k3[i];
        k4 = rhs_field(p, tmp);
        for (std::size_t i = 0; i < n; ++i)
            h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        check(h);
        if (it % stride == 0 || it == nt) store(dt * it, h);
    }
}

inline void FrontOracle::t_interp(double t, std::size_t node, double& value, double& slope) const {
    if (t <= times_.front()) {
        value = h_.front()[node];
        slope = ht_.front()[node];
        return;
    }
    if (t >= times_.back()) {
        value = h_.back()[node];
        slope = ht_.back()[node];
        return;
    }
    // stored times are uniform except possibly the final slice
    std::size_t j = std::min(std::size_t((t - times_[0]) / (times_[1] - times_[0])),
                             times_.size() - 2);
    while (j + 1 < times_.size() - 1 && t > times_[j + 1]) ++j;
    while (j > 0 && t < times_[j]) --j;
    const double dt = times_[j + 1] - times_[j];
    const double s = (t - times_[j]) / dt;
    const double hj = h_[j][node], hj1 = h_[j + 1][node];
    const double mj = ht_[j][node] * dt, mj1 = ht_[j + 1][node] * dt;
    const double s2 = s * s, s3 = s2 * s;
    value = (2 * s3 - 3 * s2 + 1) * hj + (s3 - 2 * s2 + s) * mj + (-2 * s3 + 3 * s2) * hj1 +
            (s3 - s2) * mj1;
    slope = ((6 * s2 - 6 * s) * hj + (3 * s2 - 4 * s + 1) * mj + (-6 * s2 + 6 * s) * hj1 +
             (3 * s2 - 2 * s) * mj1) /
            dt;
}

namespace detail {
/// 6-point Lagrange interpolation weights (and derivative weights) on a
/// uniform stencil at offsets -2..3 around the base cell, local coordinate
/// u in [0,1).
inline void lagrange6(double u, double spacing, std::array<double, 6>& w,
                      std::array<double, 6>& dw) {
    const double xs[6] = {-2, -1, 0, 1, 2, 3};
    for (int i = 0; i < 6; ++i) {
        double num = 1.0, den = 1.0, dnum = 0.0;
        for (int k = 0; k < 6; ++k) {
            if (k == i) continue;
            den *= xs[i] - xs[k];
        }
        for (int k = 0; k < 6; ++k) {
            if (k == i) continue;
            double prod = 1.0;
            for (int m = 0; m < 6; ++m) {
                if (m == i || m == k) continue;
                prod *= u - xs[m];
            }
            dnum += prod;
            num *= u - xs[k];
        }
        w[std::size_t(i)] = num / den;
        dw[std::size_t(i)] = dnum / den / spacing;
    }
}
} // namespace detail

inline double FrontOracle::h0(std::span<const double> xstar, double t) const {
    return state(xstar, t).h0;
}

inline FrontState FrontOracle::state(std::span<const double> xstar, double t) const {
    FrontState fs;
    fs.n_transverse = dim_ - 1;
    fs.has_dt = true;
    if (dim_ == 1) {
        t_interp(t, 0, fs.h0, fs.dh0_dt);
        return fs;
    }
    auto wrap = [](int i, int n) { return (i % n + n) % n; };
    const double y = xstar[0];
    const double fy = (y - y0_) / dy_;
    const int by = int(std::floor(fy));
    std::array<double, 6> wy{}, dwy{};
    detail::lagrange6(fy - by, dy_, wy, dwy);

    if (dim_ == 2) {
        double v = 0, g = 0, vt = 0;
        for (int i = 0; i < 6; ++i) {
            const int iy = wrap(by - 2 + i, ny_);
            double hv, hs;
            t_interp(t, std::size_t(iy), hv, hs);
            v += wy[std::size_t(i)] * hv;
            g += dwy[std::size_t(i)] * hv;
            vt += wy[std::size_t(i)] * hs;
        }
        fs.h0 = v;
        fs.grad[0] = g;
        fs.dh0_dt = vt;
        return fs;
    }

    const double z = xstar.size() > 1 ? xstar[1] : 0.0;
    const double fz = (z - z0_) / dz_;
    const int bz = int(std::floor(fz));
    std::array<double, 6> wz{}, dwz{};
    detail::lagrange6(fz - bz, dz_, wz, dwz);
    double v = 0, gy = 0, gz = 0, vt = 0;
    for (int j = 0; j < 6; ++j) {
        const int iz = wrap(bz - 2 + j, nz_);
        for (int i = 0; i < 6; ++i) {
            const int iy = wrap(by - 2 + i, ny_);
            double hv, hs;
            t_interp(t, std::size_t(iz) * std::size_t(ny_) + std::size_t(iy), hv, hs);
            v += wz[std::size_t(j)] * wy[std::size_t(i)] * hv;
            gy += wz[std::size_t(j)] * dwy[std::size_t(i)] * hv;
            gz += dwz[std::size_t(j)] * wy[std::size_t(i)] * hv;
            vt += wz[std::size_t(j)] * wy[std::size_t(i)] * hs;
        }
    }
    fs.h0 = v;
    fs.grad[0] = gy;
    fs.grad[1] = gz;
    fs.dh0_dt = vt;
    return fs;
}

inline FrontOracle build_front_oracle(const ProblemSpec& p, FrontOracleConfig cfg = {}) {
    return FrontOracle(p, cfg);
}

// -- standing-assumption sampling ------------------------------------------------

struct AssumptionViolation {
    std::string which;
    std::array<double, 4> location{}; // x1, x*..., t (unused slots zero)
    double value = 0.0;
};

struct AssumptionReport {
    int samples = 0;
    std::vector<AssumptionViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Samples the standing inequalities on the problem data and a front
/// trajectory: branch signs and ordering, advection signs on each side, the
/// front staying interior with transverse slope sum below one, and positivity
/// of the layer integrand between the branches. Violations are reported, not
/// thrown.
inline AssumptionReport assumption_check(const ProblemSpec& p, const FrontFn& front, int samples,
                                         std::uint64_t seed) {
    AssumptionReport rep;
    rep.samples = samples;
    Rng rng(seed);
    const QuadratureRule& rule = cached_rule(16);
    for (int s = 0; s < samples; ++s) {
        const double t = rng.uniform(0.0, p.T);
        std::array<double, 2> xs{};
        for (int i = 0; i < p.n_transverse(); ++i)
            xs[std::size_t(i)] = rng.uniform(p.transverse_lo[std::size_t(i)],
                                             p.transverse_lo[std::size_t(i)] + p.period[std::size_t(i)]);
        std::span<const double> xstar(xs.data(), std::size_t(p.n_transverse()));
        const FrontState fs = front(xstar, t);
        const double x1 = rng.uniform(p.x1_lo, p.x1_hi);

        auto record = [&](const char* which, double x1v, double value) {
            AssumptionViolation v;
            v.which = which;
            v.location = {x1v, xs[0], xs[1], t};
            v.value = value;
            rep.violations.push_back(v);
        };

        std::vector<double> pt(1 + std::size_t(p.n_transverse()));
        pt[0] = x1;
        for (int i = 0; i < p.n_transverse(); ++i) pt[std::size_t(i + 1)] = xs[std::size_t(i)];
        const double phim = outer_value(p, Side::minus, pt);
        const double phip = outer_value(p, Side::plus, pt);
        if (!(phip - phim > 0.0)) record("branch ordering phi+ > phi-", x1, phip - phim);
        if (x1 <= fs.h0) {
            if (!(phim < 0.0)) record("phi- < 0 on the left region", x1, phim);
            if (!(p.adv_coeff * phim > 0.0)) record("A(phi-) > 0 on the left region", x1, p.adv_coeff * phim);
        }
        if (x1 >= fs.h0) {
            if (!(phip > 0.0)) record("phi+ > 0 on the right region", x1, phip);
            if (!(p.adv_coeff * phip < 0.0)) record("A(phi+) < 0 on the right region", x1, p.adv_coeff * phip);
        }
        if (!(fs.h0 > p.x1_lo && fs.h0 < p.x1_hi)) record("front interior to the interval", fs.h0, fs.h0);
        if (!(fs.grad_sum() < 1.0)) record("transverse slope sum below one", fs.h0, fs.grad_sum());

        // layer integrand positivity strictly between the branches at the front
        std::vector<double> at_front(pt);
        at_front[0] = fs.h0;
        const double pm = outer_value(p, Side::minus, at_front);
        const double pp = outer_value(p, Side::plus, at_front);
        const double sv = pm + (pp - pm) * rng.uniform(0.05, 0.95);
        const double integral = integrate(
            [&](double u) {
                return p.adv_coeff * u * (1.0 - fs.grad_sum()) - fs.dh0_dt;
            },
            pm, sv, rule);
        if (!(integral > 0.0)) record("layer integrand positivity", fs.h0, integral);
    }
    return rep;
}

} // namespace layerfront

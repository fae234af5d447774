#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "contract.hpp"
#include "math.hpp"
#include "process.hpp"

namespace frontier {

// European vanilla closed form. sigma*sqrt(T) = 0 degenerates to the
// discounted payoff on the deterministic forward.
inline double black_scholes(const ProcessParams& params, double strike, double expiry,
                            bool is_put) {
    params.validate();
    if (!(strike > 0.0)) throw std::invalid_argument("black_scholes: strike must be > 0");
    if (expiry < 0.0) throw std::invalid_argument("black_scholes: expiry must be >= 0");
    double sq = params.sigma * std::sqrt(expiry);
    if (sq == 0.0) {
        double fwd = params.s0 * std::exp(params.r * expiry);
        double pay = is_put ? std::max(strike - fwd, 0.0) : std::max(fwd - strike, 0.0);
        return std::exp(-params.r * expiry) * pay;
    }
    double d1 = (std::log(params.s0 / strike) + (params.r + 0.5 * params.sigma * params.sigma) * expiry) / sq;
    double d2 = d1 - sq;
    double df = std::exp(-params.r * expiry);
    if (is_put) return strike * df * norm_cdf(-d2) - params.s0 * norm_cdf(-d1);
    return params.s0 * norm_cdf(d1) - strike * df * norm_cdf(d2);
}

struct LatticeResult {
    double price = 0.0;
    // Exercise boundary per time index (size n_steps+1): for puts the largest
    // node value where immediate exercise is optimal, for calls the smallest.
    // NaN where no node exercises; entry n_steps equals the strike.
    std::vector<double> boundary;
};

namespace detail {
// With zero volatility the lattice collapses to the deterministic forward
// path; the optimal rule is the best discounted intrinsic over exercise dates.
inline LatticeResult deterministic_lattice(const ProcessParams& params, const ContractSpec& c) {
    const int n = c.n_steps;
    LatticeResult out;
    out.boundary.assign(static_cast<std::size_t>(n) + 1,
                        std::numeric_limits<double>::quiet_NaN());
    out.boundary.back() = c.strike;
    TimeGrid grid = TimeGrid::uniform(c.expiry, n);
    double best = 0.0;
    double s_bar = 0.0;
    for (int i = 0; i <= n; ++i) {
        double s = params.s0 * std::exp(params.r * grid.times[static_cast<std::size_t>(i)]);
        s_bar = update_average(is_average(c.kind) ? c.kind : ContractKind::arith_avg_put, s_bar,
                               i, s);
        double pay = exercise_payoff(c, {s, s_bar});
        double v = std::exp(-params.r * grid.times[static_cast<std::size_t>(i)]) * pay;
        if (c.style == ExerciseStyle::american) {
            if (v > best) best = v;
        } else if (i == n) {
            best = v;
        }
    }
    out.price = best;
    return out;
}
} // namespace detail

// Binomial lattice (u = e^{sigma sqrt(dt)}, d = 1/u) for vanilla contracts.
inline LatticeResult crr_price(const ProcessParams& params, const ContractSpec& c) {
    params.validate();
    c.validate();
    if (is_average(c.kind))
        throw std::invalid_argument("crr_price: average contracts need the augmented lattice");
    if (params.sigma == 0.0) return detail::deterministic_lattice(params, c);

    const int n = c.n_steps;
    const double dt = c.expiry / n;
    const double u = std::exp(params.sigma * std::sqrt(dt));
    const double d = 1.0 / u;
    const double growth = std::exp(params.r * dt);
    const double q = (growth - d) / (u - d);
    if (!(q > 0.0 && q < 1.0))
        throw std::runtime_error(
            "crr_price: up-probability q outside (0,1); the time step is too large for the "
            "drift (need |r| dt < sigma sqrt(dt)). Increase n_steps or reduce the rate.");
    const double disc = std::exp(-params.r * dt);
    const bool put = c.kind == ContractKind::vanilla_put;
    const bool american = c.style == ExerciseStyle::american;

    LatticeResult out;
    out.boundary.assign(static_cast<std::size_t>(n) + 1,
                        std::numeric_limits<double>::quiet_NaN());
    out.boundary.back() = c.strike;

    auto node = [&](int i, int j) { return params.s0 * std::pow(u, 2 * j - i); };
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        double s = node(n, j);
        v[static_cast<std::size_t>(j)] = put ? std::max(c.strike - s, 0.0) : std::max(s - c.strike, 0.0);
    }
    for (int i = n - 1; i >= 0; --i) {
        double bnd = std::numeric_limits<double>::quiet_NaN();
        for (int j = 0; j <= i; ++j) {
            double cont = disc * (q * v[static_cast<std::size_t>(j) + 1] + (1.0 - q) * v[static_cast<std::size_t>(j)]);
            double s = node(i, j);
            double intrinsic = put ? std::max(c.strike - s, 0.0) : std::max(s - c.strike, 0.0);
            double value = cont;
            if (american && intrinsic >= cont && intrinsic > 0.0) {
                value = intrinsic;
                if (std::isnan(bnd) || (put ? s > bnd : s < bnd)) bnd = s;
            }
            v[static_cast<std::size_t>(j)] = value;
        }
        out.boundary[static_cast<std::size_t>(i)] = bnd;
    }
    out.price = v[0];
    return out;
}

// European put on the discrete geometric average of the fixings
// S(t_0), ..., S(t_n) (t_0 = 0 included). The average is lognormal with
//   M = ln s0 + (r - sigma^2/2) mean(t_i),
//   V = sigma^2 / m^2 * sum_{i,j} min(t_i, t_j),  m = n+1.
inline double geo_closed_form(const ProcessParams& params, double strike, const TimeGrid& grid) {
    params.validate();
    grid.validate();
    if (!(strike > 0.0)) throw std::invalid_argument("geo_closed_form: strike must be > 0");
    const std::size_t m = grid.times.size();
    double mean_t = pairwise_sum(grid.times.data(), m) / double(m);
    double M = std::log(params.s0) + (params.r - 0.5 * params.sigma * params.sigma) * mean_t;
    // times ascending: sum_{i,j} min = sum_i t_i * (2*(m-1-i) + 1)
    double smin = pairwise_sum(std::size_t{0}, m, [&](std::size_t i) {
        return grid.times[i] * (2.0 * double(m - 1 - i) + 1.0);
    });
    double V = params.sigma * params.sigma * smin / (double(m) * double(m));
    double df = std::exp(-params.r * grid.expiry);
    if (V <= 0.0) return df * std::max(strike - std::exp(M), 0.0);
    double sq = std::sqrt(V);
    double dm = (std::log(strike) - M) / sq;
    return df * (strike * norm_cdf(dm) - std::exp(M + 0.5 * V) * norm_cdf(dm - sq));
}

// Augmented binomial lattice for geometric-average contracts. Each node keeps
// a grid of representative log-averages spanning the exact achievable range;
// values are interpolated linearly in the log-average. Work is O(n^2 * reps).
// The default density 8n+1 keeps the interpolation error well below the
// lattice discretization error (checked against the European closed form).
inline LatticeResult geo_avg_tree(const ProcessParams& params, const ContractSpec& c,
                                  int n_reps = 0) {
    params.validate();
    c.validate();
    if (c.kind != ContractKind::geo_avg_put)
        throw std::invalid_argument("geo_avg_tree: supports geo-avg-put only");
    if (params.sigma == 0.0) return detail::deterministic_lattice(params, c);

    const int n = c.n_steps;
    const int m = n_reps > 0 ? n_reps : 8 * n + 1;
    if (m < 2) throw std::invalid_argument("geo_avg_tree: need at least 2 representative points");
    const double dt = c.expiry / n;
    const double lnu = params.sigma * std::sqrt(dt);
    const double u = std::exp(lnu);
    const double d = 1.0 / u;
    const double growth = std::exp(params.r * dt);
    const double q = (growth - d) / (u - d);
    if (!(q > 0.0 && q < 1.0))
        throw std::runtime_error(
            "geo_avg_tree: up-probability q outside (0,1); increase n_steps or reduce the rate.");
    const double disc = std::exp(-params.r * dt);
    const double ln_s0 = std::log(params.s0);
    const bool american = c.style == ExerciseStyle::american;

    // Extreme prefix sums of the net up-count: ups-first maximizes the running
    // sum of ln S, downs-first minimizes it.
    auto max_prefix = [](int i, int j) {
        return double(j) * (j - 1) + 2.0 * j * (i - j + 1) - 0.5 * double(i) * (i + 1);
    };
    auto lo_avg = [&](int i, int j) {
        return ln_s0 - lnu * max_prefix(i, i - j) / (i + 1);
    };
    auto hi_avg = [&](int i, int j) {
        return ln_s0 + lnu * max_prefix(i, j) / (i + 1);
    };

    auto payoff = [&](double ln_avg) { return std::max(c.strike - std::exp(ln_avg), 0.0); };

    // values[j*m + k]: node (i, j), representative k on [lo_avg, hi_avg]
    std::vector<double> values(static_cast<std::size_t>(n + 1) * m);
    for (int j = 0; j <= n; ++j) {
        double lo = lo_avg(n, j), hi = hi_avg(n, j);
        for (int k = 0; k < m; ++k) {
            double a = m == 1 || hi == lo ? lo : lo + (hi - lo) * k / (m - 1);
            values[static_cast<std::size_t>(j) * m + k] = payoff(a);
        }
    }

    std::vector<double> next(values.size());
    for (int i = n - 1; i >= 0; --i) {
        std::swap(next, values);
        auto child_at = [&](int j_child, double a, double lo, double hi) {
            const double* grid = next.data() + static_cast<std::size_t>(j_child) * m;
            if (hi <= lo) return grid[0];
            double pos = (a - lo) / (hi - lo) * (m - 1);
            pos = std::clamp(pos, 0.0, double(m - 1));
            int k = std::min(static_cast<int>(pos), m - 2);
            double f = pos - k;
            return grid[k] * (1.0 - f) + grid[k + 1] * f;
        };
        for (int j = 0; j <= i; ++j) {
            double lo = lo_avg(i, j), hi = hi_avg(i, j);
            double ln_up = ln_s0 + (2.0 * (j + 1) - (i + 1)) * lnu;
            double ln_dn = ln_s0 + (2.0 * j - (i + 1)) * lnu;
            double lo_up = lo_avg(i + 1, j + 1), hi_up = hi_avg(i + 1, j + 1);
            double lo_dn = lo_avg(i + 1, j), hi_dn = hi_avg(i + 1, j);
            for (int k = 0; k < m; ++k) {
                double a = hi == lo ? lo : lo + (hi - lo) * k / (m - 1);
                double a_up = ((i + 1) * a + ln_up) / (i + 2);
                double a_dn = ((i + 1) * a + ln_dn) / (i + 2);
                double cont = disc * (q * child_at(j + 1, a_up, lo_up, hi_up) +
                                      (1.0 - q) * child_at(j, a_dn, lo_dn, hi_dn));
                double v = cont;
                if (american) v = std::max(payoff(a), cont);
                values[static_cast<std::size_t>(j) * m + k] = v;
            }
        }
    }

    LatticeResult out;
    out.price = values[0];
    out.boundary.assign(static_cast<std::size_t>(n) + 1,
                        std::numeric_limits<double>::quiet_NaN());
    out.boundary.back() = c.strike;
    return out;
}

} // namespace frontier

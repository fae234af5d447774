#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"
#include "path_sample.hpp"
#include "process.hpp"
#include "rng.hpp"

namespace frontier {

// Substream tags; distinct per use so a forward run, a bridge fill and a
// terminal draw from the same seed never share randomness.
namespace rng_stream {
inline constexpr std::uint64_t forward = 0;
inline constexpr std::uint64_t terminal = 1;
inline constexpr std::uint64_t bridge = 2;
inline constexpr std::uint64_t flashlight = 3;
} // namespace rng_stream

// Forward simulation in log space:
//   ln S_{i+1} = ln S_i + (r - sigma^2/2) dt_i + sigma sqrt(dt_i) z.
inline PathSample simulate_forward(const ProcessParams& params, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed, int n_threads = 1) {
    params.validate();
    grid.validate();
    if (n_paths < 1) throw std::invalid_argument("simulate_forward: n_paths must be >= 1");

    PathSample s;
    s.params = params;
    s.grid = grid;
    s.seed = seed;
    s.n_paths = n_paths;
    s.values.resize(n_paths * s.n_times());
    s.weights.assign(n_paths, 1.0);

    const int n = grid.n_steps;
    const double mu = params.r - 0.5 * params.sigma * params.sigma;
    std::vector<double> drift(static_cast<std::size_t>(n)), vol(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        drift[static_cast<std::size_t>(i)] = mu * grid.dt(i);
        vol[static_cast<std::size_t>(i)] = params.sigma * std::sqrt(grid.dt(i));
    }
    const double ln_s0 = std::log(params.s0);
    CounterRng rng{seed, rng_stream::forward};

    parallel_for(n_paths, n_threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double* row = s.values.data() + p * s.n_times();
            double x = ln_s0;
            row[0] = params.s0;
            for (int i = 0; i < n; ++i) {
                x += drift[static_cast<std::size_t>(i)] +
                     vol[static_cast<std::size_t>(i)] * rng.normal(p, static_cast<std::uint64_t>(i));
                row[i + 1] = std::exp(x);
            }
        }
    });
    return s;
}

// Smallest tilt that brings ln(strike) within one standard deviation of the
// tilted terminal log-mean; zero if it is already that close.
inline double default_tilt_lambda(const ProcessParams& params, double expiry, double strike) {
    params.validate();
    if (!(strike > 0.0)) throw std::invalid_argument("default_tilt_lambda: strike must be > 0");
    double sd = params.sigma * std::sqrt(expiry);
    if (sd <= 0.0) return 0.0;
    double mean_ln = std::log(params.s0) + (params.r - 0.5 * params.sigma * params.sigma) * expiry;
    double dist = std::abs(std::log(strike) - mean_ln);
    if (dist <= sd) return 0.0;
    return 1.0 - sd / dist;
}

struct TerminalSample {
    std::vector<double> values;  // terminal S_T per path
    std::vector<double> weights; // exact likelihood ratios, normalized to mean 1
    double lambda = 0.0;
};

// Draws S_T from the exponentially tilted terminal law: the log-mean is
// shifted by lambda * (ln X - E ln S_T). Weights are the exact ratios
// original/tilted density, divided by their sample mean so they average to 1.
inline TerminalSample sample_terminal_importance(const ProcessParams& params, double expiry,
                                                 std::size_t n_paths, double strike,
                                                 double lambda, std::uint64_t seed) {
    params.validate();
    if (n_paths < 1)
        throw std::invalid_argument("sample_terminal_importance: n_paths must be >= 1");
    if (!(expiry > 0.0)) throw std::invalid_argument("sample_terminal_importance: expiry <= 0");
    if (std::isnan(lambda)) lambda = default_tilt_lambda(params, expiry, strike);
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("sample_terminal_importance: lambda outside [0,1]");

    const double m = std::log(params.s0) + (params.r - 0.5 * params.sigma * params.sigma) * expiry;
    const double sd = params.sigma * std::sqrt(expiry);
    if (sd == 0.0 && lambda != 0.0 && std::log(strike) != m)
        throw std::invalid_argument(
            "sample_terminal_importance: cannot tilt a zero-variance terminal");
    const double delta = lambda * (std::log(strike) - m);
    const double var = sd * sd;

    TerminalSample out;
    out.lambda = lambda;
    out.values.resize(n_paths);
    out.weights.resize(n_paths);
    CounterRng rng{seed, rng_stream::terminal};
    for (std::size_t p = 0; p < n_paths; ++p) {
        double z = sd > 0.0 ? rng.normal(p, 0) : 0.0;
        double x = m + delta + sd * z;
        out.values[p] = std::exp(x);
        // f(x)/f_tilted(x) for N(m,var) vs N(m+delta,var)
        out.weights[p] =
            delta == 0.0 || var == 0.0
                ? 1.0
                : std::exp((-delta * (2.0 * x - 2.0 * m - delta)) / (2.0 * var));
    }
    double mean_w = pairwise_sum(out.weights.data(), n_paths) / double(n_paths);
    for (double& w : out.weights) w /= mean_w;
    return out;
}

// Fills path interiors conditional on fixed endpoints (S_0, S_T). Given both
// endpoints the drift drops out; stepping backward from index n-1,
//   ln S_i | ln S_{i+1} ~ N( (t_i/t_{i+1}) ln S_{i+1} + (1 - t_i/t_{i+1}) ln S_0,
//                            sigma^2 t_i (t_{i+1}-t_i)/t_{i+1} ).
inline PathSample simulate_bridge(const ProcessParams& params, const TimeGrid& grid,
                                  const std::vector<double>& terminal,
                                  const std::vector<double>& weights, std::uint64_t seed,
                                  int n_threads = 1) {
    params.validate();
    grid.validate();
    if (terminal.empty()) throw std::invalid_argument("simulate_bridge: no terminal values");
    if (terminal.size() != weights.size())
        throw std::invalid_argument("simulate_bridge: terminal/weights size mismatch");

    for (double v : terminal)
        if (!(v > 0.0))
            throw std::invalid_argument("simulate_bridge: terminal values must be > 0");

    PathSample s;
    s.params = params;
    s.grid = grid;
    s.seed = seed;
    s.n_paths = terminal.size();
    s.values.resize(s.n_paths * s.n_times());
    s.weights = weights;

    const int n = grid.n_steps;
    const double ln_s0 = std::log(params.s0);
    std::vector<double> frac(static_cast<std::size_t>(n)), sd(static_cast<std::size_t>(n));
    for (int i = 1; i < n; ++i) {
        double t = grid.times[static_cast<std::size_t>(i)];
        double b = grid.times[static_cast<std::size_t>(i) + 1];
        frac[static_cast<std::size_t>(i)] = t / b;
        sd[static_cast<std::size_t>(i)] = params.sigma * std::sqrt(t * (b - t) / b);
    }
    CounterRng rng{seed, rng_stream::bridge};

    parallel_for(s.n_paths, n_threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double* row = s.values.data() + p * s.n_times();
            row[0] = params.s0;
            row[n] = terminal[p];
            double x_next = std::log(terminal[p]);
            for (int i = n - 1; i >= 1; --i) {
                double mean = frac[static_cast<std::size_t>(i)] * x_next +
                              (1.0 - frac[static_cast<std::size_t>(i)]) * ln_s0;
                double x = mean + sd[static_cast<std::size_t>(i)] *
                                      rng.normal(p, static_cast<std::uint64_t>(i));
                row[i] = std::exp(x);
                x_next = x;
            }
        }
    });
    return s;
}

// Terminal importance draw + bridge fill. lambda = NaN picks the default; 0
// reproduces the plain terminal law with unit weights.
inline PathSample simulate_tilted(const ProcessParams& params, const TimeGrid& grid,
                                  std::size_t n_paths, double strike, double lambda,
                                  std::uint64_t seed, int n_threads = 1) {
    TerminalSample t =
        sample_terminal_importance(params, grid.expiry, n_paths, strike, lambda, seed);
    PathSample s = simulate_bridge(params, grid, t.values, t.weights, seed, n_threads);
    return s;
}

} // namespace frontier

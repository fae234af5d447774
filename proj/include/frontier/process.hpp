#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace frontier {

// Geometric Brownian motion under the risk-neutral measure:
//   d ln S = (r - sigma^2/2) dt + sigma dW.
struct ProcessParams {
    double r = 0.0;     // risk-free rate, continuously compounded
    double sigma = 0.0; // volatility of ln S per sqrt(year)
    double s0 = 0.0;    // spot at t = 0

    void validate() const {
        if (!std::isfinite(r) || !std::isfinite(sigma) || !std::isfinite(s0))
            throw std::invalid_argument("ProcessParams: non-finite parameter");
        if (s0 <= 0.0) throw std::invalid_argument("ProcessParams: s0 must be > 0");
        if (sigma < 0.0) throw std::invalid_argument("ProcessParams: sigma must be >= 0");
    }
};

// Discretization of [0, T]. times[0] = 0 and times[n_steps] = expiry exactly;
// the step sizes telescope back to expiry by construction.
struct TimeGrid {
    double expiry = 0.0;
    int n_steps = 0;
    std::vector<double> times; // size n_steps + 1

    static TimeGrid uniform(double expiry, int n_steps) {
        TimeGrid g;
        g.expiry = expiry;
        g.n_steps = n_steps;
        g.times.resize(static_cast<std::size_t>(n_steps) + 1);
        for (int i = 0; i <= n_steps; ++i)
            g.times[static_cast<std::size_t>(i)] = expiry * i / n_steps;
        g.times.back() = expiry;
        g.validate();
        return g;
    }

    double dt(int i) const {
        return times[static_cast<std::size_t>(i) + 1] - times[static_cast<std::size_t>(i)];
    }

    void validate() const {
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
        if (!(expiry > 0.0) || !std::isfinite(expiry))
            throw std::invalid_argument("TimeGrid: expiry must be positive and finite");
        if (times.size() != static_cast<std::size_t>(n_steps) + 1)
            throw std::invalid_argument("TimeGrid: times size must be n_steps + 1");
        if (times.front() != 0.0) throw std::invalid_argument("TimeGrid: times must start at 0");
        if (times.back() != expiry)
            throw std::invalid_argument("TimeGrid: times must end at expiry");
        for (int i = 0; i < n_steps; ++i)
            if (!(dt(i) > 0.0))
                throw std::invalid_argument("TimeGrid: times must be strictly increasing");
    }
};

} // namespace frontier

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "math.hpp"
#include "process.hpp"

namespace frontier {

// A simulated path ensemble. values is path-major: path p occupies the
// contiguous block [p*(n_steps+1), (p+1)*(n_steps+1)). weights carry the
// importance-sampling likelihood ratios, normalized to mean 1.
struct PathSample {
    ProcessParams params;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<double> values;
    std::vector<double> weights;

    std::size_t n_times() const { return static_cast<std::size_t>(grid.n_steps) + 1; }

    double at(std::size_t p, std::size_t i) const { return values[p * n_times() + i]; }
    double& at(std::size_t p, std::size_t i) { return values[p * n_times() + i]; }
    const double* path(std::size_t p) const { return values.data() + p * n_times(); }

    void validate() const {
        params.validate();
        grid.validate();
        if (n_paths < 1) throw std::invalid_argument("PathSample: need at least one path");
        if (values.size() != n_paths * n_times())
            throw std::invalid_argument("PathSample: values size mismatch");
        if (weights.size() != n_paths)
            throw std::invalid_argument("PathSample: weights size mismatch");
        for (double v : values)
            if (!(v > 0.0)) throw std::invalid_argument("PathSample: values must be > 0");
        double mw = pairwise_sum(weights.data(), weights.size()) / double(n_paths);
        for (double w : weights)
            if (!(w > 0.0)) throw std::invalid_argument("PathSample: weights must be > 0");
        if (std::abs(mw - 1.0) > 1e-12)
            throw std::invalid_argument("PathSample: weights must average to 1");
    }
};

namespace detail {
inline void put_u64(std::FILE* f, std::uint64_t v) {
    if (std::fwrite(&v, sizeof v, 1, f) != 1) throw std::runtime_error("path sample: write failed");
}
inline void put_f64(std::FILE* f, double v) {
    if (std::fwrite(&v, sizeof v, 1, f) != 1) throw std::runtime_error("path sample: write failed");
}
inline std::uint64_t get_u64(std::FILE* f) {
    std::uint64_t v;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw std::runtime_error("path sample: truncated file");
    return v;
}
inline double get_f64(std::FILE* f) {
    double v;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw std::runtime_error("path sample: truncated file");
    return v;
}
} // namespace detail

// Binary layout (little-endian, see docs/formats.md):
//   magic "FRPS" + u64 version, u64 seed, u64 n_paths, u64 n_steps,
//   f64 r, sigma, s0, expiry, times[n_steps+1], values, weights.
inline constexpr std::uint64_t path_sample_format_version = 1;

inline void save_path_sample(const PathSample& s, const std::string& path) {
    s.validate();
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    try {
        const char magic[4] = {'F', 'R', 'P', 'S'};
        if (std::fwrite(magic, 1, 4, f) != 4) throw std::runtime_error("path sample: write failed");
        detail::put_u64(f, path_sample_format_version);
        detail::put_u64(f, s.seed);
        detail::put_u64(f, s.n_paths);
        detail::put_u64(f, static_cast<std::uint64_t>(s.grid.n_steps));
        detail::put_f64(f, s.params.r);
        detail::put_f64(f, s.params.sigma);
        detail::put_f64(f, s.params.s0);
        detail::put_f64(f, s.grid.expiry);
        for (double t : s.grid.times) detail::put_f64(f, t);
        for (double v : s.values) detail::put_f64(f, v);
        for (double w : s.weights) detail::put_f64(f, w);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + path);
}

inline PathSample load_path_sample(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open: " + path);
    PathSample s;
    try {
        char magic[4];
        if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "FRPS", 4) != 0)
            throw std::runtime_error("path sample: bad magic in " + path);
        std::uint64_t ver = detail::get_u64(f);
        if (ver != path_sample_format_version)
            throw std::runtime_error("path sample: unsupported format version " +
                                     std::to_string(ver));
        s.seed = detail::get_u64(f);
        s.n_paths = detail::get_u64(f);
        std::uint64_t n_steps = detail::get_u64(f);
        s.params.r = detail::get_f64(f);
        s.params.sigma = detail::get_f64(f);
        s.params.s0 = detail::get_f64(f);
        s.grid.expiry = detail::get_f64(f);
        s.grid.n_steps = static_cast<int>(n_steps);
        s.grid.times.resize(n_steps + 1);
        for (double& t : s.grid.times) t = detail::get_f64(f);
        s.values.resize(s.n_paths * (n_steps + 1));
        for (double& v : s.values) v = detail::get_f64(f);
        s.weights.resize(s.n_paths);
        for (double& w : s.weights) w = detail::get_f64(f);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    s.validate();
    return s;
}

} // namespace frontier

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "contract.hpp"
#include "math.hpp"
#include "process.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace frontier {

// located: threshold estimated from the sample. below-/above-sample: the
// boundary left the sampled range on that side; no threshold is stored.
enum class BoundaryFlag { located, below_sample, above_sample };

inline const char* to_string(BoundaryFlag f) {
    switch (f) {
        case BoundaryFlag::located: return "located";
        case BoundaryFlag::below_sample: return "below-sample";
        case BoundaryFlag::above_sample: return "above-sample";
    }
    throw std::logic_error("unreachable");
}

struct BoundaryEntry {
    double threshold = std::numeric_limits<double>::quiet_NaN();
    BoundaryFlag flag = BoundaryFlag::located;
};

// Exercise rule at one time index. The exercise region is the strict side of
// the threshold: x < b for puts, x > b for calls (x is the policy coordinate,
// S for vanilla contracts and the running average for average contracts).
inline bool boundary_exercises(const BoundaryEntry& e, ContractKind kind, double x) {
    bool below = exercises_below(kind);
    switch (e.flag) {
        case BoundaryFlag::located: return below ? x < e.threshold : x > e.threshold;
        case BoundaryFlag::below_sample: return !below;
        case BoundaryFlag::above_sample: return below;
    }
    throw std::logic_error("unreachable");
}

// Estimated early-exercise boundary over the whole grid. Scalar contracts use
// entries[i]. Average contracts partition paths into equal-population bins in
// S_i and hold one average-threshold per bin: bin k at index i covers
// [edge(i,k-1), edge(i,k)) with open outer ends.
struct ExerciseBoundary {
    ContractKind kind = ContractKind::vanilla_put;
    TimeGrid grid;
    std::vector<BoundaryEntry> entries; // size n_steps+1 when scalar

    int n_bins = 0;                       // > 0 marks the binned form
    std::vector<double> bin_edges;        // (n_steps+1) x (n_bins-1), row-major
    std::vector<BoundaryEntry> bin_entries; // (n_steps+1) x n_bins
    std::vector<char> bin_inherited;      // 1 if threshold copied from a neighbor bin

    bool scalar() const { return n_bins == 0; }

    const double* edges_at(int i) const {
        return bin_edges.data() + static_cast<std::size_t>(i) * (n_bins - 1);
    }
    const BoundaryEntry& bin_entry(int i, int k) const {
        return bin_entries[static_cast<std::size_t>(i) * n_bins + k];
    }
    BoundaryEntry& bin_entry(int i, int k) {
        return bin_entries[static_cast<std::size_t>(i) * n_bins + k];
    }

    int bin_of(int i, double s) const {
        const double* e = edges_at(i);
        return static_cast<int>(std::upper_bound(e, e + n_bins - 1, s) - e);
    }

    // Exercise decision for a path state at index i.
    bool exercises(int i, const AugmentedState& st) const {
        if (scalar())
            return boundary_exercises(entries[static_cast<std::size_t>(i)], kind, st.s);
        int k = bin_of(i, st.s);
        double x = is_average(kind) ? st.s_bar : st.s;
        return boundary_exercises(bin_entry(i, k), kind, x);
    }

    void validate() const {
        grid.validate();
        std::size_t nt = static_cast<std::size_t>(grid.n_steps) + 1;
        if (scalar()) {
            if (entries.size() != nt)
                throw std::invalid_argument("ExerciseBoundary: entries size mismatch");
        } else {
            if (n_bins < 1) throw std::invalid_argument("ExerciseBoundary: n_bins must be >= 1");
            if (bin_edges.size() != nt * static_cast<std::size_t>(n_bins - 1) ||
                bin_entries.size() != nt * static_cast<std::size_t>(n_bins) ||
                bin_inherited.size() != bin_entries.size())
                throw std::invalid_argument("ExerciseBoundary: bin table size mismatch");
        }
    }

    void write_csv(const std::string& path) const;
};

// Objective values over candidate thresholds at one time index.
struct ObjectiveCurve {
    int index = 0;
    std::vector<double> candidates;
    std::vector<double> values;

    void write_csv(const std::string& path) const {
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
        std::fprintf(f, "# objective curve at time index %d\n# candidate,objective\n", index);
        for (std::size_t k = 0; k < candidates.size(); ++k)
            std::fprintf(f, "%.17g,%.17g\n", candidates[k], values[k]);
        if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + path);
    }
};

// One scored point for threshold location: policy coordinate x, immediate
// payoff g, continuation h already discounted one step, and weight w.
struct LocatePoints {
    std::vector<double> x, g, h, w;

    std::size_t size() const { return x.size(); }
    void push(double xi, double gi, double hi, double wi) {
        x.push_back(xi);
        g.push_back(gi);
        h.push_back(hi);
        w.push_back(wi);
    }
};

struct LocateResult {
    double threshold = std::numeric_limits<double>::quiet_NaN();
    BoundaryFlag flag = BoundaryFlag::located;
    std::size_t exercised = 0; // points on the exercise side of the threshold
    std::size_t total = 0;
    bool degenerate = false; // all coordinates identical; threshold is that value
    double objective = 0.0;  // weighted mean policy payoff at the optimum
};

namespace detail {

// Exact argmax over sampled coordinates, exercise region x < threshold.
// Candidates are the distinct sampled values; candidate v scores the policy
// "exercise everything strictly below v". Ties prefer the smaller exercise
// region; a too-small region only loses value gracefully, a too-large one can
// exercise at zero payoff.
inline LocateResult mode_a_below(const LocatePoints& pts, double strike) {
    const std::size_t n = pts.size();
    if (n == 0) throw std::invalid_argument("locate: empty sample");
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return pts.x[a] < pts.x[b]; });

    double sum_w = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) { return pts.w[i]; });
    double hold_all = pairwise_sum(std::size_t{0}, n,
                                   [&](std::size_t i) { return pts.w[i] * pts.h[i]; });

    LocateResult res;
    res.total = n;
    if (pts.x[order.front()] == pts.x[order.back()]) {
        res.threshold = std::min(pts.x[order.front()], strike);
        res.degenerate = true;
        res.objective = hold_all / sum_w;
        return res;
    }

    double running = hold_all;
    double best = hold_all;
    std::size_t best_k = 0;
    for (std::size_t k = 1; k < n; ++k) {
        std::uint32_t p = order[k - 1];
        running += pts.w[p] * (pts.g[p] - pts.h[p]);
        if (pts.x[order[k]] != pts.x[order[k - 1]] && running > best) {
            best = running;
            best_k = k;
        }
    }
    res.threshold = std::min(pts.x[order[best_k]], strike);
    res.exercised = best_k;
    res.objective = best / sum_w;
    return res;
}

// Coarse-to-fine grid search, exercise region x < threshold. 64 candidates
// span the sampled range; each pass buckets every point once (O(n + K)), so
// total work stays linear in the sample size. Refinement shrinks the window
// 4x around the incumbent and halts at the tolerance or when the sampled
// objective turns multimodal.
inline LocateResult mode_b_below(const LocatePoints& pts, double strike, double tol,
                                 int n_candidates = 64, double shrink = 4.0) {
    const std::size_t n = pts.size();
    if (n == 0) throw std::invalid_argument("locate: empty sample");
    if (!(tol > 0.0)) throw std::invalid_argument("locate: tol must be > 0");
    const auto [lo_it, hi_it] = std::minmax_element(pts.x.begin(), pts.x.end());
    const double lo0 = *lo_it, hi0 = *hi_it;

    double sum_w = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) { return pts.w[i]; });
    double hold_all = pairwise_sum(std::size_t{0}, n,
                                   [&](std::size_t i) { return pts.w[i] * pts.h[i]; });

    LocateResult res;
    res.total = n;
    if (lo0 == hi0) {
        res.threshold = std::min(lo0, strike);
        res.degenerate = true;
        res.objective = hold_all / sum_w;
        return res;
    }

    const int K = n_candidates;
    std::vector<double> bucket_g(static_cast<std::size_t>(K)), bucket_h(static_cast<std::size_t>(K));
    std::vector<std::size_t> bucket_n(static_cast<std::size_t>(K));

    double best_c = lo0, best_obj = hold_all;
    std::size_t best_cnt = 0;
    double lo = lo0, hi = hi0;

    for (int level = 0; level < 64; ++level) {
        const double step = (hi - lo) / (K - 1);
        if (!(step > 0.0)) break;
        std::fill(bucket_g.begin(), bucket_g.end(), 0.0);
        std::fill(bucket_h.begin(), bucket_h.end(), 0.0);
        std::fill(bucket_n.begin(), bucket_n.end(), std::size_t{0});
        double below_g = 0.0, rest_h = 0.0;
        std::size_t below_n = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double xi = pts.x[i];
            if (xi < lo) {
                below_g += pts.w[i] * pts.g[i];
                ++below_n;
            } else if (xi >= hi) {
                rest_h += pts.w[i] * pts.h[i];
            } else {
                auto idx = static_cast<std::size_t>((xi - lo) / step) + 1;
                idx = std::min(idx, static_cast<std::size_t>(K - 1));
                bucket_g[idx] += pts.w[i] * pts.g[i];
                bucket_h[idx] += pts.w[i] * pts.h[i];
                bucket_n[idx] += 1;
            }
        }
        double in_window_h = 0.0;
        for (int j = 1; j < K; ++j) in_window_h += bucket_h[static_cast<std::size_t>(j)];

        // objective at candidate j; j = 0 exercises only points below the window
        double obj = below_g + in_window_h + rest_h;
        std::size_t cnt = below_n;
        double lvl_best = obj, lvl_c = lo;
        std::size_t lvl_cnt = cnt;
        double prev = obj;
        int peaks = 0, dir = 0;
        for (int j = 1; j < K; ++j) {
            obj += bucket_g[static_cast<std::size_t>(j)] - bucket_h[static_cast<std::size_t>(j)];
            cnt += bucket_n[static_cast<std::size_t>(j)];
            double c = lo + step * j;
            if (obj > lvl_best || (obj == lvl_best && cnt == lvl_cnt)) {
                lvl_best = obj;
                lvl_c = c;
                lvl_cnt = cnt;
            }
            if (obj > prev) {
                dir = 1;
            } else if (obj < prev) {
                if (dir == 1) ++peaks;
                dir = -1;
            }
            prev = obj;
        }
        if (dir == 1) ++peaks;

        if (lvl_best > best_obj || (lvl_best == best_obj && lvl_cnt <= best_cnt)) {
            best_obj = lvl_best;
            best_c = lvl_c;
            best_cnt = lvl_cnt;
        }
        if (peaks > 1 || step <= tol) break;

        double span = (hi - lo) / shrink;
        lo = std::max(lo0, best_c - 0.5 * span);
        hi = std::min(hi0, best_c + 0.5 * span);
        if (!(hi > lo)) break;
    }

    res.threshold = std::min(best_c, strike);
    res.exercised = best_cnt;
    res.objective = best_obj / sum_w;
    return res;
}

inline LocatePoints negate_points(const LocatePoints& pts) {
    LocatePoints out = pts;
    for (double& v : out.x) v = -v;
    return out;
}

} // namespace detail

// Exact argmax over sampled points: O(n log n) sort-then-scan.
inline LocateResult locate_mode_a(const LocatePoints& pts, bool exercise_below, double strike) {
    if (exercise_below) return detail::mode_a_below(pts, strike);
    LocateResult res = detail::mode_a_below(detail::negate_points(pts), -strike);
    res.threshold = -res.threshold;
    return res;
}

// Coarse-to-fine grid search: O(n) per refinement level.
inline LocateResult locate_mode_b(const LocatePoints& pts, bool exercise_below, double strike,
                                  double tol, int n_candidates = 64, double shrink = 4.0) {
    if (exercise_below) return detail::mode_b_below(pts, strike, tol, n_candidates, shrink);
    LocateResult res =
        detail::mode_b_below(detail::negate_points(pts), -strike, tol, n_candidates, shrink);
    res.threshold = -res.threshold;
    return res;
}

// Weighted mean policy payoff for each candidate threshold.
inline ObjectiveCurve objective_curve(const LocatePoints& pts, bool exercise_below,
                                      const std::vector<double>& candidates, int index = 0) {
    const std::size_t n = pts.size();
    if (n == 0) throw std::invalid_argument("objective_curve: empty sample");
    double sum_w = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) { return pts.w[i]; });
    ObjectiveCurve out;
    out.index = index;
    out.candidates = candidates;
    out.values.resize(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        double c = candidates[k];
        out.values[k] = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) {
                            bool ex = exercise_below ? pts.x[i] < c : pts.x[i] > c;
                            return pts.w[i] * (ex ? pts.g[i] : pts.h[i]);
                        }) /
                        sum_w;
    }
    return out;
}

// Maps the located policy to a freeze decision: an optimum that exercises
// nothing (or everything representable) means the boundary sits outside the
// sampled range, and stays there for all earlier times.
enum class CutoffAction { none, freeze_hold_side, freeze_exercise_side };

inline CutoffAction early_cutoff_check(const LocateResult& res) {
    if (res.total >= 2 && res.exercised + 1 >= res.total) return CutoffAction::freeze_exercise_side;
    if (res.exercised == 0) return CutoffAction::freeze_hold_side;
    return CutoffAction::none;
}

// Flags for a frozen index, by side. The hold side is where no path
// exercises: below the sample for puts, above it for calls.
inline BoundaryFlag frozen_flag(ContractKind kind, CutoffAction action) {
    bool below = exercises_below(kind);
    if (action == CutoffAction::freeze_hold_side)
        return below ? BoundaryFlag::below_sample : BoundaryFlag::above_sample;
    return below ? BoundaryFlag::above_sample : BoundaryFlag::below_sample;
}

// Auxiliary path segments started around the prior threshold at index i.
// They sharpen threshold location where original paths are sparse and are
// never used in price averages.
struct AuxSegments {
    std::vector<double> x;         // start value at index i
    std::vector<double> payoff;    // immediate payoff at index i
    std::vector<double> disc_cont; // continuation under the fixed later boundary,
                                   // discounted one step back to index i
};

inline AuxSegments flashlight_augment(const ProcessParams& params, const TimeGrid& grid,
                                      const ContractSpec& c,
                                      const std::vector<BoundaryEntry>& entries, int i,
                                      double prev_threshold, int n_aux, std::uint64_t seed) {
    params.validate();
    grid.validate();
    if (is_average(c.kind))
        throw std::invalid_argument("flashlight_augment: scalar boundaries only");
    if (n_aux < 1) throw std::invalid_argument("flashlight_augment: n_aux must be >= 1");
    if (!(prev_threshold > 0.0))
        throw std::invalid_argument("flashlight_augment: prior threshold must be > 0");
    if (i < 0 || i >= grid.n_steps)
        throw std::invalid_argument("flashlight_augment: index out of range");

    const int n = grid.n_steps;
    const double ln_b = std::log(prev_threshold);
    const double half_width = 4.0 * params.sigma * std::sqrt(grid.dt(i));
    const double mu = params.r - 0.5 * params.sigma * params.sigma;
    CounterRng rng{seed, rng_stream::flashlight};

    AuxSegments out;
    out.x.resize(static_cast<std::size_t>(n_aux));
    out.payoff.resize(static_cast<std::size_t>(n_aux));
    out.disc_cont.resize(static_cast<std::size_t>(n_aux));

    for (int p = 0; p < n_aux; ++p) {
        double u = rng.uniform(static_cast<std::uint64_t>(p), 0);
        double x0 = std::exp(ln_b + half_width * (2.0 * u - 1.0));
        out.x[static_cast<std::size_t>(p)] = x0;
        out.payoff[static_cast<std::size_t>(p)] = exercise_payoff(c, {x0, x0});

        double lx = std::log(x0);
        double value = 0.0;
        for (int j = i + 1; j <= n; ++j) {
            double dtj = grid.dt(j - 1);
            lx += mu * dtj + params.sigma * std::sqrt(dtj) *
                                 rng.normal(static_cast<std::uint64_t>(p),
                                            static_cast<std::uint64_t>(j));
            double s = std::exp(lx);
            bool ex = j == n ? true : boundary_exercises(entries[static_cast<std::size_t>(j)],
                                                         c.kind, s);
            if (ex) {
                double pay = exercise_payoff(c, {s, s});
                value = pay * std::exp(-params.r *
                                       (grid.times[static_cast<std::size_t>(j)] -
                                        grid.times[static_cast<std::size_t>(i) + 1]));
                break;
            }
        }
        out.disc_cont[static_cast<std::size_t>(p)] =
            std::exp(-params.r * grid.dt(i)) * value;
    }
    return out;
}

// Equal-population partition of one time slice by the bin coordinate.
struct BinPartition {
    std::vector<double> edges;          // n_bins-1 interior edges, ascending
    std::vector<std::uint32_t> order;   // path indices sorted by coordinate
    std::vector<std::size_t> bin_begin; // n_bins+1 offsets into order
};

template <class Coord>
BinPartition make_equal_bins(std::size_t n, int n_bins, Coord&& coord) {
    if (n == 0) throw std::invalid_argument("make_equal_bins: empty sample");
    if (n_bins < 1) throw std::invalid_argument("make_equal_bins: n_bins must be >= 1");
    BinPartition part;
    part.order.resize(n);
    std::iota(part.order.begin(), part.order.end(), 0u);
    std::sort(part.order.begin(), part.order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return coord(a) < coord(b); });
    part.bin_begin.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int k = 0; k <= n_bins; ++k)
        part.bin_begin[static_cast<std::size_t>(k)] =
            n * static_cast<std::size_t>(k) / static_cast<std::size_t>(n_bins);
    part.edges.resize(static_cast<std::size_t>(n_bins) - 1);
    for (int k = 1; k < n_bins; ++k)
        part.edges[static_cast<std::size_t>(k) - 1] =
            coord(part.order[part.bin_begin[static_cast<std::size_t>(k)]]);
    return part;
}

inline void ExerciseBoundary::write_csv(const std::string& path) const {
    validate();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (scalar()) {
        std::fprintf(f, "# index,time,flag,threshold\n");
        for (int i = 0; i <= grid.n_steps; ++i) {
            const BoundaryEntry& e = entries[static_cast<std::size_t>(i)];
            if (e.flag == BoundaryFlag::located)
                std::fprintf(f, "%d,%.17g,%s,%.17g\n", i, grid.times[static_cast<std::size_t>(i)],
                             to_string(e.flag), e.threshold);
            else
                std::fprintf(f, "%d,%.17g,%s,\n", i, grid.times[static_cast<std::size_t>(i)],
                             to_string(e.flag));
        }
    } else {
        std::fprintf(f, "# index,time,bin,lower_edge,upper_edge,flag,threshold,inherited\n");
        for (int i = 0; i <= grid.n_steps; ++i) {
            const double* e = edges_at(i);
            for (int k = 0; k < n_bins; ++k) {
                const BoundaryEntry& be = bin_entry(i, k);
                std::fprintf(f, "%d,%.17g,%d,", i, grid.times[static_cast<std::size_t>(i)], k);
                if (k == 0) std::fprintf(f, ",");
                else std::fprintf(f, "%.17g,", e[k - 1]);
                if (k == n_bins - 1) std::fprintf(f, ",");
                else std::fprintf(f, "%.17g,", e[k]);
                if (be.flag == BoundaryFlag::located)
                    std::fprintf(f, "%s,%.17g,%d\n", to_string(be.flag), be.threshold,
                                 int(bin_inherited[static_cast<std::size_t>(i) * n_bins + k]));
                else
                    std::fprintf(f, "%s,,%d\n", to_string(be.flag),
                                 int(bin_inherited[static_cast<std::size_t>(i) * n_bins + k]));
            }
        }
    }
    if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + path);
}

} // namespace frontier

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boundary.hpp"
#include "contract.hpp"
#include "math.hpp"
#include "parallel.hpp"
#include "path_sample.hpp"
#include "process.hpp"
#include "simulate.hpp"

namespace frontier {

enum class LocateMode { exact_argmax, grid_refine };

inline const char* to_string(LocateMode m) {
    switch (m) {
        case LocateMode::exact_argmax: return "3a";
        case LocateMode::grid_refine: return "3b";
    }
    throw std::logic_error("unreachable");
}

inline LocateMode locate_mode_from_string(const std::string& s) {
    if (s == "3a") return LocateMode::exact_argmax;
    if (s == "3b") return LocateMode::grid_refine;
    throw std::invalid_argument("unknown locate mode '" + s + "' (expected 3a or 3b)");
}

// unbiased: plain Monte Carlo mean. in_sample: the boundary was trained on the
// same paths it is scored on (optimistic). independent: fresh paths scored
// against a fixed boundary (pessimistic). averaged: mean of the last two.
enum class BiasTag { unbiased, in_sample, independent, averaged };

inline const char* to_string(BiasTag b) {
    switch (b) {
        case BiasTag::unbiased: return "unbiased";
        case BiasTag::in_sample: return "in-sample";
        case BiasTag::independent: return "independent";
        case BiasTag::averaged: return "averaged";
    }
    throw std::logic_error("unreachable");
}

struct PriceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double ess = 0.0;
    std::size_t n_paths = 0;
    BiasTag bias = BiasTag::unbiased;
};

inline PriceEstimate price_averaged(const PriceEstimate& a, const PriceEstimate& b) {
    PriceEstimate out;
    out.value = 0.5 * (a.value + b.value);
    out.std_error = 0.5 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    out.ess = a.ess + b.ess;
    out.n_paths = a.n_paths + b.n_paths;
    out.bias = BiasTag::averaged;
    return out;
}

struct PricingOptions {
    LocateMode mode = LocateMode::exact_argmax;
    bool early_cutoff = true;
    bool flashlight = false;
    int n_aux = 1000;      // auxiliary segments per time index when flashlight is on
    int n_bins = 20;       // S-bins for average contracts
    std::size_t min_bin_paths = 10;
    double grid_tol = 1e-6; // grid_refine halt spacing, in policy-coordinate units
    double tilt_lambda = std::numeric_limits<double>::quiet_NaN(); // NaN = automatic
    int n_threads = 1;

    void validate() const {
        if (n_bins < 1) throw std::invalid_argument("PricingOptions: n_bins must be >= 1");
        if (n_aux < 1) throw std::invalid_argument("PricingOptions: n_aux must be >= 1");
        if (!(grid_tol > 0.0)) throw std::invalid_argument("PricingOptions: grid_tol must be > 0");
        if (n_threads < 1) throw std::invalid_argument("PricingOptions: n_threads must be >= 1");
    }
};

// Per-path value of exercising optimally at or after the next time index,
// discounted to that index. crossing is the index where that exercise happens.
struct ContinuationTable {
    std::vector<double> value;
    std::vector<std::uint32_t> crossing;
};

struct AmericanResult {
    PriceEstimate price; // in-sample
    PriceEstimate euro_same_sample; // exercise-at-expiry value on the same draws
    ExerciseBoundary boundary;
    PathSample sample;
};

namespace detail {

// Draws the path sample an American pricing run trains on. Vanilla contracts
// get terminal importance tilting plus conditional backward fill; average
// contracts are simulated forward (their payoff depends on the whole path, so
// a terminal tilt buys little).
inline PathSample draw_training_sample(const ProcessParams& params, const ContractSpec& c,
                                       const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, const PricingOptions& opts) {
    if (is_average(c.kind)) return simulate_forward(params, grid, n_paths, seed, opts.n_threads);
    return simulate_tilted(params, grid, n_paths, c.strike, opts.tilt_lambda, seed,
                           opts.n_threads);
}

// Running-average matrix, path-major like PathSample::values.
inline std::vector<double> running_averages(const PathSample& sample, ContractKind kind,
                                            int n_threads) {
    const std::size_t nt = static_cast<std::size_t>(sample.grid.n_steps) + 1;
    std::vector<double> avg(sample.n_paths * nt);
    parallel_for(sample.n_paths, n_threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* row = sample.values.data() + p * nt;
            double* out = avg.data() + p * nt;
            double a = 0.0;
            for (std::size_t i = 0; i < nt; ++i) {
                a = update_average(kind, a, static_cast<int>(i), row[i]);
                out[i] = a;
            }
        }
    });
    return avg;
}

} // namespace detail

// Backward-induction boundary estimation over a fixed path sample. The
// continuation table starts at expiry and is folded one index at a time;
// partial runs expose the candidate/objective data at the stopping index.
class AmericanPricer {
public:
    AmericanPricer(const ProcessParams& params, const ContractSpec& contract,
                   std::size_t n_paths, std::uint64_t seed, PricingOptions opts = {})
        : params_(params), contract_(contract), opts_(std::move(opts)) {
        params_.validate();
        contract_.validate();
        opts_.validate();
        if (n_paths == 0) throw std::invalid_argument("AmericanPricer: n_paths must be >= 1");
        grid_ = TimeGrid::uniform(contract_.expiry, contract_.n_steps);
        sample_ = detail::draw_training_sample(params_, contract_, grid_, n_paths, seed, opts_);
        init();
    }

    AmericanPricer(PathSample sample, const ContractSpec& contract, PricingOptions opts = {})
        : params_(sample.params), contract_(contract), opts_(std::move(opts)),
          sample_(std::move(sample)) {
        contract_.validate();
        opts_.validate();
        sample_.validate();
        if (sample_.grid.n_steps != contract_.n_steps ||
            sample_.grid.expiry != contract_.expiry)
            throw std::invalid_argument("AmericanPricer: sample grid does not match contract");
        grid_ = sample_.grid;
        init();
    }

    const PathSample& sample() const { return sample_; }
    const ExerciseBoundary& boundary() const { return boundary_; }
    int next_index() const { return next_; }

    // Folds indices n-1, n-2, ... down to stop+1, leaving index `stop` pending.
    void run_to(int stop) {
        if (stop < 0 || stop > next_)
            throw std::invalid_argument("AmericanPricer: bad stop index");
        while (next_ > stop) {
            step(next_);
            --next_;
        }
    }

    // Candidate data at the pending index: coordinate, immediate payoff,
    // one-step-discounted continuation, weight. Scalar contracts only for the
    // flashlight augmentation.
    LocatePoints points_at(int i, bool with_aux = true) const {
        if (i != next_ || i < 1)
            throw std::invalid_argument("AmericanPricer: index is not pending");
        LocatePoints pts = base_points(i);
        if (with_aux && opts_.flashlight && !is_average(contract_.kind)) {
            AuxSegments aux =
                flashlight_augment(params_, grid_, contract_, boundary_.entries, i,
                                   prev_located_, opts_.n_aux, sample_.seed);
            for (std::size_t a = 0; a < aux.x.size(); ++a)
                pts.push(aux.x[a], aux.payoff[a], aux.disc_cont[a], 1.0);
        }
        return pts;
    }

    LocateResult locate_at(int i, LocateMode mode) const {
        LocatePoints pts = points_at(i);
        bool below = exercises_below(contract_.kind);
        if (mode == LocateMode::exact_argmax)
            return locate_mode_a(pts, below, contract_.strike);
        return locate_mode_b(pts, below, contract_.strike, opts_.grid_tol);
    }

    // Runs the induction to completion, decides index 0, and packages the
    // in-sample estimate. Call once.
    AmericanResult finish() {
        if (finished_) throw std::logic_error("AmericanPricer: finish called twice");
        run_to(0);
        decide_index_zero();
        AmericanResult out;
        out.price = estimate_from_table();
        out.euro_same_sample = euro_estimate();
        out.boundary = std::move(boundary_);
        out.sample = std::move(sample_);
        finished_ = true;
        return out;
    }

private:
    ProcessParams params_;
    ContractSpec contract_;
    PricingOptions opts_;
    TimeGrid grid_;
    PathSample sample_;
    std::vector<double> avg_; // running averages, only for average contracts
    std::vector<double> disc_; // per-step discount factors
    ContinuationTable table_;
    ExerciseBoundary boundary_;
    int next_ = 0;
    double prev_located_ = 0.0; // most recent located threshold, flashlight anchor
    CutoffAction frozen_ = CutoffAction::none;
    bool finished_ = false;

    std::size_t nt() const { return static_cast<std::size_t>(grid_.n_steps) + 1; }

    double coord(std::size_t p, int i) const {
        if (is_average(contract_.kind)) return avg_[p * nt() + static_cast<std::size_t>(i)];
        return sample_.at(p, i);
    }

    AugmentedState state(std::size_t p, int i) const {
        double s = sample_.at(p, i);
        return {s, is_average(contract_.kind) ? avg_[p * nt() + static_cast<std::size_t>(i)] : s};
    }

    void init() {
        if (is_average(contract_.kind))
            avg_ = detail::running_averages(sample_, contract_.kind, opts_.n_threads);
        disc_.resize(static_cast<std::size_t>(grid_.n_steps));
        for (int i = 0; i < grid_.n_steps; ++i)
            disc_[static_cast<std::size_t>(i)] = discount_factor(params_.r, grid_.dt(i));

        boundary_.kind = contract_.kind;
        boundary_.grid = grid_;
        const int n = grid_.n_steps;
        if (is_average(contract_.kind)) {
            boundary_.n_bins = opts_.n_bins;
            boundary_.bin_edges.assign(nt() * static_cast<std::size_t>(opts_.n_bins - 1), 0.0);
            boundary_.bin_entries.assign(nt() * static_cast<std::size_t>(opts_.n_bins),
                                         BoundaryEntry{});
            boundary_.bin_inherited.assign(boundary_.bin_entries.size(), 0);
            // Expiry rule is intrinsic > 0 in every bin, but store the real
            // partition so the written table describes the sample.
            BinPartition part = make_equal_bins(
                sample_.n_paths, opts_.n_bins,
                [&](std::uint32_t p) { return sample_.at(p, n); });
            std::copy(part.edges.begin(), part.edges.end(),
                      boundary_.bin_edges.data() +
                          static_cast<std::size_t>(n) * (opts_.n_bins - 1));
            for (int k = 0; k < opts_.n_bins; ++k)
                boundary_.bin_entry(n, k) = {contract_.strike, BoundaryFlag::located};
        } else {
            boundary_.entries.assign(nt(), BoundaryEntry{});
            boundary_.entries[static_cast<std::size_t>(n)] = {contract_.strike,
                                                              BoundaryFlag::located};
        }
        prev_located_ = contract_.strike;

        table_.value.resize(sample_.n_paths);
        table_.crossing.assign(sample_.n_paths, static_cast<std::uint32_t>(n));
        parallel_for(sample_.n_paths, opts_.n_threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p)
                table_.value[p] = exercise_payoff(contract_, state(p, n));
        });
        next_ = n - 1;
    }

    LocatePoints base_points(int i) const {
        LocatePoints pts;
        const std::size_t n = sample_.n_paths;
        pts.x.resize(n);
        pts.g.resize(n);
        pts.h.resize(n);
        pts.w.resize(n);
        const double d = disc_[static_cast<std::size_t>(i)];
        for (std::size_t p = 0; p < n; ++p) {
            pts.x[p] = coord(p, i);
            pts.g[p] = exercise_payoff(contract_, state(p, i));
            pts.h[p] = d * table_.value[p];
            pts.w[p] = sample_.weights[p];
        }
        return pts;
    }

    void set_bin_row(int i, const BoundaryEntry& e) {
        // Degenerate slice (index 0): every path sits at s0, every bin shares
        // one rule and one edge value.
        for (int k = 0; k + 1 < boundary_.n_bins; ++k)
            boundary_.bin_edges[static_cast<std::size_t>(i) * (boundary_.n_bins - 1) + k] =
                sample_.at(0, i);
        for (int k = 0; k < boundary_.n_bins; ++k)
            boundary_.bin_entry(i, k) = e;
    }

    void apply_policy(int i) {
        const double d = disc_[static_cast<std::size_t>(i)];
        parallel_for(sample_.n_paths, opts_.n_threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                if (boundary_.exercises(i, state(p, i))) {
                    table_.value[p] = exercise_payoff(contract_, state(p, i));
                    table_.crossing[p] = static_cast<std::uint32_t>(i);
                } else {
                    table_.value[p] *= d;
                }
            }
        });
    }

    void step(int i) {
        if (is_average(contract_.kind)) {
            step_binned(i);
            return;
        }
        if (frozen_ != CutoffAction::none) {
            boundary_.entries[static_cast<std::size_t>(i)] = {
                std::numeric_limits<double>::quiet_NaN(), frozen_flag(contract_.kind, frozen_)};
            apply_policy(i);
            return;
        }
        LocatePoints pts = points_at(i);
        bool below = exercises_below(contract_.kind);
        LocateResult res = opts_.mode == LocateMode::exact_argmax
                               ? locate_mode_a(pts, below, contract_.strike)
                               : locate_mode_b(pts, below, contract_.strike, opts_.grid_tol);
        CutoffAction action = CutoffAction::none;
        if (opts_.early_cutoff && !res.degenerate) action = early_cutoff_check(res);
        if (action != CutoffAction::none) {
            frozen_ = action;
            boundary_.entries[static_cast<std::size_t>(i)] = {
                std::numeric_limits<double>::quiet_NaN(), frozen_flag(contract_.kind, action)};
        } else {
            boundary_.entries[static_cast<std::size_t>(i)] = {res.threshold,
                                                              BoundaryFlag::located};
            prev_located_ = res.threshold;
        }
        apply_policy(i);
    }

    void step_binned(int i) {
        const std::size_t n = sample_.n_paths;
        const int K = boundary_.n_bins;
        BinPartition part = make_equal_bins(
            n, K, [&](std::uint32_t p) { return sample_.at(p, i); });
        double* edges =
            boundary_.bin_edges.data() + static_cast<std::size_t>(i) * (K - 1);
        std::copy(part.edges.begin(), part.edges.end(), edges);

        const double d = disc_[static_cast<std::size_t>(i)];
        bool below = exercises_below(contract_.kind);
        std::vector<char> starved(static_cast<std::size_t>(K), 0);
        bool any_located = false;
        for (int k = 0; k < K; ++k) {
            std::size_t b = part.bin_begin[static_cast<std::size_t>(k)];
            std::size_t e = part.bin_begin[static_cast<std::size_t>(k) + 1];
            if (e - b < opts_.min_bin_paths) {
                starved[static_cast<std::size_t>(k)] = 1;
                continue;
            }
            LocatePoints pts;
            for (std::size_t j = b; j < e; ++j) {
                std::uint32_t p = part.order[j];
                pts.push(coord(p, i), exercise_payoff(contract_, state(p, i)),
                         d * table_.value[p], sample_.weights[p]);
            }
            LocateResult res = locate_mode_b(pts, below, contract_.strike, opts_.grid_tol);
            boundary_.bin_entry(i, k) = {res.threshold, BoundaryFlag::located};
            any_located = true;
        }
        if (!any_located) {
            // every bin starved: locate once over the whole slice
            LocatePoints pts;
            for (std::size_t p = 0; p < n; ++p)
                pts.push(coord(p, i), exercise_payoff(contract_, state(p, i)),
                         d * table_.value[p], sample_.weights[p]);
            LocateResult res = locate_mode_b(pts, below, contract_.strike, opts_.grid_tol);
            for (int k = 0; k < K; ++k)
                boundary_.bin_entry(i, k) = {res.threshold, BoundaryFlag::located};
        } else {
            for (int k = 0; k < K; ++k) {
                if (!starved[static_cast<std::size_t>(k)]) continue;
                int src = -1;
                for (int dk = 1; dk < K && src < 0; ++dk) {
                    if (k - dk >= 0 && !starved[static_cast<std::size_t>(k - dk)]) src = k - dk;
                    else if (k + dk < K && !starved[static_cast<std::size_t>(k + dk)])
                        src = k + dk;
                }
                boundary_.bin_entry(i, k) = boundary_.bin_entry(i, src);
                boundary_.bin_inherited[static_cast<std::size_t>(i) * K + k] = 1;
            }
        }
        apply_policy(i);
    }

    void decide_index_zero() {
        const double d = disc_[0];
        double g0 = exercise_payoff(contract_, state(0, 0));
        WeightedMoments cont = weighted_moments(
            sample_.n_paths, [&](std::size_t p) { return d * table_.value[p]; },
            [&](std::size_t p) { return sample_.weights[p]; });
        CutoffAction side =
            g0 > cont.mean ? CutoffAction::freeze_exercise_side : CutoffAction::freeze_hold_side;
        BoundaryEntry e{std::numeric_limits<double>::quiet_NaN(),
                        frozen_flag(contract_.kind, side)};
        if (is_average(contract_.kind)) set_bin_row(0, e);
        else boundary_.entries[0] = e;
        apply_policy(0);
    }

    PriceEstimate estimate_from_table() const {
        WeightedMoments m = weighted_moments(
            sample_.n_paths, [&](std::size_t p) { return table_.value[p]; },
            [&](std::size_t p) { return sample_.weights[p]; });
        return {m.mean, m.std_error, m.ess, sample_.n_paths, BiasTag::in_sample};
    }

    PriceEstimate euro_estimate() const {
        const int n = grid_.n_steps;
        const double df = discount_factor(params_.r, grid_.expiry);
        WeightedMoments m = weighted_moments(
            sample_.n_paths,
            [&](std::size_t p) { return df * exercise_payoff(contract_, state(p, n)); },
            [&](std::size_t p) { return sample_.weights[p]; });
        return {m.mean, m.std_error, m.ess, sample_.n_paths, BiasTag::unbiased};
    }
};

inline AmericanResult price_american(const ProcessParams& params, const ContractSpec& contract,
                                     std::size_t n_paths, std::uint64_t seed,
                                     const PricingOptions& opts = {}) {
    AmericanPricer pricer(params, contract, n_paths, seed, opts);
    return pricer.finish();
}

// Plain forward Monte Carlo for the European (exercise at expiry) value.
inline PriceEstimate price_european(const ProcessParams& params, const ContractSpec& contract,
                                    std::size_t n_paths, std::uint64_t seed,
                                    const PricingOptions& opts = {}) {
    params.validate();
    contract.validate();
    opts.validate();
    TimeGrid grid = TimeGrid::uniform(contract.expiry, contract.n_steps);
    PathSample sample = simulate_forward(params, grid, n_paths, seed, opts.n_threads);
    const std::size_t nt = static_cast<std::size_t>(grid.n_steps) + 1;
    const double df = discount_factor(params.r, grid.expiry);
    const bool avg = is_average(contract.kind);
    std::vector<double> vals(sample.n_paths);
    parallel_for(sample.n_paths, opts.n_threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* row = sample.values.data() + p * nt;
            double a = row[nt - 1];
            if (avg) {
                a = 0.0;
                for (std::size_t i = 0; i < nt; ++i)
                    a = update_average(contract.kind, a, static_cast<int>(i), row[i]);
            }
            vals[p] = df * exercise_payoff(contract, {row[nt - 1], a});
        }
    });
    WeightedMoments m = weighted_moments(vals, sample.weights);
    return {m.mean, m.std_error, m.ess, sample.n_paths, BiasTag::unbiased};
}

// Scores a fixed boundary on freshly drawn paths: each path exercises at its
// first index on the exercise side, else pays the expiry intrinsic.
inline PriceEstimate reprice_independent(const ProcessParams& params,
                                         const ContractSpec& contract,
                                         const ExerciseBoundary& boundary, std::size_t n_paths,
                                         std::uint64_t seed, const PricingOptions& opts = {}) {
    params.validate();
    contract.validate();
    opts.validate();
    boundary.validate();
    if (boundary.kind != contract.kind)
        throw std::invalid_argument("reprice_independent: boundary kind does not match contract");
    TimeGrid grid = TimeGrid::uniform(contract.expiry, contract.n_steps);
    if (boundary.grid.n_steps != grid.n_steps || boundary.grid.expiry != grid.expiry)
        throw std::invalid_argument("reprice_independent: boundary grid does not match contract");
    PathSample sample =
        detail::draw_training_sample(params, contract, grid, n_paths, seed, opts);

    const std::size_t nt = static_cast<std::size_t>(grid.n_steps) + 1;
    const bool avg = is_average(contract.kind);
    std::vector<double> vals(sample.n_paths);
    parallel_for(sample.n_paths, opts.n_threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* row = sample.values.data() + p * nt;
            double a = 0.0;
            double v = 0.0;
            for (std::size_t i = 0; i < nt; ++i) {
                if (avg) a = update_average(contract.kind, a, static_cast<int>(i), row[i]);
                AugmentedState st{row[i], avg ? a : row[i]};
                if (boundary.exercises(static_cast<int>(i), st)) {
                    v = discount_factor(params.r, grid.times[i]) *
                        exercise_payoff(contract, st);
                    break;
                }
                if (i == nt - 1)
                    v = discount_factor(params.r, grid.expiry) *
                        exercise_payoff(contract, st);
            }
            vals[p] = v;
        }
    });
    WeightedMoments m = weighted_moments(vals, sample.weights);
    return {m.mean, m.std_error, m.ess, sample.n_paths, BiasTag::independent};
}

} // namespace frontier

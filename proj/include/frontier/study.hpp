#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundary.hpp"
#include "contract.hpp"
#include "lattice.hpp"
#include "pricer.hpp"
#include "process.hpp"
#include "rng.hpp"

namespace frontier {

struct OptionDraw {
    ProcessParams params;
    ContractSpec contract;
};

// Random option batch: (r, sigma, s0, X, T) from independent normals with
// means (0.10, 0.40, 100, 100, 0.50) and SDs (0.05, 0.20, 50, 50, 0.25).
// Nonpositive draws are rejected and replaced. The strike must land within
// k*sigma*sqrt(T) of the forward in log terms, |ln X - ln s0 - r T|, with
// k = 2 for contracts on the current value and k = 1 for average contracts
// (their effective volatility is roughly halved, so the window tightens).
inline std::vector<OptionDraw> sample_random_options(int n, std::uint64_t seed,
                                                     ContractKind kind,
                                                     ExerciseStyle style,
                                                     int n_steps = 100) {
    if (n < 1) throw std::invalid_argument("sample_random_options: n must be >= 1");
    CounterRng rng{seed, 1000};
    const double k_window = is_average(kind) ? 1.0 : 2.0;
    std::vector<OptionDraw> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint64_t ctr = 0;
        auto positive_normal = [&](double mean, double sd) {
            for (int tries = 0; tries < 10000000; ++tries) {
                double v = mean + sd * rng.normal(static_cast<std::uint64_t>(i), ctr++);
                if (v > 0.0) return v;
            }
            throw std::runtime_error("sample_random_options: rejection stalled");
        };
        double r = positive_normal(0.10, 0.05);
        double sigma = positive_normal(0.40, 0.20);
        double s0 = positive_normal(100.0, 50.0);
        double expiry = positive_normal(0.50, 0.25);
        double center = std::log(s0) + r * expiry;
        double half = k_window * sigma * std::sqrt(expiry);
        double strike = 0.0;
        for (int tries = 0;; ++tries) {
            if (tries >= 10000000)
                throw std::runtime_error("sample_random_options: strike window stalled");
            strike = 100.0 + 50.0 * rng.normal(static_cast<std::uint64_t>(i), ctr++);
            if (strike > 0.0 && std::fabs(std::log(strike) - center) <= half) break;
        }
        out.push_back({ProcessParams{r, sigma, s0},
                       ContractSpec{kind, strike, expiry, style, n_steps}});
    }
    return out;
}

struct StudyConfig {
    ContractKind kind = ContractKind::vanilla_put;
    int n_options = 100;
    std::size_t n_paths = 100000;
    int n_steps = 100;
    LocateMode mode = LocateMode::exact_argmax;
    std::uint64_t master_seed = 1;
    bool flashlight = false;
    int n_bins = 20;
    int n_threads = 1;

    void validate() const {
        if (n_options < 1) throw std::invalid_argument("StudyConfig: n_options must be >= 1");
        if (n_paths < 2) throw std::invalid_argument("StudyConfig: n_paths must be >= 2");
        if (n_steps < 1) throw std::invalid_argument("StudyConfig: n_steps must be >= 1");
    }

    PricingOptions pricing() const {
        PricingOptions opts;
        opts.mode = mode;
        opts.flashlight = flashlight;
        opts.n_bins = n_bins;
        opts.n_threads = n_threads;
        return opts;
    }
};

// Strict field set; unknown or missing required fields are rejected by name.
inline StudyConfig study_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("study config: expected a JSON object");
    static const char* known[] = {"kind",        "n_options", "n_paths", "n_steps", "mode",
                                  "master_seed", "flashlight", "n_bins",  "threads"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* f : known) ok = ok || it.key() == f;
        if (!ok) throw std::invalid_argument("study config: unknown field '" + it.key() + "'");
    }
    for (const char* f : {"kind", "n_options", "master_seed"})
        if (!j.contains(f))
            throw std::invalid_argument(std::string("study config: missing field '") + f + "'");
    StudyConfig c;
    if (!j["kind"].is_string()) throw std::invalid_argument("study config: 'kind' must be a string");
    c.kind = kind_from_string(j["kind"].get<std::string>());
    if (!j["n_options"].is_number_integer())
        throw std::invalid_argument("study config: 'n_options' must be an integer");
    c.n_options = j["n_options"].get<int>();
    if (j.contains("n_paths")) c.n_paths = j["n_paths"].get<std::size_t>();
    if (j.contains("n_steps")) c.n_steps = j["n_steps"].get<int>();
    if (j.contains("mode")) c.mode = locate_mode_from_string(j["mode"].get<std::string>());
    if (!j["master_seed"].is_number_unsigned() && !j["master_seed"].is_number_integer())
        throw std::invalid_argument("study config: 'master_seed' must be an integer");
    c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("flashlight")) c.flashlight = j["flashlight"].get<bool>();
    if (j.contains("n_bins")) c.n_bins = j["n_bins"].get<int>();
    if (j.contains("threads")) c.n_threads = j["threads"].get<int>();
    c.validate();
    return c;
}

inline nlohmann::json study_config_to_json(const StudyConfig& c) {
    return nlohmann::json{{"kind", to_string(c.kind)},
                          {"n_options", c.n_options},
                          {"n_paths", c.n_paths},
                          {"n_steps", c.n_steps},
                          {"mode", to_string(c.mode)},
                          {"master_seed", c.master_seed},
                          {"flashlight", c.flashlight},
                          {"n_bins", c.n_bins},
                          {"threads", c.n_threads}};
}

// American arithmetic-average price approximated from its geometric sibling:
// the tree prices the geometric contract under both styles, Monte Carlo
// supplies the European arithmetic value, and the early-exercise premium
// carries over: A_am ~ A_gm_tree - E_gm_tree + E_am_mc.
inline double approx_arith_price(double a_gm_bt, double e_gm_bt, double e_am_mc) {
    return a_gm_bt - e_gm_bt + e_am_mc;
}

struct ErrorRecord {
    int index = 0;
    OptionDraw draw;
    std::uint64_t seed_in = 0, seed_ind = 0;
    PriceEstimate in_sample, independent, averaged, european_mc;
    bool has_european = false;
    double oracle = std::numeric_limits<double>::quiet_NaN();
    double oracle_european = std::numeric_limits<double>::quiet_NaN();
    // arithmetic-average approximation inputs (NaN elsewhere)
    double a_gm_tree = std::numeric_limits<double>::quiet_NaN();
    double e_gm_tree = std::numeric_limits<double>::quiet_NaN();
    double e_am_mc = std::numeric_limits<double>::quiet_NaN();
    // relative errors x = (V_mc - V_oracle)/V_oracle, NaN when not computable
    double x_in = std::numeric_limits<double>::quiet_NaN();
    double x_ind = std::numeric_limits<double>::quiet_NaN();
    double x_avg = std::numeric_limits<double>::quiet_NaN();
    double x_eu = std::numeric_limits<double>::quiet_NaN();
    bool excluded = false;
    std::string reason;
};

inline nlohmann::json error_record_to_json(const ErrorRecord& rec) {
    auto est = [](const PriceEstimate& e) {
        return nlohmann::json{{"value", e.value},
                              {"std_error", e.std_error},
                              {"ess", e.ess},
                              {"n_paths", e.n_paths},
                              {"bias", to_string(e.bias)}};
    };
    auto opt = [](double v) {
        return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
    };
    nlohmann::json j{{"index", rec.index},
                     {"r", rec.draw.params.r},
                     {"sigma", rec.draw.params.sigma},
                     {"s0", rec.draw.params.s0},
                     {"kind", to_string(rec.draw.contract.kind)},
                     {"strike", rec.draw.contract.strike},
                     {"expiry", rec.draw.contract.expiry},
                     {"n_steps", rec.draw.contract.n_steps},
                     {"seed_in", rec.seed_in},
                     {"seed_ind", rec.seed_ind},
                     {"excluded", rec.excluded},
                     {"reason", rec.reason}};
    if (!rec.excluded) {
        j["in_sample"] = est(rec.in_sample);
        j["independent"] = est(rec.independent);
        j["averaged"] = est(rec.averaged);
        if (rec.has_european) j["european_mc"] = est(rec.european_mc);
        j["oracle"] = opt(rec.oracle);
        j["oracle_european"] = opt(rec.oracle_european);
        j["rel_err"] = nlohmann::json{{"in_sample", opt(rec.x_in)},
                                      {"independent", opt(rec.x_ind)},
                                      {"averaged", opt(rec.x_avg)},
                                      {"european", opt(rec.x_eu)}};
        if (!std::isnan(rec.a_gm_tree))
            j["formula"] = nlohmann::json{{"a_gm_tree", rec.a_gm_tree},
                                          {"e_gm_tree", rec.e_gm_tree},
                                          {"e_am_mc", rec.e_am_mc},
                                          {"value", rec.oracle}};
    }
    return j;
}

// Fixed-width relative-error histogram over [-5%, +5%] plus open-ended
// overflow rows at either end.
struct Histogram {
    double lo = -0.05, hi = 0.05, width = 0.0025;
    std::vector<std::size_t> counts = std::vector<std::size_t>(40, 0);
    std::size_t under = 0, over = 0, total = 0;

    void add(double x) {
        if (std::isnan(x)) return;
        ++total;
        if (x < lo) {
            ++under;
        } else if (x >= hi) {
            ++over;
        } else {
            auto idx = static_cast<std::size_t>((x - lo) / width);
            idx = std::min(idx, counts.size() - 1);
            ++counts[idx];
        }
    }

    // Columns in percent; density integrates to 1 over the covered range.
    void write_csv(const std::string& path) const {
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
        std::fprintf(f, "# bin_center_pct,count,density_per_pct\n");
        const double wpct = width * 100.0;
        auto density = [&](std::size_t cnt) {
            return total == 0 ? 0.0 : static_cast<double>(cnt) /
                                          (static_cast<double>(total) * wpct);
        };
        std::fprintf(f, "%.17g,%zu,%.17g\n", (lo * 100.0) - 0.5 * wpct, under, density(under));
        for (std::size_t b = 0; b < counts.size(); ++b) {
            double center = (lo + (static_cast<double>(b) + 0.5) * width) * 100.0;
            std::fprintf(f, "%.17g,%zu,%.17g\n", center, counts[b], density(counts[b]));
        }
        std::fprintf(f, "%.17g,%zu,%.17g\n", (hi * 100.0) + 0.5 * wpct, over, density(over));
        if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + path);
    }
};

struct TagStats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
};

inline TagStats tag_stats(const std::vector<ErrorRecord>& records, double ErrorRecord::*field) {
    TagStats st;
    double sum = 0.0;
    for (const ErrorRecord& r : records) {
        double v = r.*field;
        if (r.excluded || std::isnan(v)) continue;
        sum += v;
        ++st.n;
    }
    if (st.n == 0) return st;
    st.mean = sum / static_cast<double>(st.n);
    double ss = 0.0;
    for (const ErrorRecord& r : records) {
        double v = r.*field;
        if (r.excluded || std::isnan(v)) continue;
        ss += (v - st.mean) * (v - st.mean);
    }
    st.sd = std::sqrt(ss / static_cast<double>(st.n));
    return st;
}

struct StudyResult {
    StudyConfig config;
    std::vector<ErrorRecord> records;
    int excluded = 0;

    TagStats stats_in() const { return tag_stats(records, &ErrorRecord::x_in); }
    TagStats stats_ind() const { return tag_stats(records, &ErrorRecord::x_ind); }
    TagStats stats_avg() const { return tag_stats(records, &ErrorRecord::x_avg); }
    TagStats stats_eu() const { return tag_stats(records, &ErrorRecord::x_eu); }
};

namespace detail {

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open for hashing: " + path);
    std::uint64_t h = 1469598103934665603ull;
    unsigned char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0)
        for (std::size_t i = 0; i < got; ++i) {
            h ^= buf[i];
            h *= 1099511628211ull;
        }
    std::fclose(f);
    return h;
}

} // namespace detail

// Prices one drawn option end to end and fills the record. Exercises the
// whole pipeline: in-sample run, independent repricing, averaging, matching
// oracle, European counterpart, relative errors with a near-worthless-option
// guard at 1e-4 * s0.
inline ErrorRecord run_study_option(const StudyConfig& cfg, int index, const OptionDraw& draw) {
    ErrorRecord rec;
    rec.index = index;
    rec.draw = draw;
    rec.seed_in = mix64(cfg.master_seed ^ static_cast<std::uint64_t>(2 * index));
    rec.seed_ind = mix64(cfg.master_seed ^ static_cast<std::uint64_t>(2 * index + 1));
    try {
        PricingOptions opts = cfg.pricing();
        AmericanResult am =
            price_american(draw.params, draw.contract, cfg.n_paths, rec.seed_in, opts);
        rec.in_sample = am.price;
        rec.independent = reprice_independent(draw.params, draw.contract, am.boundary,
                                              cfg.n_paths, rec.seed_ind, opts);
        rec.averaged = price_averaged(rec.in_sample, rec.independent);

        const double guard = 1e-4 * draw.params.s0;
        if (draw.contract.kind == ContractKind::arith_avg_put) {
            ContractSpec geo = draw.contract;
            geo.kind = ContractKind::geo_avg_put;
            rec.a_gm_tree = geo_avg_tree(draw.params, geo).price;
            ContractSpec geo_eu = geo;
            geo_eu.style = ExerciseStyle::european;
            rec.e_gm_tree = geo_avg_tree(draw.params, geo_eu).price;
            rec.e_am_mc = am.euro_same_sample.value;
            rec.oracle = approx_arith_price(rec.a_gm_tree, rec.e_gm_tree, rec.e_am_mc);
        } else if (draw.contract.kind == ContractKind::geo_avg_put) {
            rec.oracle = geo_avg_tree(draw.params, draw.contract).price;
            TimeGrid grid = TimeGrid::uniform(draw.contract.expiry, draw.contract.n_steps);
            rec.oracle_european = geo_closed_form(draw.params, draw.contract.strike, grid);
        } else {
            rec.oracle = crr_price(draw.params, draw.contract).price;
            rec.oracle_european = black_scholes(draw.params, draw.contract.strike,
                                                draw.contract.expiry,
                                                exercises_below(draw.contract.kind));
        }

        if (std::fabs(rec.oracle) < guard) {
            rec.excluded = true;
            rec.reason = "oracle price below 1e-4 * s0";
            return rec;
        }
        rec.x_in = (rec.in_sample.value - rec.oracle) / rec.oracle;
        rec.x_ind = (rec.independent.value - rec.oracle) / rec.oracle;
        rec.x_avg = (rec.averaged.value - rec.oracle) / rec.oracle;

        if (draw.contract.kind != ContractKind::arith_avg_put) {
            ContractSpec eu = draw.contract;
            eu.style = ExerciseStyle::european;
            rec.european_mc =
                price_european(draw.params, eu, cfg.n_paths, rec.seed_in, cfg.pricing());
            rec.has_european = true;
            if (std::fabs(rec.oracle_european) >= guard)
                rec.x_eu = (rec.european_mc.value - rec.oracle_european) / rec.oracle_european;
        }
    } catch (const std::exception& e) {
        rec.excluded = true;
        rec.reason = e.what();
    }
    return rec;
}

// Full error study. When out_dir is nonempty, writes records.jsonl, one
// histogram CSV per estimate population, and manifest.json with content
// hashes; reruns with the same config are byte-identical.
inline StudyResult run_error_study(const StudyConfig& cfg, const std::string& out_dir = "") {
    cfg.validate();
    StudyResult result;
    result.config = cfg;
    ExerciseStyle style = ExerciseStyle::american;
    std::vector<OptionDraw> draws =
        sample_random_options(cfg.n_options, cfg.master_seed, cfg.kind, style, cfg.n_steps);
    for (int i = 0; i < cfg.n_options; ++i) {
        result.records.push_back(run_study_option(cfg, i, draws[static_cast<std::size_t>(i)]));
        if (result.records.back().excluded) ++result.excluded;
    }

    if (!out_dir.empty()) {
        std::string records_path = out_dir + "/records.jsonl";
        std::FILE* f = std::fopen(records_path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open for writing: " + records_path);
        for (const ErrorRecord& rec : result.records) {
            std::string line = error_record_to_json(rec).dump();
            std::fprintf(f, "%s\n", line.c_str());
        }
        if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + records_path);

        struct Pop {
            const char* name;
            double ErrorRecord::*field;
        };
        std::vector<Pop> pops = {{"in_sample", &ErrorRecord::x_in},
                                 {"independent", &ErrorRecord::x_ind},
                                 {"averaged", &ErrorRecord::x_avg}};
        if (cfg.kind != ContractKind::arith_avg_put)
            pops.push_back({"european", &ErrorRecord::x_eu});
        std::vector<std::string> hist_files;
        for (const Pop& pop : pops) {
            Histogram h;
            for (const ErrorRecord& rec : result.records)
                if (!rec.excluded) h.add(rec.*(pop.field));
            std::string path = out_dir + "/hist_" + pop.name + ".csv";
            h.write_csv(path);
            hist_files.push_back(path);
        }

        nlohmann::json manifest;
        manifest["config"] = study_config_to_json(cfg);
        std::string cfg_dump = manifest["config"].dump();
        char hex[32];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(
                          detail::fnv1a64(cfg_dump.data(), cfg_dump.size())));
        manifest["config_fnv1a64"] = std::string(hex);
        manifest["excluded"] = result.excluded;
        manifest["path_sample_format_version"] = path_sample_format_version;
        nlohmann::json seeds = nlohmann::json::array();
        for (const ErrorRecord& rec : result.records)
            seeds.push_back(nlohmann::json::array({rec.seed_in, rec.seed_ind}));
        manifest["option_seeds"] = seeds;
        nlohmann::json files = nlohmann::json::array();
        auto add_file = [&](const std::string& path) {
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(detail::fnv1a64_file(path)));
            files.push_back(nlohmann::json{{"file", path.substr(out_dir.size() + 1)},
                                           {"fnv1a64", std::string(hex)}});
        };
        add_file(records_path);
        for (const std::string& p : hist_files) add_file(p);
        manifest["files"] = files;
        std::string manifest_path = out_dir + "/manifest.json";
        std::FILE* mf = std::fopen(manifest_path.c_str(), "w");
        if (!mf) throw std::runtime_error("cannot open for writing: " + manifest_path);
        std::string body = manifest.dump(2);
        std::fprintf(mf, "%s\n", body.c_str());
        if (std::fclose(mf) != 0) throw std::runtime_error("close failed: " + manifest_path);
    }
    return result;
}

// Textbook demo configuration: at-the-money 5-month put on a volatile name,
// 50 exercise dates. Small enough to iterate on, large enough that the
// boundary has visible structure.
inline ProcessParams demo_params() { return {0.10, 0.40, 50.0}; }

inline ContractSpec demo_contract() {
    return {ContractKind::vanilla_put, 50.0, 5.0 / 12.0, ExerciseStyle::american, 50};
}

struct SweepCurve {
    std::size_t n_paths = 0;
    ObjectiveCurve curve;
    double argmax = std::numeric_limits<double>::quiet_NaN(); // best sampled candidate
    double located = std::numeric_limits<double>::quiet_NaN(); // exact-argmax threshold
};

struct SweepResult {
    int index = 45;
    double tree_boundary = std::numeric_limits<double>::quiet_NaN();
    std::vector<SweepCurve> curves;
};

// Objective profile at one backward-induction step of the demo put, for a
// ladder of sample sizes. 100 candidates span the sampled range with one
// spacing of overhang at the top, so the two tails realize the all-hold and
// all-exercise policies. Emits one CSV per sample size when out_dir is set.
inline SweepResult objective_sweep(std::uint64_t master_seed,
                                   const std::vector<std::size_t>& path_counts,
                                   const std::string& out_dir = "", int index = 45,
                                   const PricingOptions& base_opts = {}) {
    ProcessParams params = demo_params();
    ContractSpec contract = demo_contract();
    if (index < 1 || index >= contract.n_steps)
        throw std::invalid_argument("objective_sweep: index out of range");
    SweepResult result;
    result.index = index;
    result.tree_boundary =
        crr_price(params, contract).boundary[static_cast<std::size_t>(index)];

    for (std::size_t n_paths : path_counts) {
        AmericanPricer pricer(params, contract, n_paths, master_seed, base_opts);
        pricer.run_to(index);
        LocatePoints pts = pricer.points_at(index);
        const auto [lo_it, hi_it] = std::minmax_element(pts.x.begin(), pts.x.end());
        double lo = *lo_it, hi = *hi_it;
        double spacing = (hi - lo) / 98.0;
        std::vector<double> candidates(100);
        for (int k = 0; k < 100; ++k) candidates[static_cast<std::size_t>(k)] = lo + spacing * k;
        SweepCurve sc;
        sc.n_paths = n_paths;
        sc.curve = objective_curve(pts, exercises_below(contract.kind), candidates, index);
        std::size_t best = 0;
        for (std::size_t k = 1; k < sc.curve.values.size(); ++k)
            if (sc.curve.values[k] > sc.curve.values[best]) best = k;
        sc.argmax = sc.curve.candidates[best];
        sc.located = pricer.locate_at(index, LocateMode::exact_argmax).threshold;
        if (!out_dir.empty()) {
            std::string path = out_dir + "/objective_n" + std::to_string(n_paths) + ".csv";
            std::FILE* f = std::fopen(path.c_str(), "w");
            if (!f) throw std::runtime_error("cannot open for writing: " + path);
            std::fprintf(f, "# objective sweep at time index %d, %zu paths\n", index, n_paths);
            std::fprintf(f, "# tree_boundary,%.17g\n", result.tree_boundary);
            std::fprintf(f, "# candidate,objective\n");
            for (std::size_t k = 0; k < sc.curve.candidates.size(); ++k)
                std::fprintf(f, "%.17g,%.17g\n", sc.curve.candidates[k], sc.curve.values[k]);
            if (std::fclose(f) != 0) throw std::runtime_error("close failed: " + path);
        }
        result.curves.push_back(std::move(sc));
    }
    return result;
}

} // namespace frontier

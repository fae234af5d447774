// frontier CLI: price | oracle | boundary | study | sweep
//
// Machine-readable JSON goes to stdout, diagnostics to stderr. Exit codes:
// 0 success, 2 configuration problems (bad flags, malformed JSON), 1
// numerical or I/O failures. All randomness comes from seed flags; output
// files land in --out-dir (default $FRONTIER_OUTPUT_DIR, else ".").

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frontier/boundary.hpp"
#include "frontier/contract.hpp"
#include "frontier/lattice.hpp"
#include "frontier/pricer.hpp"
#include "frontier/process.hpp"
#include "frontier/study.hpp"

namespace {

using namespace frontier;
using nlohmann::json;

constexpr double unset = std::numeric_limits<double>::quiet_NaN();

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open JSON file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
    }
}

// Strict field set, mirroring the inline flags one-to-one.
ProcessParams params_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("params: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "r" && it.key() != "sigma" && it.key() != "s0")
            throw std::invalid_argument("params: unknown field '" + it.key() + "'");
    for (const char* f : {"r", "sigma", "s0"})
        if (!j.contains(f))
            throw std::invalid_argument(std::string("params: missing field '") + f + "'");
    ProcessParams p{j["r"].get<double>(), j["sigma"].get<double>(), j["s0"].get<double>()};
    p.validate();
    return p;
}

struct MarketArgs {
    std::string params_file;
    double s0 = unset, rate = unset, sigma = unset;

    void attach(CLI::App* cmd) {
        cmd->add_option("--params", params_file, "process parameters JSON file {r, sigma, s0}");
        cmd->add_option("--s0", s0, "spot value at time zero");
        cmd->add_option("--rate", rate, "risk-free rate r");
        cmd->add_option("--sigma", sigma, "volatility");
    }

    ProcessParams resolve() const {
        if (!params_file.empty()) {
            if (!std::isnan(s0) || !std::isnan(rate) || !std::isnan(sigma))
                throw std::invalid_argument("use either --params or inline --s0/--rate/--sigma");
            return params_from_json(load_json_file(params_file));
        }
        if (std::isnan(s0)) throw std::invalid_argument("missing required flag --s0");
        if (std::isnan(rate)) throw std::invalid_argument("missing required flag --rate");
        if (std::isnan(sigma)) throw std::invalid_argument("missing required flag --sigma");
        ProcessParams p{rate, sigma, s0};
        p.validate();
        return p;
    }
};

struct ContractArgs {
    std::string contract_file;
    std::string kind, style;
    double strike = unset, expiry = unset;
    int steps = 100;

    void attach(CLI::App* cmd) {
        cmd->add_option("--contract", contract_file, "contract JSON file");
        cmd->add_option("--kind", kind,
                        "vanilla-put | vanilla-call | geo-avg-put | arith-avg-put");
        cmd->add_option("--style", style, "european | american");
        cmd->add_option("--strike", strike, "strike X");
        cmd->add_option("--expiry", expiry, "expiry T in years");
        cmd->add_option("--steps", steps, "number of evenly spaced time steps (default 100)");
    }

    ContractSpec resolve() const {
        if (!contract_file.empty()) {
            if (!kind.empty() || !style.empty() || !std::isnan(strike) || !std::isnan(expiry))
                throw std::invalid_argument("use either --contract or inline contract flags");
            return contract_from_json(load_json_file(contract_file));
        }
        if (kind.empty()) throw std::invalid_argument("missing required flag --kind");
        if (style.empty()) throw std::invalid_argument("missing required flag --style");
        if (std::isnan(strike)) throw std::invalid_argument("missing required flag --strike");
        if (std::isnan(expiry)) throw std::invalid_argument("missing required flag --expiry");
        ContractSpec c{kind_from_string(kind), strike, expiry, style_from_string(style), steps};
        c.validate();
        return c;
    }
};

struct RunArgs {
    std::size_t paths = 100000;
    std::uint64_t seed = 1, seed2 = 0;
    std::string mode = "3a";
    bool flashlight = false;
    bool no_early_cutoff = false;
    int aux = 1000;
    int bins = 20;
    double tol = 1e-6;
    double tilt_lambda = unset;
    int threads = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--paths", paths, "number of Monte Carlo paths (default 100000)");
        cmd->add_option("--seed", seed, "master seed for the training sample (default 1)");
        cmd->add_option("--seed2", seed2,
                        "seed for independent repricing (default derived from --seed)");
        cmd->add_option("--mode", mode, "threshold search: 3a (exact) | 3b (grid)");
        cmd->add_flag("--flashlight", flashlight, "augment sparse regions with auxiliary paths");
        cmd->add_flag("--no-early-cutoff", no_early_cutoff,
                      "disable freezing once the boundary leaves the sampled range");
        cmd->add_option("--aux", aux, "auxiliary segments per step for --flashlight");
        cmd->add_option("--bins", bins, "spot bins for average contracts (default 20)");
        cmd->add_option("--tol", tol, "grid-mode halt spacing (default 1e-6)");
        cmd->add_option("--tilt-lambda", tilt_lambda,
                        "terminal importance tilt strength (default: automatic)");
        cmd->add_option("--threads", threads, "worker threads; results do not depend on it");
    }

    std::uint64_t resolve_seed2() const {
        return seed2 != 0 ? seed2 : mix64(seed ^ 0x9e3779b97f4a7c15ull);
    }

    PricingOptions options() const {
        PricingOptions opts;
        opts.mode = locate_mode_from_string(mode);
        opts.early_cutoff = !no_early_cutoff;
        opts.flashlight = flashlight;
        opts.n_aux = aux;
        opts.n_bins = bins;
        opts.grid_tol = tol;
        opts.tilt_lambda = tilt_lambda;
        opts.n_threads = threads;
        opts.validate();
        return opts;
    }
};

std::string default_out_dir() {
    const char* env = std::getenv("FRONTIER_OUTPUT_DIR");
    return env && *env ? env : ".";
}

std::string ensure_out_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

json estimate_json(const PriceEstimate& e) {
    return json{{"value", e.value},
                {"std_error", e.std_error},
                {"ess", e.ess},
                {"n_paths", e.n_paths},
                {"bias", to_string(e.bias)}};
}

void emit(const json& j) { std::printf("%s\n", j.dump(2).c_str()); }

// Tree boundaries reuse the Monte Carlo CSV layout: a step with no exercising
// node maps to the out-of-range flag on the hold side.
ExerciseBoundary lattice_boundary(const ContractSpec& c, const LatticeResult& res) {
    ExerciseBoundary b;
    b.kind = c.kind;
    b.grid = TimeGrid::uniform(c.expiry, c.n_steps);
    b.entries.resize(res.boundary.size());
    for (std::size_t i = 0; i < res.boundary.size(); ++i) {
        if (std::isnan(res.boundary[i]))
            b.entries[i] = {unset, exercises_below(c.kind) ? BoundaryFlag::below_sample
                                                           : BoundaryFlag::above_sample};
        else
            b.entries[i] = {res.boundary[i], BoundaryFlag::located};
    }
    return b;
}

int cmd_price(const MarketArgs& market, const ContractArgs& contract_args, const RunArgs& run,
              const std::string& out_dir) {
    ProcessParams params = market.resolve();
    ContractSpec contract = contract_args.resolve();
    PricingOptions opts = run.options();
    json out{{"command", "price"},
             {"params", json{{"r", params.r}, {"sigma", params.sigma}, {"s0", params.s0}}},
             {"contract", contract_to_json(contract)},
             {"seed", run.seed}};
    if (contract.style == ExerciseStyle::european) {
        out["estimate"] = estimate_json(price_european(params, contract, run.paths, run.seed, opts));
    } else {
        AmericanResult am = price_american(params, contract, run.paths, run.seed, opts);
        std::uint64_t seed2 = run.resolve_seed2();
        PriceEstimate ind =
            reprice_independent(params, contract, am.boundary, run.paths, seed2, opts);
        std::string path = ensure_out_dir(out_dir) + "/boundary.csv";
        am.boundary.write_csv(path);
        out["seed2"] = seed2;
        out["mode"] = to_string(opts.mode);
        out["estimates"] = json{{"in_sample", estimate_json(am.price)},
                                {"independent", estimate_json(ind)},
                                {"averaged", estimate_json(price_averaged(am.price, ind))}};
        out["european_same_sample"] = estimate_json(am.euro_same_sample);
        out["boundary_file"] = path;
    }
    emit(out);
    return 0;
}

int cmd_oracle(const MarketArgs& market, const ContractArgs& contract_args,
               const std::string& method, int reps, const std::string& boundary_out,
               const std::string& out_dir) {
    ProcessParams params = market.resolve();
    ContractSpec contract = contract_args.resolve();
    std::string m = method;
    if (m == "auto") {
        if (is_average(contract.kind)) m = "geo-tree";
        else m = "crr";
    }
    json out{{"command", "oracle"},
             {"params", json{{"r", params.r}, {"sigma", params.sigma}, {"s0", params.s0}}},
             {"contract", contract_to_json(contract)},
             {"method", m}};
    LatticeResult res;
    bool have_boundary = false;
    if (m == "crr") {
        res = crr_price(params, contract);
        have_boundary = true;
    } else if (m == "geo-tree") {
        if (contract.kind != ContractKind::geo_avg_put)
            throw std::invalid_argument("oracle: geo-tree requires --kind geo-avg-put");
        res = geo_avg_tree(params, contract, reps);
        have_boundary = true;
    } else if (m == "black-scholes") {
        if (is_average(contract.kind) || contract.style != ExerciseStyle::european)
            throw std::invalid_argument("oracle: black-scholes prices European vanilla only");
        res.price = black_scholes(params, contract.strike, contract.expiry,
                                  exercises_below(contract.kind));
    } else if (m == "geo-closed-form") {
        if (contract.kind != ContractKind::geo_avg_put ||
            contract.style != ExerciseStyle::european)
            throw std::invalid_argument(
                "oracle: geo-closed-form prices European geo-avg-put only");
        res.price = geo_closed_form(params, contract.strike,
                                    TimeGrid::uniform(contract.expiry, contract.n_steps));
    } else {
        throw std::invalid_argument("oracle: unknown --method '" + method + "'");
    }
    out["price"] = res.price;
    if (!boundary_out.empty()) {
        if (!have_boundary)
            throw std::invalid_argument("oracle: --boundary-out requires a tree method");
        std::string path = ensure_out_dir(out_dir) + "/" + boundary_out;
        lattice_boundary(contract, res).write_csv(path);
        out["boundary_file"] = path;
    }
    emit(out);
    return 0;
}

int cmd_boundary(const MarketArgs& market, const ContractArgs& contract_args, const RunArgs& run,
                 const std::string& file_name, const std::string& out_dir) {
    ProcessParams params = market.resolve();
    ContractSpec contract = contract_args.resolve();
    if (contract.style != ExerciseStyle::american)
        throw std::invalid_argument("boundary: requires --style american");
    AmericanResult am = price_american(params, contract, run.paths, run.seed, run.options());
    std::string path = ensure_out_dir(out_dir) + "/" + file_name;
    am.boundary.write_csv(path);
    json out{{"command", "boundary"},
             {"boundary_file", path},
             {"seed", run.seed},
             {"mode", run.mode},
             {"in_sample", estimate_json(am.price)}};
    emit(out);
    return 0;
}

int cmd_study(const std::string& config_file, const std::string& out_dir) {
    StudyConfig cfg = study_config_from_json(load_json_file(config_file));
    StudyResult result = run_error_study(cfg, ensure_out_dir(out_dir));
    auto stats = [](const TagStats& st) {
        return json{{"mean", st.mean}, {"sd", st.sd}, {"n", st.n}};
    };
    json out{{"command", "study"},
             {"config", study_config_to_json(cfg)},
             {"records", result.records.size()},
             {"excluded", result.excluded},
             {"out_dir", out_dir},
             {"stats", json{{"in_sample", stats(result.stats_in())},
                            {"independent", stats(result.stats_ind())},
                            {"averaged", stats(result.stats_avg())},
                            {"european", stats(result.stats_eu())}}}};
    emit(out);
    return 0;
}

int cmd_sweep(std::uint64_t seed, const std::vector<std::size_t>& path_counts, int index,
              const std::string& out_dir) {
    SweepResult res = objective_sweep(seed, path_counts, ensure_out_dir(out_dir), index);
    json curves = json::array();
    for (const SweepCurve& c : res.curves)
        curves.push_back(json{{"n_paths", c.n_paths},
                              {"argmax", c.argmax},
                              {"located", c.located},
                              {"file", out_dir + "/objective_n" + std::to_string(c.n_paths) +
                                           ".csv"}});
    json out{{"command", "sweep"},
             {"index", res.index},
             {"seed", seed},
             {"tree_boundary", res.tree_boundary},
             {"curves", curves}};
    emit(out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo option pricing with early-exercise boundary tracking"};
    app.require_subcommand(1);

    MarketArgs market;
    ContractArgs contract;
    RunArgs run;
    std::string out_dir = default_out_dir();

    CLI::App* price = app.add_subcommand("price", "price one contract by Monte Carlo");
    market.attach(price);
    contract.attach(price);
    run.attach(price);
    price->add_option("--out-dir", out_dir, "output directory for files");

    std::string oracle_method = "auto";
    int oracle_reps = 0;
    std::string oracle_boundary_out;
    CLI::App* oracle = app.add_subcommand("oracle", "price one contract on a lattice");
    market.attach(oracle);
    contract.attach(oracle);
    oracle->add_option("--method", oracle_method,
                       "auto | crr | geo-tree | black-scholes | geo-closed-form");
    oracle->add_option("--reps", oracle_reps,
                       "representative averages per tree node (geo-tree; 0 = steps+1)");
    oracle->add_option("--boundary-out", oracle_boundary_out,
                       "also write the tree exercise boundary CSV under this name");
    oracle->add_option("--out-dir", out_dir, "output directory for files");

    std::string boundary_file = "boundary.csv";
    CLI::App* boundary = app.add_subcommand("boundary", "estimate and export an exercise boundary");
    market.attach(boundary);
    contract.attach(boundary);
    run.attach(boundary);
    boundary->add_option("--out", boundary_file, "boundary CSV file name");
    boundary->add_option("--out-dir", out_dir, "output directory for files");

    std::string study_config;
    CLI::App* study = app.add_subcommand("study", "run a random-option error study");
    study->add_option("--config", study_config, "StudyConfig JSON file")->required();
    study->add_option("--out-dir", out_dir, "output directory for files");

    std::uint64_t sweep_seed = 1;
    std::vector<std::size_t> sweep_paths{100, 1000, 10000, 100000};
    int sweep_index = 45;
    CLI::App* sweep = app.add_subcommand("sweep", "objective-curve sweep on the demo contract");
    sweep->add_option("--seed", sweep_seed, "master seed (default 1)");
    sweep->add_option("--paths-list", sweep_paths, "sample sizes, one curve each");
    sweep->add_option("--index", sweep_index, "time index of the profiled step (default 45)");
    sweep->add_option("--out-dir", out_dir, "output directory for files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        if (app.got_subcommand(price)) return cmd_price(market, contract, run, out_dir);
        if (app.got_subcommand(oracle))
            return cmd_oracle(market, contract, oracle_method, oracle_reps, oracle_boundary_out,
                              out_dir);
        if (app.got_subcommand(boundary))
            return cmd_boundary(market, contract, run, boundary_file, out_dir);
        if (app.got_subcommand(study)) return cmd_study(study_config, out_dir);
        if (app.got_subcommand(sweep))
            return cmd_sweep(sweep_seed, sweep_paths, sweep_index, out_dir);
        std::fprintf(stderr, "error: no subcommand selected\n");
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

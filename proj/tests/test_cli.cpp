#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::string& args) {
    fs::path out_file = fs::absolute("cli_stdout.tmp");
    fs::path err_file = fs::absolute("cli_stderr.tmp");
    std::string cmd = std::string(FRONTIER_CLI_PATH) + " " + args + " > " +
                      out_file.string() + " 2> " + err_file.string();
    int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    fs::remove(out_file);
    fs::remove(err_file);
    return r;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

std::string slurp_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("cli: help exits zero") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("price --help").code == 0);
}

TEST_CASE("cli: a subcommand is required") {
    CliRun r = run_cli("");
    CHECK(r.code == 2);
}

TEST_CASE("cli: deterministic zero-volatility price") {
    fs::path dir = fs::absolute("cli_price0_out");
    fs::create_directories(dir);
    CliRun r = run_cli(
        "price --kind vanilla-put --style american --strike 120 --expiry 0.5 --steps 10 "
        "--s0 100 --rate 0.05 --sigma 0 --paths 200 --seed 3 --out-dir " +
        dir.string());
    REQUIRE(r.code == 0);
    json out = json::parse(r.out);
    CHECK(out["command"] == "price");
    CHECK(out["estimates"]["in_sample"]["value"] == json(20.0));
    CHECK(out["estimates"]["in_sample"]["std_error"] == json(0.0));
    CHECK(out["estimates"]["independent"]["value"] == json(20.0));
    CHECK(out["estimates"]["averaged"]["value"] == json(20.0));
    CHECK(out["mode"] == "3a");
    CHECK(out["seed"] == 3);
    CHECK(fs::exists(dir / "boundary.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli: missing required flag names the flag and exits 2") {
    CliRun r = run_cli(
        "price --kind vanilla-put --style american --expiry 0.5 --s0 100 --rate 0.05 "
        "--sigma 0.4 --paths 100");
    CHECK(r.code == 2);
    CHECK(r.err.find("--strike") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("cli: European price agrees with the closed-form oracle") {
    CliRun mc = run_cli(
        "price --kind vanilla-put --style european --strike 50 --expiry 0.4166666666666667 "
        "--steps 50 --s0 50 --rate 0.1 --sigma 0.4 --paths 20000 --seed 1");
    REQUIRE(mc.code == 0);
    json mc_out = json::parse(mc.out);
    double value = mc_out["estimate"]["value"].get<double>();
    double se = mc_out["estimate"]["std_error"].get<double>();

    CliRun oracle = run_cli(
        "oracle --kind vanilla-put --style european --strike 50 --expiry 0.4166666666666667 "
        "--steps 50 --s0 50 --rate 0.1 --sigma 0.4 --method black-scholes");
    REQUIRE(oracle.code == 0);
    json oracle_out = json::parse(oracle.out);
    CHECK(oracle_out["method"] == "black-scholes");
    double truth = oracle_out["price"].get<double>();
    CHECK(truth == Catch::Approx(4.07598098478778).epsilon(1e-12));
    CHECK(std::fabs(value - truth) < 3.0 * se);
}

TEST_CASE("cli: oracle method auto picks the contract-appropriate tree") {
    CliRun crr = run_cli(
        "oracle --kind vanilla-put --style american --strike 50 --expiry 0.4166666666666667 "
        "--steps 50 --s0 50 --rate 0.1 --sigma 0.4");
    REQUIRE(crr.code == 0);
    json crr_out = json::parse(crr.out);
    CHECK(crr_out["method"] == "crr");
    CHECK(crr_out["price"].get<double>() == Catch::Approx(4.27202074766838).epsilon(1e-9));

    CliRun geo = run_cli(
        "oracle --kind geo-avg-put --style european --strike 100 --expiry 0.5 --steps 100 "
        "--s0 100 --rate 0.1 --sigma 0.4 --method geo-closed-form");
    REQUIRE(geo.code == 0);
    CHECK(json::parse(geo.out)["price"].get<double>() ==
          Catch::Approx(5.39395604133225).epsilon(1e-12));
}

TEST_CASE("cli: oracle rejects mismatched methods with exit 2") {
    CliRun r = run_cli(
        "oracle --kind vanilla-put --style american --strike 50 --expiry 0.5 --steps 10 "
        "--s0 50 --rate 0.1 --sigma 0.4 --method geo-tree");
    CHECK(r.code == 2);
    CHECK(r.err.find("geo-avg-put") != std::string::npos);

    CliRun bs_am = run_cli(
        "oracle --kind vanilla-put --style american --strike 50 --expiry 0.5 --steps 10 "
        "--s0 50 --rate 0.1 --sigma 0.4 --method black-scholes");
    CHECK(bs_am.code == 2);
}

TEST_CASE("cli: oracle exports the tree boundary") {
    fs::path dir = fs::absolute("cli_oracle_out");
    fs::create_directories(dir);
    CliRun r = run_cli(
        "oracle --kind vanilla-put --style american --strike 50 --expiry 0.4166666666666667 "
        "--steps 50 --s0 50 --rate 0.1 --sigma 0.4 --boundary-out tree.csv --out-dir " +
        dir.string());
    REQUIRE(r.code == 0);
    CHECK(count_lines(dir / "tree.csv") == 52); // header + 51 rows
    fs::remove_all(dir);
}

TEST_CASE("cli: boundary export has one row per time index") {
    fs::path dir = fs::absolute("cli_boundary_out");
    fs::create_directories(dir);
    CliRun r = run_cli(
        "boundary --kind vanilla-put --style american --strike 50 --expiry 0.4166666666666667 "
        "--steps 50 --s0 50 --rate 0.1 --sigma 0.4 --paths 2000 --seed 4 --out tracked.csv "
        "--out-dir " +
        dir.string());
    REQUIRE(r.code == 0);
    json out = json::parse(r.out);
    CHECK(out["command"] == "boundary");
    CHECK(out["in_sample"]["bias"] == "in-sample");
    CHECK(count_lines(dir / "tracked.csv") == 52); // header + n_steps + 1 rows
    fs::remove_all(dir);

    CliRun eu = run_cli(
        "boundary --kind vanilla-put --style european --strike 50 --expiry 0.5 --steps 10 "
        "--s0 50 --rate 0.1 --sigma 0.4 --paths 100");
    CHECK(eu.code == 2); // boundary tracking needs an American contract
}

TEST_CASE("cli: price accepts JSON parameter and contract files") {
    fs::path dir = fs::absolute("cli_json_out");
    fs::create_directories(dir);
    {
        std::ofstream p(dir / "params.json");
        p << R"({"r": 0.05, "sigma": 0.0, "s0": 100.0})";
        std::ofstream c(dir / "contract.json");
        c << R"({"kind": "vanilla-put", "strike": 120.0, "expiry": 0.5,)"
          << R"( "style": "european", "n_steps": 10})";
    }
    CliRun r = run_cli("price --params " + (dir / "params.json").string() + " --contract " +
                       (dir / "contract.json").string() + " --paths 100 --seed 1");
    REQUIRE(r.code == 0);
    json out = json::parse(r.out);
    CHECK(out["estimate"]["value"].get<double>() ==
          Catch::Approx(17.0371894433999).epsilon(1e-12));

    // mixing a file with inline market flags is rejected
    CliRun mixed = run_cli("price --params " + (dir / "params.json").string() +
                           " --s0 90 --contract " + (dir / "contract.json").string() +
                           " --paths 100");
    CHECK(mixed.code == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: malformed JSON and unknown values exit 2") {
    fs::path dir = fs::absolute("cli_bad_json");
    fs::create_directories(dir);
    {
        std::ofstream p(dir / "bad.json");
        p << "{ this is not json";
    }
    CliRun r = run_cli("price --params " + (dir / "bad.json").string() +
                       " --kind vanilla-put --style european --strike 100 --expiry 1 "
                       "--paths 100");
    CHECK(r.code == 2);
    CHECK(r.err.find("malformed JSON") != std::string::npos);
    fs::remove_all(dir);

    CliRun kind = run_cli(
        "price --kind quanto-put --style european --strike 100 --expiry 1 --s0 100 "
        "--rate 0.05 --sigma 0.2 --paths 100");
    CHECK(kind.code == 2);
    CHECK(kind.err.find("quanto-put") != std::string::npos);
}

TEST_CASE("cli: study reruns are byte-identical") {
    fs::path base = fs::absolute("cli_study_out");
    fs::create_directories(base / "a");
    fs::create_directories(base / "b");
    {
        std::ofstream cfg(base / "config.json");
        cfg << R"({"kind": "vanilla-put", "n_options": 2, "n_paths": 300,)"
            << R"( "n_steps": 8, "master_seed": 5})";
    }
    CliRun ra = run_cli("study --config " + (base / "config.json").string() + " --out-dir " +
                        (base / "a").string());
    REQUIRE(ra.code == 0);
    CliRun rb = run_cli("study --config " + (base / "config.json").string() + " --out-dir " +
                        (base / "b").string());
    REQUIRE(rb.code == 0);

    json out = json::parse(ra.out);
    CHECK(out["records"] == 2);
    CHECK(out["stats"]["in_sample"].contains("mean"));

    for (const char* name : {"records.jsonl", "manifest.json", "hist_in_sample.csv",
                             "hist_independent.csv", "hist_averaged.csv", "hist_european.csv"}) {
        INFO(name);
        REQUIRE(fs::exists(base / "a" / name));
        CHECK(slurp_file(base / "a" / name) == slurp_file(base / "b" / name));
    }
    fs::remove_all(base);

    CliRun missing = run_cli("study --config no_such_config.json");
    CHECK(missing.code == 2);
}

TEST_CASE("cli: sweep writes one curve per sample size") {
    fs::path dir = fs::absolute("cli_sweep_out");
    fs::create_directories(dir);
    CliRun r = run_cli("sweep --seed 2 --paths-list 200 400 --index 45 --out-dir " +
                       dir.string());
    REQUIRE(r.code == 0);
    json out = json::parse(r.out);
    CHECK(out["tree_boundary"].get<double>() == Catch::Approx(41.656141786122).epsilon(1e-9));
    REQUIRE(out["curves"].size() == 2);
    CHECK(out["curves"][0]["n_paths"] == 200);
    CHECK(fs::exists(dir / "objective_n200.csv"));
    CHECK(fs::exists(dir / "objective_n400.csv"));
    // 3 comment lines + 100 candidates
    CHECK(count_lines(dir / "objective_n200.csv") == 103);
    fs::remove_all(dir);
}

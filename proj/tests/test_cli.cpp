#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "expem/config.hpp"
#include "expem/runner.hpp"

using namespace expem;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("expem_test_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig cfg = parse_text(R"(# experiment description
[experiment]
kind = converge

[model]
preset = case3
x0 = 2.0      ; overrides apply after the preset

[grid]
T = 1.0
q_list = 6..9
q_ref = 12

[mc]
n_traj = 500
seed = 99
threads = 2
p = 1

[output]
dir = somewhere
formats = csv,json
emit_trajectories = true
)");
    CHECK(cfg.kind == ExperimentKind::converge);
    CHECK(cfg.model_preset == "case3");
    CHECK(cfg.model.B2 == 4.5);
    CHECK(cfg.model.x0 == 2.0);
    CHECK(cfg.q_list == std::vector<int>{6, 7, 8, 9});
    CHECK(cfg.q_ref == 12);
    CHECK(cfg.n_traj == 500);
    CHECK(cfg.seed == 99);
    CHECK(cfg.threads == 2);
    CHECK(cfg.out_dir == "somewhere");
    CHECK(cfg.emit_trajectories);
    validate_config(cfg);
}

TEST_CASE("config errors carry the offending line") {
    try {
        parse_text("[experiment]\nkind = converge\n[model]\nwhatever = 3\n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test.ini:4") != std::string::npos);
        CHECK(std::string(e.what()).find("whatever") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_text("[experiment]\nkind = lunch\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("[model]\npreset = case1\n"), ConfigError); // kind missing
    CHECK_THROWS_AS(parse_text("[experiment]\nkind = check\n[model]\npreset = nope\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_text("[experiment]\nkind = check\n[mc]\nn_traj = many\n"), ConfigError);

    // q_ref at or below the largest q is a validation error.
    const ExperimentConfig bad = parse_text(
        "[experiment]\nkind = converge\n[grid]\nq_list = 6..12\nq_ref = 12\n");
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("explicit model blocks work without a preset") {
    const ExperimentConfig cfg = parse_text(R"([experiment]
kind = check
[model]
kind = piecewise-polynomial
b0 = 1
B1 = 1
B2 = -0.6
beta = 3
alpha = 2
Sigma = 1
SigmaPrime = 1
LG = 6
Lbloc = 1
chi = 1.5, 6
interval_B2 = 6, -0.6, 6
zeta = 6.5
B1prime = 1
x0 = 3
)");
    validate_config(cfg);
    CHECK(cfg.model.kind == ModelKind::piecewise_polynomial);
    CHECK(cfg.model.discontinuities == std::vector<double>{1.5, 6.0});
    CHECK(cfg.model.interval_B2 == std::vector<double>{6.0, -0.6, 6.0});
}

TEST_CASE("check runner reproduces the margin table") {
    ExperimentConfig cfg = parse_text("[experiment]\nkind = check\n[model]\npreset = case3\n");
    std::ostringstream log;
    const HypothesisReport r3 = run_check(cfg, log);
    CHECK(r3.kappa_strong == 0.0);
    CHECK(r3.kappa_weak == doctest::Approx(-29.0 / 3.0).epsilon(1e-14));

    cfg.model = preset("case5");
    std::ostringstream log5;
    const HypothesisReport r5 = run_check(cfg, log5);
    CHECK(r5.kappa_strong == -4.0);
    CHECK(log5.str().find("kappa_strong < 0") != std::string::npos);

    cfg.model = preset("case8");
    cfg.eps = 0.1;
    std::ostringstream log8;
    const HypothesisReport r8 = run_check(cfg, log8);
    CHECK(r8.delta_eps == doctest::Approx(4.666761436486774e-05).epsilon(1e-12));
}

TEST_CASE("json reports round-trip byte-identically") {
    StrongErrorParams params;
    params.q = 4;
    params.q_ref = 6;
    params.n_traj = 40;
    params.seed = 21;
    ConvergenceTable table;
    table.rows.push_back(strong_error(preset("case6"), params));
    params.q = 5;
    table.rows.push_back(strong_error(preset("case6"), params));
    table.fitted_rate = 0.5;
    table.fitted_intercept = -1.25;

    const std::string text = to_json_text(table);
    const auto parsed = nlohmann::json::parse(text);
    CHECK(parsed.dump(2) + "\n" == text);
}

TEST_CASE("convergence runner on the exact scheme") {
    TempDir dir("gbm");
    ExperimentConfig cfg = parse_text("[experiment]\nkind = converge\n[model]\npreset = gbm\n");
    cfg.q_list = {4, 5};
    cfg.q_ref = 7;
    cfg.n_traj = 50;
    cfg.out_dir = dir.path.string();
    std::ostringstream log;
    const int code = run_experiment(cfg, log);
    CHECK(code == 0);
    CHECK(log.str().find("exact scheme") != std::string::npos);
    CHECK(fs::exists(dir.path / "table.csv"));
    CHECK(fs::exists(dir.path / "table.json"));
    const std::string csv = slurp(dir.path / "table.csv");
    CHECK(csv.rfind("q,dt,", 0) == 0);
    const auto doc = nlohmann::json::parse(slurp(dir.path / "table.json"));
    CHECK(doc["fitted_rate"].is_null()); // fit skipped for the exact scheme
    CHECK(doc["rows"].size() == 2);
}

TEST_CASE("convergence csv is byte-identical across runs and thread counts") {
    TempDir dir1("threads1");
    TempDir dir4("threads4");
    ExperimentConfig cfg = parse_text("[experiment]\nkind = converge\n[model]\npreset = case6\n");
    cfg.q_list = {4, 5};
    cfg.q_ref = 8;
    cfg.n_traj = 200;
    cfg.seed = 31;
    std::ostringstream log;
    cfg.threads = 1;
    cfg.out_dir = dir1.path.string();
    run_experiment(cfg, log);
    cfg.threads = 4;
    cfg.out_dir = dir4.path.string();
    run_experiment(cfg, log);
    CHECK(slurp(dir1.path / "table.csv") == slurp(dir4.path / "table.csv"));
    CHECK(slurp(dir1.path / "table.json") == slurp(dir4.path / "table.json"));
}

TEST_CASE("moments runner") {
    TempDir dir("moments");
    ExperimentConfig cfg = parse_text("[experiment]\nkind = moments\n[model]\npreset = gbm\n");
    cfg.q_list = {6};
    cfg.n_traj = 2000;
    cfg.seed = 77;
    cfg.mu = 0.0;
    cfg.out_dir = dir.path.string();
    std::ostringstream log;
    const int code = run_experiment(cfg, log);
    CHECK(code == 0);
    const MomentsTable table = run_moments(cfg, log);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].exp_moment_stopped == 1.0); // mu = 0
    // E[X_T^2] for the linear model, loose Monte Carlo band
    CHECK(table.rows[0].moment_2p == doctest::Approx(std::exp(0.14)).epsilon(0.05));
    CHECK(fs::exists(dir.path / "table.csv"));
}

TEST_CASE("stability runner") {
    TempDir dir("stab");
    ExperimentConfig cfg = parse_text("[experiment]\nkind = stability\n[model]\npreset = stability\n");
    cfg.dt = 0.01;
    cfg.T = 2.0;
    cfg.out_dir = dir.path.string();
    cfg.emit_trajectories = true;
    std::ostringstream log;
    const int code = run_experiment(cfg, log);
    CHECK(code == 0);
    const StabilityReport report = run_stability(cfg, log);
    CHECK(report.xi_star * report.xi_star == doctest::Approx(2.0 / 13.0).epsilon(1e-10));
    CHECK(report.xi_lower_root == report.xi_star); // b0 = 0
    CHECK(report.xi_upper_root == report.xi_star);
    CHECK(fs::exists(dir.path / "table.txt"));
    CHECK(fs::exists(dir.path / "traj_0.csv"));

    SUBCASE("empty run") {
        cfg.T = 0.0;
        std::ostringstream empty_log;
        const StabilityReport empty = run_stability(cfg, empty_log);
        CHECK(empty.empty_run);
        CHECK(empty.crossings == 0);
        CHECK(empty.band_occupancy == 0.0);
    }
}

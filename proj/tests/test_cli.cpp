#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "supctrl/commands.hpp"
#include "supctrl/config.hpp"
#include "supctrl/errors.hpp"
#include "support.hpp"

using namespace supctrl;
namespace fs = std::filesystem;

namespace {

const std::string kConfig = std::string(SUPCTRL_CONFIG_DIR) + "/section4.conf";

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.conf");
}

std::string config_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("supctrl_test_" + name);
    fs::remove_all(p);
    return p;
}

std::map<std::string, std::string> report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SUPCTRL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesFixtureFile) {
    const ExperimentConfig c = load_config(kConfig);
    EXPECT_EQ(c.model_kind, "gbm");
    EXPECT_DOUBLE_EQ(c.mu, 0.01);
    EXPECT_DOUBLE_EQ(c.sigma, 0.1);
    EXPECT_DOUBLE_EQ(c.rate, 0.05);
    EXPECT_DOUBLE_EQ(c.K1, 12.0);
    EXPECT_DOUBLE_EQ(c.K2, 10.0);
    EXPECT_DOUBLE_EQ(c.nu, 0.1);
    EXPECT_DOUBLE_EQ(c.eta, 0.5);
    EXPECT_EQ(c.sim.n_paths, 100000u);
    EXPECT_DOUBLE_EQ(c.sim.dt, 1e-3);
    EXPECT_TRUE(c.sim.antithetic);
    EXPECT_EQ(c.sim.horizon, HorizonPolicy::exponential_time);
    EXPECT_EQ(c.verify_paths, 20000u);
    EXPECT_EQ(c.source, kConfig);
}

TEST(Config, CommentsBlankLinesAndInfinity) {
    const auto c = parse("# header\n\nmodel.kind = generic   # trailing\nmodel.drift = 0.02*x\n"
                         "model.volatility = 0.2*x\nmodel.upper = inf\nsimulation.horizon = discount\n");
    EXPECT_EQ(c.model_kind, "generic");
    EXPECT_EQ(c.drift_expr, "0.02*x");
    EXPECT_TRUE(std::isinf(c.upper));
    EXPECT_EQ(c.sim.horizon, HorizonPolicy::discount_weight);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(config_error("model.mu = 0.01\nmodel.bogus = 3\n").find("test.conf:2:"), std::string::npos);
    EXPECT_NE(config_error("model.mu = 0.01\nmodel.mu = 0.02\n").find("test.conf:2:"), std::string::npos);
    EXPECT_NE(config_error("\n\nmodel.mu 0.01\n").find("test.conf:3:"), std::string::npos);
    EXPECT_NE(config_error("model.sigma = abc\n").find("test.conf:1: model.sigma"), std::string::npos);
    EXPECT_NE(config_error("model.rate = 0.05x\n").find("test.conf:1:"), std::string::npos);
    EXPECT_NE(config_error("simulation.horizon = weekly\n").find("test.conf:1:"), std::string::npos);
    EXPECT_NE(config_error("simulation.paths = -4\n").find("test.conf:1:"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/dir/none.conf"), ConfigError);
}

TEST(Config, BuildRejectsUnsupportedRegime) {
    auto c = parse("model.mu = 0.06\nmodel.rate = 0.05\n");
    try {
        build_problem(c);
        FAIL() << "r <= mu must be rejected";
    } catch (const UnsupportedModelError& e) {
        EXPECT_EQ(exit_code_for(e), kExitAssumption);
    }
}

TEST(Config, GenericModelBuildsNumericSolutions) {
    const auto c = parse("model.kind = generic\nmodel.drift = 0.01*x\nmodel.volatility = 0.1*x\n");
    const ControlProblem p = build_problem(c);
    EXPECT_FALSE(p.spec().is_gbm());
    EXPECT_LT(testsupport::rel(solve_threshold(p).y_star(), testsupport::GbmOracle().y_star()), 1e-6);
}

TEST(ExitCodes, MapExceptionKinds) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), kExitConfig);
    EXPECT_EQ(exit_code_for(DomainError("x")), kExitConfig);
    EXPECT_EQ(exit_code_for(AssumptionViolation("c", "x")), kExitAssumption);
    EXPECT_EQ(exit_code_for(IntegrabilityError("upper", "x")), kExitAssumption);
    EXPECT_EQ(exit_code_for(NumericError("x")), kExitNumeric);
}

TEST(Solve, ReportsThreshold) {
    std::ostringstream out;
    EXPECT_EQ(cmd_solve(load_config(kConfig), out), kExitOk);
    const auto kv = report(out.str());
    EXPECT_EQ(kv.at("status"), "ok");
    EXPECT_LT(testsupport::rel(std::stod(kv.at("y_star")), testsupport::GbmOracle().y_star()), 1e-12);
    EXPECT_TRUE(kv.count("grid.024"));
    EXPECT_FALSE(kv.count("grid.025"));
}

TEST(Figure1, CsvRoundTripsBitExact) {
    const ExperimentConfig cfg = load_config(kConfig);
    std::ostringstream out;
    ASSERT_EQ(cmd_figure1(cfg, out), kExitOk);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "x,f_optimal,f_low,f_high");
    std::istringstream in(out.str());
    const auto rows = read_figure1_csv(in);
    ASSERT_EQ(rows.size(), 400u);

    const ControlProblem p = build_problem(cfg);
    const double y = solve_threshold(p).y_star();
    const auto grid = figure_grid(cfg, y);
    ASSERT_EQ(grid.size(), rows.size());
    bool has_y = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].x, grid[i]);
        EXPECT_EQ(rows[i].f_optimal, p.representing_f(y, grid[i]));
        EXPECT_EQ(rows[i].f_low, p.representing_f(0.75 * y, grid[i]));
        EXPECT_EQ(rows[i].f_high, p.representing_f(1.25 * y, grid[i]));
        if (i > 0) EXPECT_LT(rows[i - 1].x, rows[i].x);
        has_y = has_y || rows[i].x == y;
    }
    EXPECT_TRUE(has_y);
}

TEST(Figure1, RejectsMalformedCsv) {
    std::istringstream bad("x,f_optimal,f_low,f_high\n1,2,3\n");
    EXPECT_THROW(read_figure1_csv(bad), ConfigError);
}

TEST(Verify, AnalyticItemsPassQuickly) {
    ExperimentConfig cfg = load_config(kConfig);
    cfg.out_dir = scratch_dir("verify").string();
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_EQ(run_command("verify", cfg, true, out, err), kExitOk) << out.str();
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
    const auto kv = report(out.str());
    EXPECT_EQ(kv.at("verify.failed"), "0");
    EXPECT_EQ(kv.at("status"), "ok");
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "verify.txt"));
    EXPECT_TRUE(err.str().empty());
}

TEST(Verify, KappaPerturbationIsCaught) {
    ExperimentConfig cfg = load_config(kConfig);
    cfg.out_dir = scratch_dir("perturb").string();
    cfg.kappa_perturbation = 1e-3;
    std::ostringstream out, err;
    EXPECT_EQ(run_command("verify", cfg, true, out, err), kExitNumeric);
    const auto kv = report(out.str());
    EXPECT_EQ(kv.at("verify.wronskian_constant").substr(0, 4), "FAIL");
}

TEST(RunCommand, ErrorsBecomeExitCodes) {
    ExperimentConfig cfg = load_config(kConfig);
    cfg.out_dir = scratch_dir("errors").string();
    {
        ExperimentConfig c = cfg;
        c.K2 = 14.0;  // increasing marginal return
        std::ostringstream out, err;
        EXPECT_EQ(run_command("solve", c, true, out, err), kExitAssumption);
        EXPECT_NE(err.str().find("assumption_b_alpha_nonincreasing"), std::string::npos) << err.str();
    }
    {
        ExperimentConfig c = cfg;
        c.mu = 0.07;
        std::ostringstream out, err;
        EXPECT_EQ(run_command("solve", c, true, out, err), kExitAssumption);
    }
    {
        ExperimentConfig c = cfg;
        c.model_kind = "generic";
        c.drift_expr = "0.01*x +";
        c.volatility_expr = "0.1*x";
        std::ostringstream out, err;
        EXPECT_EQ(run_command("solve", c, true, out, err), kExitConfig);
    }
    {
        std::ostringstream out, err;
        EXPECT_EQ(run_command("frobnicate", cfg, true, out, err), kExitConfig);
    }
}

TEST(Binary, ExitCodes) {
    const std::string out = scratch_dir("binary").string();
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("solve --config " + kConfig + " --out " + out), 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "solve.txt"));
    EXPECT_EQ(run_cli("figure1 --config " + kConfig + " --out " + out), 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "figure1.csv"));
    EXPECT_EQ(run_cli("verify --skip-mc --config " + kConfig + " --out " + out), 0);
    EXPECT_EQ(run_cli("verify --skip-mc --debug-kappa-perturbation 1e-3 --config " + kConfig + " --out " + out), 3);
    EXPECT_EQ(run_cli("solve --config /nonexistent.conf"), 1);
    EXPECT_EQ(run_cli("solve"), 1);
    EXPECT_EQ(run_cli("simulate --paths 7 --config " + kConfig + " --out " + out), 1);
    EXPECT_EQ(run_cli("solve --skip-mc --config " + kConfig), 1);
}

TEST(Binary, SimulateSmallRun) {
    const std::string out = scratch_dir("simulate").string();
    EXPECT_EQ(run_cli("simulate --paths 400 --seed 3 --config " + kConfig + " --out " + out), 0);
    std::ifstream in(fs::path(out) / "simulate.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto kv = report(ss.str());
    EXPECT_EQ(kv.at("status"), "ok");
    EXPECT_TRUE(kv.count("hat_stopping.mean"));
    EXPECT_TRUE(kv.count("reflected_opt.analytic"));
}

#include "qtraj/config.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/experiment.hpp"
#include "qtraj/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qtraj;
using nlohmann::json;

namespace {

json doc(const std::string& scheme) {
    json d = json::parse(R"({
      "spec_version": "1.0",
      "model": {"dim": 2, "hamiltonian": {"preset": "sz", "scale": 0.5}, "coupling": "sm",
                "initial_state": "ground"},
      "drive": {"c_alpha": 1, "c_beta": 1, "normalize": true,
                "alpha": {"preset": "constant", "amplitude": 1},
                "beta": {"preset": "constant", "amplitude": -1}},
      "grid": {"horizon": 0.5, "tau": 0.005},
      "output_every": 10, "trajectories": 200, "seed": 5, "observables": ["sz", "sx"]
    })");
    d["scheme"] = scheme;
    return d;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qtraj_exp_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST(Run, MasterWithoutCouplingIsConstant) {
    json d = doc("master");
    d["model"]["coupling"] = {{0, 0}, {0, 0}};
    d["model"]["initial_state"] = "plus";
    d["model"]["hamiltonian"] = {{0, 0}, {0, 0}};
    const RunResult r = run_experiment(parse_config(d));
    ASSERT_FALSE(r.ensemble.rows.empty());
    for (const auto& row : r.ensemble.rows) {
        EXPECT_NEAR(row[1], -0.0, 1e-15); // sz
        EXPECT_NEAR(row[3], 1.0, 1e-14);  // sx
    }
}

TEST(Run, SameSeedGivesIdenticalBytes) {
    const ExperimentConfig c = parse_config(doc("counting"));
    const auto a = scratch("det_a"), b = scratch("det_b");
    RunOptions serial;
    serial.serial = true;
    RunOptions threaded;
    threaded.workers = 3;
    threaded.emit_trajectories = true;
    write_run(c, run_experiment(c, serial), a);
    write_run(c, run_experiment(c, threaded), b);
    for (const char* f : {"ensemble.csv", "mean_state.csv", "summary.json", "config.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_TRUE(std::filesystem::exists(b / "trajectories" / "trajectory_000199.csv"));
    EXPECT_TRUE(std::filesystem::exists(a / "timing.json"));
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Run, EnsembleColumns) {
    const RunResult c = run_experiment(parse_config(doc("counting")));
    EXPECT_EQ(c.ensemble.columns,
              (std::vector<std::string>{"t", "sz_mean", "sz_stderr", "sx_mean", "sx_stderr",
                                        "nu_mean", "clicks_mean", "clicks_stderr"}));
    json d = doc("homodyne");
    d["integrator"] = "sme";
    const RunResult h = run_experiment(parse_config(d));
    EXPECT_EQ(h.ensemble.columns.back(), "q_stderr");
    EXPECT_EQ(h.summary["noise"], "wiener");
}

TEST(Run, PoissonCheckForFreeField) {
    json d = doc("counting");
    d["model"]["coupling"] = {{0, 0}, {0, 0}};
    d["drive"] = json::parse(R"({"c_alpha": 1, "alpha": {"preset": "constant", "amplitude": 2}})");
    d["trajectories"] = 2000;
    const RunResult r = run_experiment(parse_config(d));
    ASSERT_TRUE(r.summary.contains("poisson_check"));
    EXPECT_NEAR(r.summary["poisson_check"]["lambda"].get<double>(), 2.0, 1e-12);
    EXPECT_GT(r.summary["poisson_check"]["p_value"].get<double>(), 0.01);
}

TEST(Run, EngineErrorsCarryTrajectoryAndStep) {
    // The driven cavity amplitude outgrows an 8-photon truncation mid-run.
    json d = doc("cavity-analytic");
    d["measurement"] = "counting";
    d["model"] = json::parse(R"({"cavity": {"omega0": 1, "gamma": 1, "u": 0, "n_max": 8}})");
    d["drive"] = json::parse(R"({"c_alpha": 1, "alpha": {"preset": "constant", "amplitude": 3}})");
    d["observables"] = {"n"};
    d["trajectories"] = 4;
    try {
        run_experiment(parse_config(d));
        FAIL() << "expected a failure";
    } catch (const TrajectoryFailure& e) {
        EXPECT_EQ(e.trajectory(), 0u);
        EXPECT_GT(e.step(), 0u);
        EXPECT_NE(std::string(e.what()).find("trajectory 0, step"), std::string::npos) << e.what();
    }
}

TEST(Run, ExactChainTable) {
    json d = doc("exact-chain");
    d["grid"] = {{"horizon", 0.16}, {"tau", 0.04}};
    d["measurement"] = "homodyne";
    const RunResult r = run_experiment(parse_config(d));
    EXPECT_EQ(r.ensemble.rows.size(), 16u);
    EXPECT_EQ(r.ensemble.columns[4], "p_exact");
    EXPECT_NEAR(r.summary["exact_chain"]["sum_exact"].get<double>(), 1.0, 1e-12);
    d["grid"]["horizon"] = 1.0;
    EXPECT_THROW(run_experiment(parse_config(d)), ConfigError);
}

TEST(Converge, SingleTauHasNoSlope) {
    json d = doc("counting");
    d["convergence"] = {{"paths", 4}, {"chain_steps", 4}};
    const auto rows = convergence_study(parse_config(d), {0.02});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].probability_order.has_value());
    EXPECT_FALSE(rows[0].state_order.has_value());
    EXPECT_THROW(convergence_study(parse_config(d), {0.01, 0.02}), ConfigError);
}

TEST(Converge, PureDriveErrorsVanish) {
    json d = doc("counting");
    d["model"]["coupling"] = {{0, 0}, {0, 0}};
    d["model"]["hamiltonian"] = {{0, 0}, {0, 0}};
    d["convergence"] = {{"paths", 4}, {"chain_steps", 4}};
    for (const auto& row : convergence_study(parse_config(d), {0.04, 0.02})) {
        EXPECT_LE(row.state_error, 1e-14);
        EXPECT_FALSE(row.state_order.has_value());
    }
}

TEST(Converge, ObservedOrders) {
    json d = doc("counting");
    d["grid"]["horizon"] = 2.0;
    d["convergence"] = {{"paths", 15}, {"chain_steps", 6}};
    const auto rows = convergence_study(parse_config(d), {0.04, 0.02, 0.01});
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_TRUE(rows[i].probability_order && rows[i].state_order);
        EXPECT_GE(*rows[i].probability_order, 1.0);
        EXPECT_GE(*rows[i].state_order, 0.5);
    }
    const Table t = convergence_table(rows);
    EXPECT_TRUE(std::isnan(t.rows[0][2]));
}

TEST(Compare, SelfIsZeroAndMismatchFails) {
    const ExperimentConfig c = parse_config(doc("master"));
    const auto a = scratch("cmp_a"), b = scratch("cmp_b");
    write_run(c, run_experiment(c), a);
    const CompareReport self = compare_runs(a, a);
    EXPECT_EQ(self.max_trace_distance, 0.0);
    EXPECT_EQ(self.bound_kind, "deterministic");
    json d = doc("master");
    d["output_every"] = 5;
    const ExperimentConfig c2 = parse_config(d);
    write_run(c2, run_experiment(c2), b);
    EXPECT_THROW(compare_runs(a, b), ConfigError);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Compare, TrajectoriesAgainstMaster) {
    const ExperimentConfig m = parse_config(doc("master"));
    json d = doc("counting");
    d["trajectories"] = 400;
    const ExperimentConfig t = parse_config(d);
    const auto a = scratch("cmp_m"), b = scratch("cmp_t");
    write_run(m, run_experiment(m), a);
    write_run(t, run_experiment(t), b);
    const CompareReport r = compare_runs(a, b);
    EXPECT_EQ(r.bound_kind, "5/sqrt(M)");
    EXPECT_NEAR(r.bound, 5.0 / std::sqrt(400.0), 1e-15);
    EXPECT_TRUE(r.within_bound);
    EXPECT_EQ(r.per_time.rows.size(), 11u);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

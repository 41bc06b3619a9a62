#pragma once

// Batch experiments behind the command line: run, converge, compare.

#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace qtraj {

struct RunOptions {
    int workers = 0;
    bool emit_trajectories = false;
    bool serial = false; // use the single-threaded reference kernel
};

struct RunResult {
    std::vector<double> times;
    std::vector<CMatrix> mean_states; // empty for exact-chain
    Table ensemble;
    std::vector<Table> trajectories; // only with emit_trajectories
    nlohmann::json summary;
    double wall_seconds = 0.0;
};

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Writes config.json, summary.json, ensemble.csv, mean_state.csv,
// trajectories/ (optional) and timing.json into `dir`. Everything except
// timing.json is a function of the config alone.
void write_run(const ExperimentConfig& config, const RunResult& result,
               const std::filesystem::path& dir);

Table mean_state_table(const std::vector<double>& times, const std::vector<CMatrix>& states);

struct ConvergenceRow {
    double tau = 0.0;
    double probability_error = 0.0; // max |p_recurrence - p_exact| over all records
    double state_error = 0.0;       // median over paths of the path-max trace distance,
                                    // collision vs SME on the same record
    std::optional<double> probability_order;
    std::optional<double> state_order;
};

// Exact chain vs recurrence (convergence.chain_steps collisions) and
// collision vs SME on matched records (convergence.paths trajectories) for
// each tau; orders are slopes against the previous row.
std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& config,
                                              const std::vector<double>& taus,
                                              int workers = 0);
Table convergence_table(const std::vector<ConvergenceRow>& rows);

struct CompareReport {
    Table per_time; // t, trace_distance
    double max_trace_distance = 0.0;
    double bound = 0.0;
    std::string bound_kind;
    bool within_bound = true;
    nlohmann::json to_json() const;
};

// Compares the mean states of two run directories. Throws ConfigError when
// the time grids or dimensions differ.
CompareReport compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

} // namespace qtraj

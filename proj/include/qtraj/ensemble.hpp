#pragma once

// Trajectory ensembles. Trajectory i is a pure function of its index (its
// random stream is keyed by (seed, i)), so ensembles parallelize over indices.
//
// Reduction order is fixed independently of the worker count: trajectories
// are grouped in blocks of `block_size` consecutive indices, each block is
// summed sequentially, and block sums are combined by a pairwise tree. Any
// number of workers therefore produces bit-identical means.

#include "qtraj/linalg.hpp"
#include "qtraj/stats.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace qtraj {

struct TrajectoryRow {
    double t = 0.0;
    double outcome = 0.0;    // eta, zeta or dq of the step ending at t
    double intensity = 0.0;  // nu or mu of the state at t
    double weight_ratio = 0.0;
    std::vector<double> observables;
};

struct TrajectoryOutput {
    std::vector<CMatrix> states;    // assembled state at each output time
    std::vector<double> intensity;  // nu or mu at each output time
    std::vector<double> signal;     // cumulative clicks or photocurrent q
    bool counting = false;
    double integrated_intensity = 0.0; // sum over steps of intensity * dt
    std::size_t clamp_events = 0;
    std::vector<TrajectoryRow> rows; // per step; filled only on request
};

struct EnsembleAccumulator {
    std::size_t n = 0;
    std::vector<CMatrix> state_sum;
    std::vector<std::vector<Moments>> observables; // [output][observable]
    std::vector<Moments> intensity;
    std::vector<Moments> signal;
    Moments integrated_intensity;
    std::map<std::size_t, std::size_t> count_histogram; // final click counts
    std::size_t clamp_events = 0;

    void add(const TrajectoryOutput& out, const std::vector<CMatrix>& ops);
    void merge(const EnsembleAccumulator& o);

    std::vector<CMatrix> mean_states() const;
};

using TrajectoryKernel = std::function<TrajectoryOutput(std::uint64_t index)>;

struct EnsembleOptions {
    std::size_t trajectories = 1;
    std::size_t block_size = 64;
    int workers = 0; // 0: OpenMP default
    bool keep_rows = false;
};

struct EnsembleResult {
    EnsembleAccumulator acc;
    std::vector<std::vector<TrajectoryRow>> rows; // by trajectory index, if kept
};

// OpenMP kernel, dynamic scheduling over blocks.
EnsembleResult run_ensemble(const TrajectoryKernel& kernel, const std::vector<CMatrix>& ops,
                            const EnsembleOptions& opt);

// Single-threaded reference with the same reduction tree.
EnsembleResult run_ensemble_serial(const TrajectoryKernel& kernel,
                                   const std::vector<CMatrix>& ops, const EnsembleOptions& opt);

} // namespace qtraj

#include "qtraj/ensemble.hpp"

#include "qtraj/errors.hpp"

#include <omp.h>

#include <exception>
#include <limits>

namespace qtraj {

void EnsembleAccumulator::add(const TrajectoryOutput& out, const std::vector<CMatrix>& ops) {
    const std::size_t k = out.states.size();
    if (n == 0 && state_sum.empty()) {
        state_sum.reserve(k);
        for (const CMatrix& s : out.states) state_sum.emplace_back(s.rows(), s.cols());
        observables.assign(k, std::vector<Moments>(ops.size()));
        intensity.assign(k, {});
        signal.assign(k, {});
    }
    if (state_sum.size() != k) throw Error("trajectory output length changed within an ensemble");
    for (std::size_t i = 0; i < k; ++i) {
        state_sum[i] += out.states[i];
        for (std::size_t o = 0; o < ops.size(); ++o)
            observables[i][o].add(trace(ops[o] * out.states[i]).real());
        if (i < out.intensity.size()) intensity[i].add(out.intensity[i]);
        if (i < out.signal.size()) signal[i].add(out.signal[i]);
    }
    if (out.counting && !out.signal.empty())
        ++count_histogram[static_cast<std::size_t>(std::llround(out.signal.back()))];
    integrated_intensity.add(out.integrated_intensity);
    clamp_events += out.clamp_events;
    ++n;
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
        *this = o;
        return;
    }
    for (std::size_t i = 0; i < state_sum.size(); ++i) {
        state_sum[i] += o.state_sum[i];
        for (std::size_t j = 0; j < observables[i].size(); ++j)
            observables[i][j].merge(o.observables[i][j]);
        intensity[i].merge(o.intensity[i]);
        signal[i].merge(o.signal[i]);
    }
    integrated_intensity.merge(o.integrated_intensity);
    for (const auto& [v, c] : o.count_histogram) count_histogram[v] += c;
    clamp_events += o.clamp_events;
    n += o.n;
}

std::vector<CMatrix> EnsembleAccumulator::mean_states() const {
    std::vector<CMatrix> out;
    out.reserve(state_sum.size());
    for (const CMatrix& s : state_sum) out.push_back(s * cplx(1.0 / static_cast<double>(n)));
    return out;
}

namespace {

EnsembleAccumulator tree_merge(std::vector<EnsembleAccumulator>& blocks, std::size_t lo,
                               std::size_t hi) {
    if (hi - lo == 1) return std::move(blocks[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    EnsembleAccumulator left = tree_merge(blocks, lo, mid);
    left.merge(tree_merge(blocks, mid, hi));
    return left;
}

struct BlockFailure {
    std::uint64_t index = std::numeric_limits<std::uint64_t>::max();
    std::exception_ptr error;
};

void run_block(const TrajectoryKernel& kernel, const std::vector<CMatrix>& ops,
               const EnsembleOptions& opt, std::size_t b, EnsembleAccumulator& acc,
               std::vector<std::vector<TrajectoryRow>>& rows, BlockFailure& fail) {
    const std::size_t lo = b * opt.block_size;
    const std::size_t hi = std::min(opt.trajectories, lo + opt.block_size);
    for (std::size_t i = lo; i < hi; ++i) {
        try {
            TrajectoryOutput out = kernel(i);
            acc.add(out, ops);
            if (opt.keep_rows) rows[i] = std::move(out.rows);
        } catch (...) {
            fail.index = i;
            fail.error = std::current_exception();
            return;
        }
    }
}

EnsembleResult finish(std::vector<EnsembleAccumulator>& blocks, std::vector<BlockFailure>& fails,
                      std::vector<std::vector<TrajectoryRow>>& rows) {
    const BlockFailure* first = nullptr;
    for (const auto& f : fails)
        if (f.error && (!first || f.index < first->index)) first = &f;
    if (first) std::rethrow_exception(first->error);
    EnsembleResult r;
    if (!blocks.empty()) r.acc = tree_merge(blocks, 0, blocks.size());
    r.rows = std::move(rows);
    return r;
}

void check(const EnsembleOptions& opt) {
    if (opt.trajectories == 0) throw ConfigError("ensemble needs at least one trajectory");
    if (opt.block_size == 0) throw ConfigError("ensemble block size must be positive");
}

} // namespace

EnsembleResult run_ensemble(const TrajectoryKernel& kernel, const std::vector<CMatrix>& ops,
                            const EnsembleOptions& opt) {
    check(opt);
    const std::size_t n_blocks = (opt.trajectories + opt.block_size - 1) / opt.block_size;
    std::vector<EnsembleAccumulator> blocks(n_blocks);
    std::vector<BlockFailure> fails(n_blocks);
    std::vector<std::vector<TrajectoryRow>> rows(opt.keep_rows ? opt.trajectories : 0);
    const int workers = opt.workers > 0 ? opt.workers : omp_get_max_threads();
    const long long nb = static_cast<long long>(n_blocks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long long b = 0; b < nb; ++b) {
        run_block(kernel, ops, opt, static_cast<std::size_t>(b), blocks[b], rows, fails[b]);
    }
    return finish(blocks, fails, rows);
}

EnsembleResult run_ensemble_serial(const TrajectoryKernel& kernel,
                                   const std::vector<CMatrix>& ops, const EnsembleOptions& opt) {
    check(opt);
    const std::size_t n_blocks = (opt.trajectories + opt.block_size - 1) / opt.block_size;
    std::vector<EnsembleAccumulator> blocks(n_blocks);
    std::vector<BlockFailure> fails(n_blocks);
    std::vector<std::vector<TrajectoryRow>> rows(opt.keep_rows ? opt.trajectories : 0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        run_block(kernel, ops, opt, b, blocks[b], rows, fails[b]);
        if (fails[b].error) break;
    }
    return finish(blocks, fails, rows);
}

} // namespace qtraj

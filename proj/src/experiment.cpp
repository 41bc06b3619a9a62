#include "qtraj/experiment.hpp"

#include "qtraj/cavity.hpp"
#include "qtraj/collision.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/exact_chain.hpp"
#include "qtraj/sme.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qtraj {

using nlohmann::json;

namespace {

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const CMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> observable_values(const std::vector<Observable>& obs, const CMatrix& rho) {
    std::vector<double> v;
    v.reserve(obs.size());
    for (const auto& o : obs) v.push_back(trace(o.op * rho).real());
    return v;
}

std::vector<CMatrix> observable_ops(const ExperimentConfig& c) {
    std::vector<CMatrix> ops;
    for (const auto& o : c.observables) ops.push_back(o.op);
    return ops;
}

// Marks which step indices are output times.
std::vector<bool> output_mask(const ExperimentConfig& c) {
    std::vector<bool> mask(c.grid.steps + 1, false);
    for (std::size_t j : c.output_steps()) mask[j] = true;
    return mask;
}

std::vector<double> output_times(const ExperimentConfig& c) {
    std::vector<double> t;
    for (std::size_t j : c.output_steps()) t.push_back(c.grid.time(j));
    return t;
}

Table trajectory_table(const ExperimentConfig& c, const char* intensity_name,
                       std::vector<TrajectoryRow>&& rows) {
    Table t;
    t.columns.push_back("t");
    for (const auto& o : c.observables) t.columns.push_back(o.name);
    t.columns.push_back(intensity_name);
    t.columns.push_back("outcome");
    t.columns.push_back("weight_ratio");
    for (auto& r : rows) {
        std::vector<double> line{r.t};
        line.insert(line.end(), r.observables.begin(), r.observables.end());
        line.push_back(r.intensity);
        line.push_back(r.outcome);
        line.push_back(r.weight_ratio);
        t.rows.push_back(std::move(line));
    }
    return t;
}

std::vector<int> record_bits(std::size_t rec, std::size_t n, Scheme scheme) {
    std::vector<int> o;
    for (std::size_t k = 0; k < n; ++k) {
        const int bit = static_cast<int>((rec >> (n - 1 - k)) & 1u);
        o.push_back(scheme == Scheme::Counting ? bit : 2 * bit - 1);
    }
    return o;
}

// Record probability from the collision recurrence; 0 when some step of the
// record has zero weight.
double recurrence_probability(const CollisionEngine& engine, const std::vector<int>& outcomes) {
    try {
        return std::exp(replay_trajectory(engine, outcomes).record.log_weight);
    } catch (const ZeroNorm&) {
        return 0.0;
    }
}

[[noreturn]] void rethrow_at(std::uint64_t index, std::size_t step) {
    try {
        throw;
    } catch (const TrajectoryFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw TrajectoryFailure("trajectory " + std::to_string(index) + ", step " +
                                    std::to_string(step) + ": " + e.what(),
                                index, step);
    }
}

// Shared driver: `advance` performs step j and returns {outcome, weight ratio,
// signal increment, clamped}; `snapshot` gives the current assembled state
// and intensity.
struct StepInfo {
    double outcome = 0.0;
    double weight_ratio = 1.0;
    double signal = 0.0;
    bool clamped = false;
};

template <class Advance, class Snapshot>
TrajectoryOutput drive_trajectory(const ExperimentConfig& c, const std::vector<bool>& mask,
                                  std::uint64_t index, bool keep_rows, bool counting,
                                  Advance&& advance, Snapshot&& snapshot) {
    TrajectoryOutput out;
    out.counting = counting;
    double signal = 0.0;
    auto record = [&](std::size_t j, const StepInfo* info) {
        const bool want_output = mask[j];
        if (!want_output && !keep_rows) return;
        auto [rho, intensity] = snapshot(j);
        if (want_output) {
            out.states.push_back(rho);
            out.intensity.push_back(intensity);
            out.signal.push_back(signal);
        }
        if (keep_rows) {
            TrajectoryRow row;
            row.t = c.grid.time(j);
            row.intensity = intensity;
            row.outcome = info ? info->outcome : 0.0;
            row.weight_ratio = info ? info->weight_ratio : 1.0;
            row.observables = observable_values(c.observables, rho);
            out.rows.push_back(std::move(row));
        }
    };
    record(0, nullptr);
    for (std::size_t j = 0; j < c.grid.steps; ++j) {
        try {
            const StepInfo info = advance(j, out.integrated_intensity);
            signal += info.signal;
            if (info.clamped) ++out.clamp_events;
            record(j + 1, &info);
        } catch (...) {
            rethrow_at(index, j);
        }
    }
    return out;
}

EnsembleResult run_kernel(const TrajectoryKernel& kernel, const ExperimentConfig& c,
                          const RunOptions& opt) {
    EnsembleOptions eo;
    eo.trajectories = c.trajectories;
    eo.workers = opt.workers;
    eo.keep_rows = opt.emit_trajectories;
    const auto ops = observable_ops(c);
    return opt.serial ? run_ensemble_serial(kernel, ops, eo) : run_ensemble(kernel, ops, eo);
}

void fill_from_ensemble(const ExperimentConfig& c, const EnsembleResult& ens, RunResult& r,
                        const char* intensity_name, const char* signal_name) {
    const auto& acc = ens.acc;
    r.mean_states = acc.mean_states();
    r.ensemble.columns.push_back("t");
    for (const auto& o : c.observables) {
        r.ensemble.columns.push_back(o.name + "_mean");
        r.ensemble.columns.push_back(o.name + "_stderr");
    }
    r.ensemble.columns.push_back(std::string(intensity_name) + "_mean");
    r.ensemble.columns.push_back(std::string(signal_name) + "_mean");
    r.ensemble.columns.push_back(std::string(signal_name) + "_stderr");
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::vector<double> row{r.times[k]};
        for (std::size_t o = 0; o < c.observables.size(); ++o) {
            row.push_back(acc.observables[k][o].mean());
            row.push_back(acc.observables[k][o].standard_error());
        }
        row.push_back(acc.intensity[k].mean());
        row.push_back(acc.signal[k].mean());
        row.push_back(acc.signal[k].standard_error());
        r.ensemble.rows.push_back(std::move(row));
    }
    if (!ens.rows.empty()) {
        for (auto rows : ens.rows)
            r.trajectories.push_back(trajectory_table(c, intensity_name, std::move(rows)));
    }

    json& s = r.summary;
    s["clamp_events"] = acc.clamp_events;
    const Moments& last = acc.signal.back();
    const json check = {{"signal_mean", last.mean()},
                        {"signal_stderr", last.standard_error()},
                        {"intensity_integral_mean", acc.integrated_intensity.mean()},
                        {"intensity_integral_stderr", acc.integrated_intensity.standard_error()}};
    s["martingale_check"] = check;
    if (!acc.count_histogram.empty()) {
        json hist = json::object();
        for (const auto& [k, n] : acc.count_histogram) hist[std::to_string(k)] = n;
        s["count_histogram"] = hist;
        const bool free_field = frobenius_norm(c.model.coupling) == 0.0 && c.drive.c_beta == cplx{};
        if (free_field) {
            const double lambda =
                squared_norm_integral(c.drive.alpha, overlap_panels(c.grid));
            if (lambda > 0.0) {
                const ChiSquareResult chi = poisson_chi_square(acc.count_histogram, lambda);
                s["poisson_check"] = {{"lambda", lambda},     {"chi_square", chi.statistic},
                                      {"dof", chi.dof},       {"bins", chi.bins},
                                      {"p_value", chi.p_value}};
            }
        }
    }
}

void run_collision(const ExperimentConfig& c, const RunOptions& opt, RunResult& r) {
    const Scheme scheme = c.scheme == SchemeKind::Counting ? Scheme::Counting : Scheme::Homodyne;
    const CollisionEngine engine(c.model, c.drive, c.grid, scheme);
    const auto mask = output_mask(c);
    const double sq = std::sqrt(c.grid.tau);
    TrajectoryKernel kernel = [&](std::uint64_t i) {
        TrajectoryRng rng(c.seed, i);
        BranchState b = engine.initial_state();
        MeasurementRecord rec;
        auto advance = [&](std::size_t, double& integral) {
            integral += engine.intensity(b) * c.grid.tau;
            const std::size_t before = rec.clamp_events;
            const StepResult s = engine.step(b, rng, &rec);
            rec.outcomes.clear();
            rec.probabilities.clear();
            StepInfo info;
            info.outcome = s.outcome;
            info.weight_ratio = s.weight_ratio;
            info.signal = scheme == Scheme::Counting ? s.outcome : s.outcome * sq;
            info.clamped = rec.clamp_events != before;
            return info;
        };
        auto snapshot = [&](std::size_t) {
            return std::pair{engine.conditional_density(b).assembled(), engine.intensity(b)};
        };
        return drive_trajectory(c, mask, i, opt.emit_trajectories, scheme == Scheme::Counting,
                                advance, snapshot);
    };
    const EnsembleResult ens = run_kernel(kernel, c, opt);
    if (scheme == Scheme::Counting) fill_from_ensemble(c, ens, r, "nu", "clicks");
    else fill_from_ensemble(c, ens, r, "mu", "q");
}

void run_sme(const ExperimentConfig& c, const RunOptions& opt, RunResult& r) {
    const bool counting = c.scheme == SchemeKind::Counting;
    const SmeSchedule schedule(c.model, c.drive, c.grid);
    const auto mask = output_mask(c);
    auto intensity = [&](const ConditionalDensity& cd, std::size_t j) {
        const double t = c.grid.time(j);
        const cplx a = c.drive.alpha(t), b = c.drive.beta(t);
        return counting ? jump_intensities(c.model, cd, a, b).total
                        : diffusive_intensities(c.model, cd, a, b).total;
    };
    TrajectoryKernel kernel = [&](std::uint64_t i) {
        TrajectoryRng rng(c.seed, i);
        ConditionalDensity cd = schedule.initial_state();
        auto advance = [&](std::size_t j, double& integral) {
            StepInfo info;
            if (counting) {
                const JumpStep s = jump_sme_step(c.model, cd, schedule.at(j), rng);
                integral += s.intensity * c.grid.tau;
                info.outcome = s.dn;
                info.signal = s.dn;
                info.weight_ratio = s.raw_trace;
                info.clamped = s.clamped;
            } else {
                const DiffusiveStep s = diffusive_sme_step(c.model, cd, schedule.at(j), rng, c.noise);
                integral += s.intensity * c.grid.tau;
                info.outcome = s.dq;
                info.signal = s.dq;
                info.weight_ratio = s.raw_trace;
            }
            return info;
        };
        auto snapshot = [&](std::size_t j) { return std::pair{cd.assembled(), intensity(cd, j)}; };
        return drive_trajectory(c, mask, i, opt.emit_trajectories, counting, advance, snapshot);
    };
    const EnsembleResult ens = run_kernel(kernel, c, opt);
    if (counting) fill_from_ensemble(c, ens, r, "nu", "clicks");
    else fill_from_ensemble(c, ens, r, "mu", "q");
}

void run_cavity_trajectories(const ExperimentConfig& c, const RunOptions& opt, RunResult& r) {
    const bool counting = c.measurement == Measurement::Counting;
    const CavityTrajectory ct(*c.cavity, c.drive, c.grid);
    const auto mask = output_mask(c);
    TrajectoryKernel kernel = [&](std::uint64_t i) {
        TrajectoryRng rng(c.seed, i);
        GCoefficients g = ct.initial();
        auto advance = [&](std::size_t, double& integral) {
            StepInfo info;
            if (counting) {
                integral += ct.counting_intensity(g) * c.grid.tau;
                info.outcome = ct.g_counting_step(g, rng);
            } else {
                integral += ct.homodyne_intensity(g) * c.grid.tau;
                info.outcome = ct.g_homodyne_step(g, rng);
            }
            info.signal = info.outcome;
            return info;
        };
        auto snapshot = [&](std::size_t) {
            return std::pair{ct.state(g),
                             counting ? ct.counting_intensity(g) : ct.homodyne_intensity(g)};
        };
        return drive_trajectory(c, mask, i, opt.emit_trajectories, counting, advance, snapshot);
    };
    const EnsembleResult ens = run_kernel(kernel, c, opt);
    if (counting) fill_from_ensemble(c, ens, r, "nu", "clicks");
    else fill_from_ensemble(c, ens, r, "mu", "q");
}

void fill_deterministic(const ExperimentConfig& c, RunResult& r, const std::vector<double>& nu) {
    r.ensemble.columns.push_back("t");
    for (const auto& o : c.observables) {
        r.ensemble.columns.push_back(o.name + "_mean");
        r.ensemble.columns.push_back(o.name + "_stderr");
    }
    if (!nu.empty()) r.ensemble.columns.push_back("nu");
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::vector<double> row{r.times[k]};
        for (double v : observable_values(c.observables, r.mean_states[k])) {
            row.push_back(v);
            row.push_back(0.0);
        }
        if (!nu.empty()) row.push_back(nu[k]);
        r.ensemble.rows.push_back(std::move(row));
    }
}

void run_master(const ExperimentConfig& c, RunResult& r) {
    const auto mask = output_mask(c);
    AprioriState ap = initial_apriori(c.model, c.drive, overlap_panels(c.grid));
    const cplx k0 = trace(ap.varrho_ab);
    std::vector<double> nu;
    double worst_trace = 0.0, worst_ab = 0.0;
    auto snap = [&] {
        ConditionalDensity cd{ap.varrho_aa, ap.varrho_ab, ap.varrho_bb, c.drive.c_alpha,
                              c.drive.c_beta, ap.t};
        r.mean_states.push_back(cd.assembled());
        nu.push_back(jump_intensities(c.model, cd, c.drive.alpha(ap.t), c.drive.beta(ap.t)).total);
    };
    if (mask[0]) snap();
    for (std::size_t j = 0; j < c.grid.steps; ++j) {
        ap = master_step(c.model, ap, c.drive, c.grid.tau);
        worst_trace = std::max({worst_trace, std::abs(trace(ap.varrho_aa) - 1.0),
                                std::abs(trace(ap.varrho_bb) - 1.0)});
        worst_ab = std::max(worst_ab, std::abs(trace(ap.varrho_ab) - k0));
        if (mask[j + 1]) snap();
    }
    fill_deterministic(c, r, nu);
    r.summary["apriori_identities"] = {{"max_branch_trace_error", worst_trace},
                                       {"max_cross_trace_drift", worst_ab},
                                       {"overlap", complex_json(k0)}};
}

void run_cavity_apriori(const ExperimentConfig& c, RunResult& r) {
    for (double t : r.times) r.mean_states.push_back(apriori_state(*c.cavity, c.drive, t));
    fill_deterministic(c, r, {});
}

void run_exact_chain(const ExperimentConfig& c, RunResult& r) {
    const Scheme scheme = c.measurement == Measurement::Homodyne ? Scheme::Homodyne : Scheme::Counting;
    const std::size_t n = c.grid.steps;
    if (n > c.max_qubits) {
        throw ConfigError("grid: exact-chain needs at most " + std::to_string(c.max_qubits) +
                          " collisions, got " + std::to_string(n));
    }
    const CollisionEngine engine(c.model, c.drive, c.grid, scheme);
    for (std::size_t k = 0; k < n; ++k) r.ensemble.columns.push_back("o" + std::to_string(k));
    r.ensemble.columns.insert(r.ensemble.columns.end(), {"p_exact", "p_recurrence", "abs_gap"});
    double sum_exact = 0.0, sum_rec = 0.0, max_gap = 0.0;
    for (std::size_t rec = 0; rec < (std::size_t{1} << n); ++rec) {
        const std::vector<int> outcomes = record_bits(rec, n, scheme);
        std::vector<double> row(outcomes.begin(), outcomes.end());
        const double pe = exact_chain(c.drive, c.model, c.grid, scheme, outcomes, c.max_qubits).probability;
        const double pr = recurrence_probability(engine, outcomes);
        sum_exact += pe;
        sum_rec += pr;
        max_gap = std::max(max_gap, std::abs(pe - pr));
        row.insert(row.end(), {pe, pr, std::abs(pe - pr)});
        r.ensemble.rows.push_back(std::move(row));
    }
    r.summary["exact_chain"] = {{"measurement", to_string(scheme)},
                                {"records", r.ensemble.rows.size()},
                                {"sum_exact", sum_exact},
                                {"sum_recurrence", sum_rec},
                                {"max_abs_gap", max_gap}};
}

} // namespace

RunResult run_experiment(const ExperimentConfig& c, const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    RunResult r;
    r.times = output_times(c);
    json& s = r.summary;
    s["spec_version"] = c.spec_version;
    s["scheme"] = to_string(c.scheme);
    const bool stochastic_scheme = c.scheme == SchemeKind::Counting || c.scheme == SchemeKind::Homodyne;
    if (stochastic_scheme) s["integrator"] = c.integrator == Integrator::Collision ? "collision" : "sme";
    if (c.scheme == SchemeKind::Homodyne && c.integrator == Integrator::Sme)
        s["noise"] = c.noise == NoiseMode::Wiener ? "wiener" : "binary";
    if (c.scheme == SchemeKind::CavityAnalytic || c.scheme == SchemeKind::ExactChain)
        s["measurement"] = c.measurement == Measurement::None       ? "none"
                           : c.measurement == Measurement::Counting ? "counting"
                                                                    : "homodyne";
    s["seed"] = c.seed;
    const bool stochastic =
        stochastic_scheme ||
        (c.scheme == SchemeKind::CavityAnalytic && c.measurement != Measurement::None);
    s["trajectories"] = stochastic ? c.trajectories : 1;
    s["tau"] = c.grid.tau;
    s["steps"] = c.grid.steps;
    s["horizon"] = c.horizon;
    s["dimension"] = c.model.dim;
    s["c_alpha"] = complex_json(c.drive.c_alpha);
    s["c_beta"] = complex_json(c.drive.c_beta);
    s["normalization_residual"] = normalization_residual(c.drive, overlap_panels(c.grid));

    switch (c.scheme) {
    case SchemeKind::Counting:
    case SchemeKind::Homodyne:
        if (c.integrator == Integrator::Collision) run_collision(c, opt, r);
        else run_sme(c, opt, r);
        break;
    case SchemeKind::Master: run_master(c, r); break;
    case SchemeKind::CavityAnalytic:
        if (c.measurement == Measurement::None) run_cavity_apriori(c, r);
        else run_cavity_trajectories(c, opt, r);
        break;
    case SchemeKind::ExactChain: run_exact_chain(c, r); break;
    }

    if (!r.mean_states.empty()) {
        s["output_times"] = r.times;
        s["final_state"] = matrix_json(r.mean_states.back());
        s["final_trace"] = trace(r.mean_states.back()).real();
        json obs = json::array();
        const auto& last = r.ensemble.rows.back();
        for (std::size_t o = 0; o < c.observables.size(); ++o) {
            obs.push_back({{"name", c.observables[o].name},
                           {"final_mean", last[1 + 2 * o]},
                           {"final_stderr", last[2 + 2 * o]}});
        }
        s["observables"] = obs;
    }
    r.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

Table mean_state_table(const std::vector<double>& times, const std::vector<CMatrix>& states) {
    Table t;
    t.columns.push_back("t");
    if (states.empty()) return t;
    const std::size_t d = states.front().rows();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            t.columns.push_back("re_" + std::to_string(i) + "_" + std::to_string(j));
            t.columns.push_back("im_" + std::to_string(i) + "_" + std::to_string(j));
        }
    for (std::size_t k = 0; k < states.size(); ++k) {
        std::vector<double> row{times[k]};
        for (cplx z : states[k].values()) {
            row.push_back(z.real());
            row.push_back(z.imag());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_run(const ExperimentConfig& c, const RunResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "config.json", c.document.dump(2) + "\n");
    write_text(dir / "summary.json", r.summary.dump(2) + "\n");
    write_table(dir / "ensemble.csv", r.ensemble);
    if (!r.mean_states.empty()) write_table(dir / "mean_state.csv", mean_state_table(r.times, r.mean_states));
    if (!r.trajectories.empty()) {
        const auto sub = dir / "trajectories";
        std::filesystem::create_directories(sub);
        for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "trajectory_%06zu.csv", i);
            write_table(sub / name, r.trajectories[i]);
        }
    }
    const json timing = {{"wall_seconds", r.wall_seconds}};
    write_text(dir / "timing.json", timing.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> slope(double e0, double e1, double t0, double t1) {
    // Round-off level errors carry no order information.
    if (!(e0 > 1e-13) || !(e1 > 1e-13)) return std::nullopt;
    return std::log(e0 / e1) / std::log(t0 / t1);
}

} // namespace

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& c,
                                              const std::vector<double>& taus, int workers) {
    if (taus.empty()) throw ConfigError("convergence.taus: empty list");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) throw ConfigError("convergence.taus: values must be positive");
        if (i && !(taus[i] < taus[i - 1]))
            throw ConfigError("convergence.taus: values must be strictly decreasing");
    }
    const Scheme scheme = c.scheme == SchemeKind::Homodyne ||
                                  (c.scheme != SchemeKind::Counting && c.measurement == Measurement::Homodyne)
                              ? Scheme::Homodyne
                              : Scheme::Counting;
    const std::size_t n = c.convergence.chain_steps;
    if (n > c.max_qubits) throw ConfigError("convergence.chain_steps exceeds max_qubits");

    std::vector<ConvergenceRow> rows;
    for (double tau : taus) {
        ConvergenceRow row;
        row.tau = tau;

        // Exact chain against the recurrence on every record.
        const GridSpec chain_grid{tau, n};
        const CollisionEngine chain_engine(c.model, c.drive, chain_grid, scheme);
        for (std::size_t rec = 0; rec < (std::size_t{1} << n); ++rec) {
            const std::vector<int> o = record_bits(rec, n, scheme);
            const double pe = exact_chain(c.drive, c.model, chain_grid, scheme, o, c.max_qubits).probability;
            const double pr = recurrence_probability(chain_engine, o);
            row.probability_error = std::max(row.probability_error, std::abs(pe - pr));
        }

        // Collision trajectories replayed through the SME on the same grid.
        const GridSpec grid = GridSpec::from_horizon(c.horizon, tau);
        const CollisionEngine engine(c.model, c.drive, grid, scheme);
        const SmeSchedule schedule(c.model, c.drive, grid);
        std::vector<double> err(c.convergence.paths, 0.0);
        const long long paths = static_cast<long long>(c.convergence.paths);
        std::vector<std::exception_ptr> errors(c.convergence.paths);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers > 0 ? workers : omp_get_max_threads())
        for (long long p = 0; p < paths; ++p) {
            try {
                const Trajectory tr = run_trajectory(engine, c.seed, static_cast<std::uint64_t>(p), true);
                // Max over the path: with an even cat and a complete counting
                // record the final state is parity-fixed and agrees exactly.
                ConditionalDensity cd = schedule.initial_state();
                double worst = 0.0;
                for (std::size_t j = 0; j < grid.steps; ++j) {
                    const int o = tr.record.outcomes[j];
                    if (scheme == Scheme::Counting) jump_sme_step_with(c.model, cd, schedule.at(j), o);
                    else diffusive_sme_step_with(c.model, cd, schedule.at(j), o * std::sqrt(tau));
                    const CMatrix a = engine.conditional_density(tr.history[j + 1]).assembled();
                    worst = std::max(worst, trace_distance(a, cd.assembled()));
                }
                err[p] = worst;
            } catch (...) {
                errors[p] = std::current_exception();
            }
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        // Median: a click from a near-dark state makes single paths sensitive.
        if (!err.empty()) {
            std::sort(err.begin(), err.end());
            const std::size_t m = err.size() / 2;
            row.state_error = err.size() % 2 ? err[m] : 0.5 * (err[m - 1] + err[m]);
        }

        if (!rows.empty()) {
            const ConvergenceRow& prev = rows.back();
            row.probability_order = slope(prev.probability_error, row.probability_error, prev.tau, tau);
            row.state_order = slope(prev.state_error, row.state_error, prev.tau, tau);
        }
        rows.push_back(row);
    }
    return rows;
}

Table convergence_table(const std::vector<ConvergenceRow>& rows) {
    Table t;
    t.columns = {"tau", "probability_error", "probability_order", "state_error", "state_order"};
    const double none = std::nan("");
    for (const auto& r : rows) {
        t.rows.push_back({r.tau, r.probability_error, r.probability_order.value_or(none),
                          r.state_error, r.state_order.value_or(none)});
    }
    return t;
}

// ---------------------------------------------------------------------------

json CompareReport::to_json() const {
    return {{"max_trace_distance", max_trace_distance},
            {"bound", bound},
            {"bound_kind", bound_kind},
            {"within_bound", within_bound}};
}

namespace {

json read_summary(const std::filesystem::path& dir) {
    std::ifstream in(dir / "summary.json");
    if (!in) throw ConfigError((dir / "summary.json").string() + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), (dir / "summary.json").string());
}

std::vector<CMatrix> states_from_table(const Table& t, const std::string& source) {
    const std::size_t entries = (t.columns.size() - 1) / 2;
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(entries))));
    if (d * d != entries || t.columns.size() != 1 + 2 * entries)
        throw ConfigError(source + ": malformed mean_state table");
    std::vector<CMatrix> out;
    for (const auto& row : t.rows) {
        CMatrix m(d, d);
        for (std::size_t k = 0; k < entries; ++k) m.values()[k] = {row[1 + 2 * k], row[2 + 2 * k]};
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace

CompareReport compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
    const Table ta = read_table(a / "mean_state.csv");
    const Table tb = read_table(b / "mean_state.csv");
    if (ta.columns != tb.columns) throw ConfigError("compare: state dimensions differ");
    if (ta.rows.size() != tb.rows.size()) throw ConfigError("compare: time grids differ in length");
    for (std::size_t k = 0; k < ta.rows.size(); ++k) {
        const double x = ta.rows[k][0], y = tb.rows[k][0];
        if (std::abs(x - y) > 1e-9 * std::max(1.0, std::abs(x)))
            throw ConfigError("compare: time grids differ at row " + std::to_string(k + 1));
    }
    const auto sa = states_from_table(ta, a.string());
    const auto sb = states_from_table(tb, b.string());
    const json ja = read_summary(a), jb = read_summary(b);
    const auto ma = ja.value("trajectories", std::size_t{1});
    const auto mb = jb.value("trajectories", std::size_t{1});
    const bool stoch_a = ma > 1, stoch_b = mb > 1;

    CompareReport rep;
    if (stoch_a && stoch_b) {
        if (ma == mb && ja.value("seed", 0ull) == jb.value("seed", 0ull)) {
            rep.bound = 1e-3;
            rep.bound_kind = "pathwise (shared seed)";
        } else {
            rep.bound = 5.0 * std::sqrt(1.0 / static_cast<double>(ma) + 1.0 / static_cast<double>(mb));
            rep.bound_kind = "5*sqrt(1/M_a + 1/M_b)";
        }
    } else if (stoch_a || stoch_b) {
        const double m = static_cast<double>(stoch_a ? ma : mb);
        rep.bound = 5.0 / std::sqrt(m);
        rep.bound_kind = "5/sqrt(M)";
    } else {
        rep.bound = 1e-4;
        rep.bound_kind = "deterministic";
    }
    rep.per_time.columns = {"t", "trace_distance", "bound"};
    for (std::size_t k = 0; k < sa.size(); ++k) {
        const double d = trace_distance(sa[k], sb[k]);
        rep.max_trace_distance = std::max(rep.max_trace_distance, d);
        rep.per_time.rows.push_back({ta.rows[k][0], d, rep.bound});
    }
    rep.within_bound = rep.max_trace_distance <= rep.bound;
    return rep;
}

} // namespace qtraj

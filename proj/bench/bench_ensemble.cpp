// Serial reference vs OpenMP ensemble on the cat-driven qubit.
#include "qtraj/config.hpp"
#include "qtraj/experiment.hpp"

#include <benchmark/benchmark.h>

namespace {

qtraj::ExperimentConfig config(const char* scheme, const char* integrator) {
    nlohmann::json doc = {
        {"spec_version", "1.0"},
        {"scheme", scheme},
        {"integrator", integrator},
        {"model",
         {{"dim", 2},
          {"hamiltonian", {{"preset", "sz"}, {"scale", 0.5}}},
          {"coupling", "sm"},
          {"initial_state", "ground"}}},
        {"drive",
         {{"c_alpha", 1},
          {"c_beta", 1},
          {"normalize", true},
          {"alpha", {{"preset", "constant"}, {"amplitude", 1.0}}},
          {"beta", {{"preset", "constant"}, {"amplitude", -1.0}}}}},
        {"grid", {{"horizon", 2.0}, {"tau", 1e-3}}},
        {"output_every", 100},
        {"trajectories", 256},
        {"seed", 7},
        {"observables", {"sz", "sx"}},
    };
    return qtraj::parse_config(doc);
}

void run(benchmark::State& state, const char* scheme, const char* integrator, bool serial) {
    const qtraj::ExperimentConfig c = config(scheme, integrator);
    qtraj::RunOptions opt;
    opt.serial = serial;
    for (auto _ : state) {
        auto r = qtraj::run_experiment(c, opt);
        benchmark::DoNotOptimize(r.mean_states);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c.trajectories));
}

} // namespace

BENCHMARK_CAPTURE(run, collision_counting_serial, "counting", "collision", true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run, collision_counting_openmp, "counting", "collision", false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run, sme_homodyne_serial, "homodyne", "sme", true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run, sme_homodyne_openmp, "homodyne", "sme", false)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include "qtraj/config.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/experiment.hpp"
#include "qtraj/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string output;
};

qtraj::ExperimentConfig load(const Common& o) {
    qtraj::ExperimentConfig c = qtraj::load_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
        c.document["seed"] = *o.seed;
    }
    if (!o.output.empty()) c.output_dir = o.output;
    return c;
}

int run(const Common& o, bool emit) {
    const qtraj::ExperimentConfig c = load(o);
    qtraj::RunOptions opt;
    opt.workers = o.workers;
    opt.emit_trajectories = emit;
    const qtraj::RunResult r = qtraj::run_experiment(c, opt);
    qtraj::write_run(c, r, c.output_dir);
    std::cout << "wrote " << c.output_dir.string() << " (" << r.wall_seconds << " s)\n";
    return 0;
}

int converge(const Common& o, std::vector<double> taus) {
    const qtraj::ExperimentConfig c = load(o);
    if (taus.empty()) taus = c.convergence.taus;
    const auto rows = qtraj::convergence_study(c, taus, o.workers);
    const qtraj::Table t = qtraj::convergence_table(rows);
    std::filesystem::create_directories(c.output_dir);
    qtraj::write_table(c.output_dir / "convergence.csv", t);
    std::cout << qtraj::to_csv(t);
    return 0;
}

int compare(const std::string& a, const std::string& b, const std::string& out) {
    const qtraj::CompareReport rep = qtraj::compare_runs(a, b);
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        qtraj::write_table(std::filesystem::path(out) / "compare.csv", rep.per_time);
        qtraj::write_text(std::filesystem::path(out) / "compare.json", rep.to_json().dump(2) + "\n");
    }
    std::cout << rep.to_json().dump(2) << "\n";
    return 0;
}

int validate(const Common& o) {
    const qtraj::ExperimentConfig c = load(o);
    std::cout << "ok: " << qtraj::to_string(c.scheme) << ", " << c.grid.steps << " steps, tau "
              << c.grid.tau << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum trajectories driven by cat-state fields"};
    app.require_subcommand(1);

    Common common;
    bool emit = false;
    std::vector<double> taus;
    std::string run_a, run_b, compare_out;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", common.config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "override the master seed");
        sub->add_option("--workers", common.workers, "worker threads (0 = all)")->check(CLI::NonNegativeNumber);
        sub->add_option("--output", common.output, "output directory");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment");
    add_common(run_cmd);
    run_cmd->add_flag("--emit-trajectories", emit, "write per-trajectory CSVs");

    CLI::App* conv_cmd = app.add_subcommand("converge", "convergence study over tau");
    add_common(conv_cmd);
    conv_cmd->add_option("--taus", taus, "decreasing step sizes")->delimiter(',');

    CLI::App* cmp_cmd = app.add_subcommand("compare", "compare two run directories");
    cmp_cmd->add_option("run_a", run_a)->required()->check(CLI::ExistingDirectory);
    cmp_cmd->add_option("run_b", run_b)->required()->check(CLI::ExistingDirectory);
    cmp_cmd->add_option("--output", compare_out, "write compare.csv and compare.json here");

    CLI::App* val_cmd = app.add_subcommand("validate", "parse and check a config");
    add_common(val_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) return run(common, emit);
        if (*conv_cmd) return converge(common, taus);
        if (*cmp_cmd) return compare(run_a, run_b, compare_out);
        return validate(common);
    } catch (const qtraj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qtraj::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const qtraj::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

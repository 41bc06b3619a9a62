#pragma once

// Experiment configuration (single JSON document).
//
// {
//   "spec_version": "1.0",
//   "scheme": "counting" | "homodyne" | "master" | "exact-chain" | "cavity-analytic",
//   "integrator": "collision" | "sme",          counting/homodyne only, default collision
//   "noise": "wiener" | "binary",               homodyne sme only
//   "measurement": "none" | "counting" | "homodyne",   cavity-analytic only
//   "model": {...} | "path/to/model.json",
//   "drive": {"c_alpha": [re, im], "c_beta": [re, im], "alpha": {...}, "beta": {...},
//             "normalize": false},
//   "grid": {"horizon": T, "tau": 0.001},
//   "output_every": 100, "trajectories": 1000, "seed": 1,
//   "observables": ["sz", "sx"],
//   "output": "runs/example",
//   "convergence": {"taus": [...], "chain_steps": 6, "paths": 20}
// }
//
// Model: {"dim": 2, "hamiltonian": M, "coupling": M, "initial_state": V} or
// {"cavity": {"omega0": 5, "gamma": 1, "u": [1, 0], "n_max": 30}}.
// A matrix M is a preset name, {"preset": name, "scale": s}, {"terms": [...]}
// (a sum), or rows of entries; entries and scalars are numbers or [re, im].
// A vector V is a list of entries, {"basis": k}, {"coherent": [re, im]}, or
// one of "ground", "excited", "plus", "minus".
// Waveforms: {"preset": "zero" | "constant" | "gaussian" | "exponential" |
// "chirp" | "sampled", "amplitude": s, ...} with center/width, rate,
// omega/chirp_rate, or dt/samples.

#include "qtraj/cavity.hpp"
#include "qtraj/model.hpp"
#include "qtraj/sme.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qtraj {

inline constexpr const char* kSpecVersion = "1.0";

enum class SchemeKind { Counting, Homodyne, Master, ExactChain, CavityAnalytic };
enum class Integrator { Collision, Sme };
enum class Measurement { None, Counting, Homodyne };

const char* to_string(SchemeKind s) noexcept;

struct Observable {
    std::string name;
    CMatrix op;
};

struct ConvergenceSettings {
    std::vector<double> taus;
    std::size_t chain_steps = 6;
    std::size_t paths = 20;
};

struct ExperimentConfig {
    std::string spec_version = kSpecVersion;
    SchemeKind scheme = SchemeKind::Counting;
    Integrator integrator = Integrator::Collision;
    NoiseMode noise = NoiseMode::Wiener;
    Measurement measurement = Measurement::None;
    SystemModel model;
    std::optional<CavityParams> cavity;
    DriveSpec drive;
    GridSpec grid;
    double horizon = 0.0;
    std::size_t output_every = 1;
    std::size_t trajectories = 1;
    std::uint64_t seed = 0;
    std::size_t max_qubits = 10;
    std::vector<Observable> observables;
    std::filesystem::path output_dir = "run_output";
    ConvergenceSettings convergence;
    nlohmann::json document; // as read, for the copy in the output bundle

    // Output step indices 0, k, 2k, ..., always including the last step.
    std::vector<std::size_t> output_steps() const;
};

// Throws ConfigError with a "field: message" description, or with line and
// column for JSON syntax errors.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

CMatrix parse_matrix(const nlohmann::json& j, std::size_t dim, const std::string& field);
Waveform parse_waveform(const nlohmann::json& j, double horizon, const std::string& field);

} // namespace qtraj

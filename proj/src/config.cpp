#include "qtraj/config.hpp"

#include "qtraj/errors.hpp"
#include "qtraj/operators.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qtraj {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg);
}

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

cplx parse_complex(const json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    fail(field, "expected a number or [re, im]");
}

double parse_number(const json& obj, const char* key, const std::string& field,
                    std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        fail(join(field, key), "missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(field, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(join(field, key), "not finite");
    return x;
}

std::size_t parse_count(const json& obj, const char* key, const std::string& field,
                        std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        fail(join(field, key), "expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string parse_string(const json& obj, const char* key, const std::string& field,
                         const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) fail(join(field, key), "expected a string");
    return obj.at(key).get<std::string>();
}

CVector parse_vector(const json& j, std::size_t dim, const std::string& field) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (dim == 2 && s == "ground") return CVector{1.0, 0.0};
        if (dim == 2 && s == "excited") return CVector{0.0, 1.0};
        const double r = 1.0 / std::sqrt(2.0);
        if (dim == 2 && s == "plus") return CVector{r, r};
        if (dim == 2 && s == "minus") return CVector{r, -r};
        fail(field, "unknown state preset '" + s + "' for dimension " + std::to_string(dim));
    }
    if (j.is_object()) {
        if (j.contains("basis")) {
            const std::size_t k = parse_count(j, "basis", field, 0);
            if (k >= dim) fail(join(field, "basis"), "index out of range");
            return CVector::basis(dim, k);
        }
        if (j.contains("coherent")) {
            try {
                return coherent_fock(parse_complex(j.at("coherent"), join(field, "coherent")),
                                     dim - 1);
            } catch (const TruncationTooSmall& e) {
                fail(join(field, "coherent"), e.what());
            }
        }
        fail(field, "expected 'basis' or 'coherent'");
    }
    if (!j.is_array() || j.size() != dim)
        fail(field, "expected " + std::to_string(dim) + " entries");
    CVector v(dim);
    for (std::size_t i = 0; i < dim; ++i)
        v[i] = parse_complex(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

SystemModel parse_model(const json& j, const std::filesystem::path& base,
                        std::optional<CavityParams>& cavity, const std::string& field) {
    if (j.is_string()) {
        const std::filesystem::path p = base / j.get<std::string>();
        std::ifstream in(p);
        if (!in) fail(field, "cannot open model file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_model(parse_json_text(ss.str(), p.string()), p.parent_path(), cavity, field);
    }
    if (!j.is_object()) fail(field, "expected an object or a file path");
    if (j.contains("cavity")) {
        const json& c = j.at("cavity");
        const std::string f = join(field, "cavity");
        CavityParams p;
        p.omega0 = parse_number(c, "omega0", f);
        p.gamma = parse_number(c, "gamma", f);
        p.u = c.contains("u") ? parse_complex(c.at("u"), join(f, "u")) : cplx{};
        p.n_max = parse_count(c, "n_max", f, 30);
        cavity = p;
        try {
            return cavity_model(p);
        } catch (const Error& e) {
            fail(f, e.what());
        }
    }
    const std::size_t dim = parse_count(j, "dim", field, 0);
    if (dim == 0) fail(join(field, "dim"), "missing or zero");
    if (!j.contains("hamiltonian")) fail(join(field, "hamiltonian"), "missing");
    if (!j.contains("coupling")) fail(join(field, "coupling"), "missing");
    CMatrix h = parse_matrix(j.at("hamiltonian"), dim, join(field, "hamiltonian"));
    CMatrix l = parse_matrix(j.at("coupling"), dim, join(field, "coupling"));
    CVector psi = j.contains("initial_state")
                      ? parse_vector(j.at("initial_state"), dim, join(field, "initial_state"))
                      : CVector::basis(dim, 0);
    try {
        return make_system_model(std::move(h), std::move(l), std::move(psi));
    } catch (const Error& e) {
        fail(field, e.what());
    }
}

std::vector<double> parse_number_list(const json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(field + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

} // namespace

const char* to_string(SchemeKind s) noexcept {
    switch (s) {
    case SchemeKind::Counting: return "counting";
    case SchemeKind::Homodyne: return "homodyne";
    case SchemeKind::Master: return "master";
    case SchemeKind::ExactChain: return "exact-chain";
    case SchemeKind::CavityAnalytic: return "cavity-analytic";
    }
    return "?";
}

CMatrix parse_matrix(const json& j, std::size_t dim, const std::string& field) {
    if (j.is_string()) {
        auto m = ops::named(j.get<std::string>(), dim);
        if (!m) fail(field, "unknown operator '" + j.get<std::string>() + "' for dimension " +
                                std::to_string(dim));
        return *m;
    }
    if (j.is_object()) {
        if (j.contains("terms")) {
            const json& terms = j.at("terms");
            if (!terms.is_array() || terms.empty()) fail(join(field, "terms"), "expected a list");
            CMatrix sum(dim, dim);
            for (std::size_t i = 0; i < terms.size(); ++i)
                sum += parse_matrix(terms[i], dim, field + ".terms[" + std::to_string(i) + "]");
            return sum;
        }
        if (!j.contains("preset")) fail(field, "expected 'preset' or 'terms'");
        CMatrix m = parse_matrix(j.at("preset"), dim, join(field, "preset"));
        if (j.contains("scale")) m *= parse_complex(j.at("scale"), join(field, "scale"));
        return m;
    }
    if (!j.is_array() || j.size() != dim) fail(field, "expected " + std::to_string(dim) + " rows");
    CMatrix m(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
        const std::string rf = field + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != dim)
            fail(rf, "expected " + std::to_string(dim) + " entries");
        for (std::size_t c = 0; c < dim; ++c)
            m(r, c) = parse_complex(j[r][c], rf + "[" + std::to_string(c) + "]");
    }
    return m;
}

Waveform parse_waveform(const json& j, double horizon, const std::string& field) {
    if (j.is_string() && j.get<std::string>() == "zero") return Waveform::zero(horizon);
    if (!j.is_object()) fail(field, "expected a waveform object");
    const std::string preset = parse_string(j, "preset", field, "");
    auto amp = [&] {
        if (!j.contains("amplitude")) fail(join(field, "amplitude"), "missing");
        return parse_complex(j.at("amplitude"), join(field, "amplitude"));
    };
    if (preset == "zero") return Waveform::zero(horizon);
    if (preset == "constant") return Waveform::constant(amp(), horizon);
    if (preset == "gaussian")
        return Waveform::gaussian(amp(), parse_number(j, "center", field),
                                  parse_number(j, "width", field), horizon);
    if (preset == "exponential")
        return Waveform::exponential(amp(), parse_number(j, "rate", field), horizon);
    if (preset == "chirp")
        return Waveform::chirp(amp(), parse_number(j, "omega", field, 0.0),
                               parse_number(j, "chirp_rate", field, 0.0), horizon);
    if (preset == "sampled") {
        if (!j.contains("samples") || !j.at("samples").is_array())
            fail(join(field, "samples"), "expected a list");
        std::vector<cplx> s;
        const json& arr = j.at("samples");
        for (std::size_t i = 0; i < arr.size(); ++i)
            s.push_back(parse_complex(arr[i], field + ".samples[" + std::to_string(i) + "]"));
        try {
            return Waveform::sampled(parse_number(j, "dt", field), std::move(s), horizon);
        } catch (const Error& e) {
            fail(field, e.what());
        }
    }
    fail(join(field, "preset"), "unknown waveform preset '" + preset + "'");
}

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error: " + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(parse_json_text(ss.str(), path.string()), path.parent_path());
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) fail("(root)", "expected a JSON object");
    ExperimentConfig c;
    c.document = doc;

    if (!doc.contains("spec_version")) fail("spec_version", "missing");
    c.spec_version = parse_string(doc, "spec_version", "", "");
    if (c.spec_version != kSpecVersion)
        fail("spec_version", "unsupported version '" + c.spec_version + "' (expected " +
                                 kSpecVersion + ")");

    const std::string scheme = parse_string(doc, "scheme", "", "");
    if (scheme == "counting") c.scheme = SchemeKind::Counting;
    else if (scheme == "homodyne") c.scheme = SchemeKind::Homodyne;
    else if (scheme == "master") c.scheme = SchemeKind::Master;
    else if (scheme == "exact-chain") c.scheme = SchemeKind::ExactChain;
    else if (scheme == "cavity-analytic") c.scheme = SchemeKind::CavityAnalytic;
    else fail("scheme", scheme.empty() ? "missing" : "unknown scheme '" + scheme + "'");

    const std::string integrator = parse_string(doc, "integrator", "", "collision");
    if (integrator == "collision") c.integrator = Integrator::Collision;
    else if (integrator == "sme") c.integrator = Integrator::Sme;
    else fail("integrator", "expected 'collision' or 'sme'");

    const std::string noise = parse_string(doc, "noise", "", "wiener");
    if (noise == "wiener") c.noise = NoiseMode::Wiener;
    else if (noise == "binary") c.noise = NoiseMode::Binary;
    else fail("noise", "expected 'wiener' or 'binary'");

    const std::string meas = parse_string(doc, "measurement", "", "none");
    if (meas == "none") c.measurement = Measurement::None;
    else if (meas == "counting") c.measurement = Measurement::Counting;
    else if (meas == "homodyne") c.measurement = Measurement::Homodyne;
    else fail("measurement", "expected 'none', 'counting' or 'homodyne'");

    if (!doc.contains("grid") || !doc.at("grid").is_object()) fail("grid", "missing");
    const json& grid = doc.at("grid");
    c.horizon = parse_number(grid, "horizon", "grid");
    if (!(c.horizon > 0.0)) fail("grid.horizon", "must be positive");
    const double tau = grid.contains("tau") ? parse_number(grid, "tau", "grid")
                                            : parse_number(grid, "dt", "grid");
    if (!(tau > 0.0)) fail("grid.tau", "must be positive");
    c.grid = GridSpec::from_horizon(c.horizon, tau);

    if (!doc.contains("model")) fail("model", "missing");
    c.model = parse_model(doc.at("model"), base_dir, c.cavity, "model");
    if (c.scheme == SchemeKind::CavityAnalytic && !c.cavity)
        fail("model", "scheme 'cavity-analytic' needs a cavity model");

    if (!doc.contains("drive") || !doc.at("drive").is_object()) fail("drive", "missing");
    const json& drive = doc.at("drive");
    c.drive.c_alpha = drive.contains("c_alpha") ? parse_complex(drive.at("c_alpha"), "drive.c_alpha")
                                                : cplx{1.0, 0.0};
    c.drive.c_beta = drive.contains("c_beta") ? parse_complex(drive.at("c_beta"), "drive.c_beta")
                                              : cplx{};
    c.drive.alpha = drive.contains("alpha")
                        ? parse_waveform(drive.at("alpha"), c.horizon, "drive.alpha")
                        : Waveform::zero(c.horizon);
    c.drive.beta = drive.contains("beta")
                       ? parse_waveform(drive.at("beta"), c.horizon, "drive.beta")
                       : Waveform::zero(c.horizon);
    const std::size_t panels = overlap_panels(c.grid);
    if (drive.contains("normalize") && drive.at("normalize").is_boolean() &&
        drive.at("normalize").get<bool>()) {
        c.drive = normalized(c.drive, panels);
    }
    try {
        validate(c.drive, panels);
    } catch (const NormalizationViolation& e) {
        fail("drive", std::string(e.what()) + " (set \"normalize\": true to rescale the weights)");
    } catch (const Error& e) {
        fail("drive", e.what());
    }

    const std::size_t default_every = std::max<std::size_t>(1, c.grid.steps / 20);
    c.output_every = parse_count(doc, "output_every", "", default_every);
    if (c.output_every == 0) fail("output_every", "must be positive");
    c.trajectories = parse_count(doc, "trajectories", "", 1);
    if (c.trajectories == 0) fail("trajectories", "must be at least 1");
    c.seed = parse_count(doc, "seed", "", 0);
    c.max_qubits = parse_count(doc, "max_qubits", "", 10);

    if (doc.contains("observables")) {
        const json& obs = doc.at("observables");
        if (!obs.is_array()) fail("observables", "expected a list");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string f = "observables[" + std::to_string(i) + "]";
            if (obs[i].is_string()) {
                c.observables.push_back(
                    {obs[i].get<std::string>(), parse_matrix(obs[i], c.model.dim, f)});
            } else if (obs[i].is_object() && obs[i].contains("name") && obs[i].contains("matrix")) {
                c.observables.push_back({parse_string(obs[i], "name", f, ""),
                                         parse_matrix(obs[i].at("matrix"), c.model.dim,
                                                      join(f, "matrix"))});
            } else {
                fail(f, "expected an operator name or {\"name\", \"matrix\"}");
            }
        }
    }

    c.output_dir = parse_string(doc, "output", "", "run_output");

    if (doc.contains("convergence")) {
        const json& cv = doc.at("convergence");
        if (!cv.is_object()) fail("convergence", "expected an object");
        if (cv.contains("taus")) c.convergence.taus = parse_number_list(cv.at("taus"), "convergence.taus");
        c.convergence.chain_steps = parse_count(cv, "chain_steps", "convergence", 6);
        c.convergence.paths = parse_count(cv, "paths", "convergence", 20);
    }
    return c;
}

std::vector<std::size_t> ExperimentConfig::output_steps() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j <= grid.steps; j += output_every) out.push_back(j);
    if (out.back() != grid.steps) out.push_back(grid.steps);
    return out;
}

} // namespace qtraj

#include "qtraj/model.hpp"

#include "qtraj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtraj {

namespace {

void require_finite_horizon(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw NonFiniteWaveform("waveform horizon must be finite and positive");
    }
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace

SystemModel make_system_model(CMatrix hamiltonian, CMatrix coupling, CVector initial_state) {
    const std::size_t d = hamiltonian.rows();
    if (d == 0 || !hamiltonian.square()) throw DimensionMismatch("hamiltonian must be square");
    if (coupling.rows() != d || coupling.cols() != d)
        throw DimensionMismatch("coupling must match hamiltonian dimension");
    if (initial_state.size() != d)
        throw DimensionMismatch("initial state must match hamiltonian dimension");
    if (!hamiltonian.all_finite() || !coupling.all_finite() || !initial_state.all_finite())
        throw NumericalError("system operators must be finite");
    if (hermiticity_defect(hamiltonian) > 1e-12)
        throw NumericalError("hamiltonian is not Hermitian");
    const double n2 = norm_squared(initial_state);
    if (!(n2 > 0.0)) throw ZeroNorm("initial state has zero norm");
    initial_state *= 1.0 / std::sqrt(n2);
    return SystemModel{d, std::move(hamiltonian), std::move(coupling), std::move(initial_state)};
}

Waveform Waveform::zero(double horizon) {
    require_finite_horizon(horizon);
    Waveform w;
    w.horizon_ = horizon;
    return w;
}

Waveform Waveform::constant(cplx amplitude, double horizon) {
    Waveform w = zero(horizon);
    w.kind_ = WaveformKind::Constant;
    w.amplitude_ = amplitude;
    return w;
}

Waveform Waveform::gaussian(cplx amplitude, double center, double width, double horizon) {
    if (!(width > 0.0)) throw NonFiniteWaveform("gaussian width must be positive");
    Waveform w = zero(horizon);
    w.kind_ = WaveformKind::Gaussian;
    w.amplitude_ = amplitude;
    w.params_[0] = center;
    w.params_[1] = width;
    return w;
}

Waveform Waveform::exponential(cplx amplitude, double rate, double horizon) {
    Waveform w = zero(horizon);
    w.kind_ = WaveformKind::Exponential;
    w.amplitude_ = amplitude;
    w.params_[0] = rate;
    return w;
}

Waveform Waveform::chirp(cplx amplitude, double omega, double chirp_rate, double horizon) {
    Waveform w = zero(horizon);
    w.kind_ = WaveformKind::Chirp;
    w.amplitude_ = amplitude;
    w.params_[0] = omega;
    w.params_[1] = chirp_rate;
    return w;
}

Waveform Waveform::sampled(double dt, std::vector<cplx> samples, double horizon) {
    if (!(dt > 0.0)) throw NonFiniteWaveform("sample spacing must be positive");
    if (samples.empty()) throw NonFiniteWaveform("sampled waveform needs at least one sample");
    Waveform w = zero(horizon);
    w.kind_ = WaveformKind::Sampled;
    w.amplitude_ = 1.0;
    w.params_[0] = dt;
    w.samples_ = std::move(samples);
    return w;
}

cplx Waveform::operator()(double t) const {
    // Accumulated step times may overshoot the ends by a few ulps.
    const double slack = 1e-12 * std::max(1.0, horizon_);
    if (t < -slack || t > horizon_ + slack) return {};
    t = std::clamp(t, 0.0, horizon_);
    switch (kind_) {
    case WaveformKind::Zero:
        return {};
    case WaveformKind::Constant:
        return amplitude_;
    case WaveformKind::Gaussian: {
        const double x = (t - params_[0]) / params_[1];
        return amplitude_ * std::exp(-0.5 * x * x);
    }
    case WaveformKind::Exponential:
        return amplitude_ * std::exp(-params_[0] * t);
    case WaveformKind::Chirp:
        return amplitude_ * std::exp(kI * (params_[0] * t + 0.5 * params_[1] * t * t));
    case WaveformKind::Sampled: {
        const double x = t / params_[0];
        const auto k = static_cast<std::size_t>(std::floor(x));
        if (k + 1 >= samples_.size()) {
            return k + 1 == samples_.size() ? amplitude_ * samples_.back() : cplx{};
        }
        const double frac = x - static_cast<double>(k);
        return amplitude_ * ((1.0 - frac) * samples_[k] + frac * samples_[k + 1]);
    }
    }
    return {};
}

Waveform Waveform::scaled(cplx s) const {
    Waveform w = *this;
    w.amplitude_ *= s;
    return w;
}

std::string Waveform::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case WaveformKind::Zero: os << "zero"; break;
    case WaveformKind::Constant: os << "constant " << amplitude_; break;
    case WaveformKind::Gaussian:
        os << "gaussian " << amplitude_ << " center=" << params_[0] << " width=" << params_[1];
        break;
    case WaveformKind::Exponential: os << "exponential " << amplitude_ << " rate=" << params_[0]; break;
    case WaveformKind::Chirp:
        os << "chirp " << amplitude_ << " omega=" << params_[0] << " chirp=" << params_[1];
        break;
    case WaveformKind::Sampled: os << "sampled n=" << samples_.size() << " dt=" << params_[0]; break;
    }
    os << " T=" << horizon_;
    return os.str();
}

GridSpec GridSpec::from_horizon(double horizon, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("grid step must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be finite");
    const double ratio = horizon / tau;
    auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
    return GridSpec{tau, steps};
}

cplx log_overlap(const Waveform& alpha, const Waveform& beta, double t0, double t1,
                 std::size_t panels) {
    if (!(t0 <= t1)) throw NonFiniteWaveform("overlap: interval must satisfy t0 <= t1");
    if (t0 == t1) return {};
    if (panels < 2) panels = 2;
    if (panels % 2) ++panels;
    const double h = (t1 - t0) / static_cast<double>(panels);
    auto integrand = [&](double t) {
        const cplx a = alpha(t);
        const cplx b = beta(t);
        const cplx v = std::norm(a) + std::norm(b) - 2.0 * a * std::conj(b);
        if (!finite(v)) throw NonFiniteWaveform("overlap: non-finite integrand");
        return v;
    };
    cplx acc = integrand(t0) + integrand(t1);
    for (std::size_t k = 1; k < panels; ++k) {
        acc += (k % 2 ? 4.0 : 2.0) * integrand(t0 + static_cast<double>(k) * h);
    }
    return -0.5 * acc * (h / 3.0);
}

cplx overlap(const Waveform& alpha, const Waveform& beta, double t0, double t1,
             std::size_t panels) {
    return std::exp(log_overlap(alpha, beta, t0, t1, panels));
}

std::size_t overlap_panels(const GridSpec& grid) { return std::max<std::size_t>(2, 4 * grid.steps); }

double squared_norm_integral(const Waveform& w, std::size_t panels) {
    return -2.0 * log_overlap(w, Waveform::zero(w.horizon()), 0.0, w.horizon(), panels).real();
}

std::vector<cplx> discretize(const Waveform& w, const GridSpec& grid) {
    std::vector<cplx> out(grid.steps);
    for (std::size_t j = 0; j < grid.steps; ++j) out[j] = w(grid.time(j));
    return out;
}

double normalization_residual(const DriveSpec& spec, std::size_t panels) {
    const cplx ov = overlap(spec.alpha, spec.beta, 0.0, spec.horizon(), panels);
    return std::norm(spec.c_alpha) + 2.0 * (spec.c_alpha * std::conj(spec.c_beta) * ov).real() +
           std::norm(spec.c_beta) - 1.0;
}

void validate(const DriveSpec& spec, std::size_t panels) {
    require_finite_horizon(spec.alpha.horizon());
    if (std::abs(spec.alpha.horizon() - spec.beta.horizon()) > 1e-12 * spec.alpha.horizon())
        throw NonFiniteWaveform("alpha and beta must share the same horizon");
    if (!finite(spec.c_alpha) || !finite(spec.c_beta))
        throw NonFiniteWaveform("superposition weights must be finite");
    for (const Waveform* w : {&spec.alpha, &spec.beta}) {
        const double energy = squared_norm_integral(*w, panels);
        if (!std::isfinite(energy)) throw NonFiniteWaveform("waveform energy is not finite");
    }
    const double residual = normalization_residual(spec, panels);
    if (!(std::abs(residual) <= kNormalizationTolerance)) {
        std::ostringstream os;
        os << "drive superposition is not normalized: residual " << residual;
        throw NormalizationViolation(os.str(), residual);
    }
}

DriveSpec normalized(DriveSpec spec, std::size_t panels) {
    const double n = normalization_residual(spec, panels) + 1.0;
    if (!(n > 0.0)) throw ZeroNorm("drive superposition has zero norm");
    const double s = 1.0 / std::sqrt(n);
    spec.c_alpha *= s;
    spec.c_beta *= s;
    return spec;
}

} // namespace qtraj

#pragma once

// Physical model description: the driven open system, the two coherent-state
// waveforms of the field superposition, and the time grid.

#include "qtraj/linalg.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qtraj {

// Finite-dimensional system with Hamiltonian H_S and coupling (jump)
// operator L. hbar = 1; L carries units of 1/sqrt(time).
struct SystemModel {
    std::size_t dim = 0;
    CMatrix hamiltonian;
    CMatrix coupling;
    // Initial system vector |psi>. Normalized by make_system_model.
    CVector initial_state;
};

// Validates shapes, Hermiticity of H (1e-12), finiteness, and normalizes the
// initial state.
SystemModel make_system_model(CMatrix hamiltonian, CMatrix coupling, CVector initial_state);

enum class WaveformKind { Zero, Constant, Gaussian, Exponential, Chirp, Sampled };

// Complex amplitude t -> w(t) on [0, T]; identically zero outside.
//
//   constant     a
//   gaussian     a * exp(-(t - center)^2 / (2 width^2))
//   exponential  a * exp(-rate * t)
//   chirp        a * exp(i (omega t + chirp_rate t^2 / 2))
//   sampled      linear interpolation of samples taken every `dt` from t = 0
class Waveform {
public:
    Waveform() = default;

    static Waveform zero(double horizon);
    static Waveform constant(cplx amplitude, double horizon);
    static Waveform gaussian(cplx amplitude, double center, double width, double horizon);
    static Waveform exponential(cplx amplitude, double rate, double horizon);
    static Waveform chirp(cplx amplitude, double omega, double chirp_rate, double horizon);
    static Waveform sampled(double dt, std::vector<cplx> samples, double horizon);

    cplx operator()(double t) const;

    double horizon() const noexcept { return horizon_; }
    WaveformKind kind() const noexcept { return kind_; }
    cplx amplitude() const noexcept { return amplitude_; }
    double param(std::size_t i) const noexcept { return params_[i]; }
    const std::vector<cplx>& samples() const noexcept { return samples_; }

    // The same waveform multiplied by s.
    Waveform scaled(cplx s) const;

    std::string describe() const;

private:
    WaveformKind kind_ = WaveformKind::Zero;
    double horizon_ = 0.0;
    cplx amplitude_{};
    double params_[2] = {0.0, 0.0};
    std::vector<cplx> samples_;
};

// Field prepared as c_alpha |alpha> + c_beta |beta>.
struct DriveSpec {
    cplx c_alpha{1.0, 0.0};
    cplx c_beta{0.0, 0.0};
    Waveform alpha;
    Waveform beta;

    double horizon() const noexcept { return alpha.horizon(); }
};

struct GridSpec {
    double tau = 0.0;
    std::size_t steps = 0;

    // steps = ceil(T / tau), tolerant of floating-point round-off in T / tau.
    static GridSpec from_horizon(double horizon, double tau);
    double time(std::size_t j) const noexcept { return static_cast<double>(j) * tau; }
};

inline constexpr std::size_t kDefaultOverlapPanels = 4096;

// log <beta|alpha> over [t0, t1] = -1/2 ∫ (|a|^2 + |b|^2 - 2 a conj(b)) dt,
// composite Simpson with `panels` sub-intervals (rounded up to even).
cplx log_overlap(const Waveform& alpha, const Waveform& beta, double t0, double t1,
                 std::size_t panels = kDefaultOverlapPanels);
cplx overlap(const Waveform& alpha, const Waveform& beta, double t0, double t1,
             std::size_t panels = kDefaultOverlapPanels);

// Simpson panel count used with a collision grid: four panels per slot.
std::size_t overlap_panels(const GridSpec& grid);

// ∫_0^T |w|^2 dt by composite Simpson.
double squared_norm_integral(const Waveform& w, std::size_t panels = kDefaultOverlapPanels);

// Slot amplitudes w(j tau), j = 0..steps-1 (left endpoint rule).
std::vector<cplx> discretize(const Waveform& w, const GridSpec& grid);

// |c_a|^2 + 2 Re(c_a conj(c_b) <beta|alpha>) + |c_b|^2 - 1.
double normalization_residual(const DriveSpec& spec,
                              std::size_t panels = kDefaultOverlapPanels);

inline constexpr double kNormalizationTolerance = 1e-10;

// Throws NonFiniteWaveform or NormalizationViolation.
void validate(const DriveSpec& spec, std::size_t panels = kDefaultOverlapPanels);

// Rescales (c_alpha, c_beta) by a common positive factor so that the
// superposition is normalized.
DriveSpec normalized(DriveSpec spec, std::size_t panels = kDefaultOverlapPanels);

} // namespace qtraj

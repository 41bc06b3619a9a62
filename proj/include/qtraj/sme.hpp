#pragma once

// Continuous-time integrators for the four-operator hierarchy: the jump
// (counting) and diffusive (homodyne) stochastic master equations, and the
// deterministic a priori equations.
//
// The stochastic steps are written in factorized Kraus form. Over [t, t + dt]
//
//   rho^{xy} <- s_xy * M_x rho^{xy} M_y†,
//   M_x = exp(-K_x dt) (L + x)^dn                 (counting)
//   M_x = exp(-K_x dt) (1 + (L + x) dq)           (homodyne)
//   K_x = i H + L†L/2 + x L† + |x|^2/2,
//   s_xy = exp(1/2 ∫ (|x|^2 + |y|^2 - 2 x y*) dt),
//
// after which the assembled state is renormalized. To first order this is the
// linear form of the filtering equations; the factorized form keeps every
// assembled state a positive operator.

#include "qtraj/density.hpp"
#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/rng.hpp"

#include <cstddef>
#include <vector>

namespace qtraj {

// -i[H, rho] - 1/2 {L†L, rho} + L rho L†
CMatrix lindblad(const SystemModel& model, const CMatrix& rho);

// lindblad(rho) + [rho, L†] left + [L, rho] conj(right)
CMatrix drift_term(const SystemModel& model, const CMatrix& rho, cplx left, cplx right);

// Weighted branch intensities; `ba` is conj(`ab`) and total is
// |c_a|^2 aa + 2 Re(c_a c_b* ab) + |c_b|^2 bb.
struct Intensities {
    double aa = 0.0;
    cplx ab{};
    cplx ba{};
    double bb = 0.0;
    double total = 0.0;
};

inline constexpr double kIntensityTolerance = 1e-10;
inline constexpr double kZeroIntensity = 1e-12;

// nu^{xy} = Tr[(L† + y*)(L + x) rho^{xy}]. Throws NegativeIntensity when the
// total falls below -kIntensityTolerance.
Intensities jump_intensities(const SystemModel& model, const ConditionalDensity& cond, cplx a,
                             cplx b);

// mu^{xy} = Tr[(L + L† + x + y*) rho^{xy}].
Intensities diffusive_intensities(const SystemModel& model, const ConditionalDensity& cond,
                                  cplx a, cplx b);

// Everything one stochastic step needs, independent of the state.
struct StepPropagator {
    double t = 0.0;
    double dt = 0.0;
    cplx a{}; // amplitudes at t, used by the jump / noise factor L + x
    cplx b{};
    CMatrix drift_a; // exp(-K_a dt), K at the midpoint amplitude
    CMatrix drift_b;
    cplx scale_ab{1.0, 0.0}; // s_ab
};

// Propagator over [t, t + dt] for waveform amplitudes.
StepPropagator make_propagator(const SystemModel& model, const DriveSpec& drive, double t,
                               double dt);
// Propagator with amplitudes frozen at (a, b) over the step.
StepPropagator make_propagator(const SystemModel& model, cplx a, cplx b, double dt);

// Propagators for every step of a grid, shared read-only by all trajectories.
class SmeSchedule {
public:
    SmeSchedule(const SystemModel& model, const DriveSpec& drive, GridSpec grid);

    const SystemModel& model() const noexcept { return model_; }
    const DriveSpec& drive() const noexcept { return drive_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const StepPropagator& at(std::size_t j) const { return steps_.at(j); }

    // Initial conditional state: rho^{aa} = rho^{bb} = |psi><psi|,
    // rho^{ab} = K_0 |psi><psi| with K_0 = prod_j 1 / s_ab(j), renormalized.
    ConditionalDensity initial_state() const;

private:
    SystemModel model_;
    DriveSpec drive_;
    GridSpec grid_;
    std::vector<StepPropagator> steps_;
    cplx log_initial_overlap_{};
};

struct JumpStep {
    int dn = 0;
    double intensity = 0.0;
    // Assembled trace before renormalization.
    double raw_trace = 0.0;
    bool clamped = false; // nu dt exceeded 1
};

// Samples dn with P(1) = min(nu dt, 1) and applies the step.
JumpStep jump_sme_step(const SystemModel& model, ConditionalDensity& cond,
                       const StepPropagator& prop, TrajectoryRng& rng);
// Applies a given dn. Throws JumpAtZeroIntensity if dn = 1 while nu is zero.
JumpStep jump_sme_step_with(const SystemModel& model, ConditionalDensity& cond,
                            const StepPropagator& prop, int dn);
// Frozen-amplitude convenience form.
JumpStep jump_sme_step(const SystemModel& model, ConditionalDensity& cond, cplx a, cplx b,
                       double dt, TrajectoryRng& rng);

enum class NoiseMode { Wiener, Binary };

struct DiffusiveStep {
    double dq = 0.0;
    double intensity = 0.0;
    double raw_trace = 0.0;
};

// Draws dW (Normal(0, dt) or +-sqrt(dt)), sets dq = mu dt + dW, applies the step.
DiffusiveStep diffusive_sme_step(const SystemModel& model, ConditionalDensity& cond,
                                 const StepPropagator& prop, TrajectoryRng& rng,
                                 NoiseMode mode = NoiseMode::Wiener);
// Applies a given photocurrent increment dq.
DiffusiveStep diffusive_sme_step_with(const SystemModel& model, ConditionalDensity& cond,
                                      const StepPropagator& prop, double dq);
DiffusiveStep diffusive_sme_step(const SystemModel& model, ConditionalDensity& cond, cplx a,
                                 cplx b, double dt, TrajectoryRng& rng,
                                 NoiseMode mode = NoiseMode::Wiener);

// A priori (record-averaged) hierarchy.
struct AprioriState {
    CMatrix varrho_aa;
    CMatrix varrho_ab;
    CMatrix varrho_bb;
    double t = 0.0;

    CMatrix assembled(cplx c_alpha, cplx c_beta) const;
};

// varrho^{aa} = varrho^{bb} = |psi><psi|, varrho^{ab} = <beta|alpha> |psi><psi|.
AprioriState initial_apriori(const SystemModel& model, const DriveSpec& drive,
                             std::size_t overlap_panels = kDefaultOverlapPanels);

// One classical RK4 step, amplitudes evaluated at the stage times.
AprioriState master_step(const SystemModel& model, const AprioriState& ap,
                         const DriveSpec& drive, double dt);

// Arithmetic mean of assembled states, summed by pairwise tree reduction.
CMatrix average_trajectories(const std::vector<ConditionalDensity>& runs);
CMatrix pairwise_mean(const std::vector<CMatrix>& terms);

} // namespace qtraj

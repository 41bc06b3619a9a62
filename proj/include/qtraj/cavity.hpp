#pragma once

// Single damped cavity mode, H = omega0 a†a, L = sqrt(Gamma) a, starting in
// the coherent state |u>. Under a drive c_a|alpha> + c_b|beta> both the a
// priori and the conditional states stay in span{|f_t>, |g_t>} of two coherent
// states, so the whole evolution reduces to two amplitudes and four scalar
// weights G^{xy}.

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/rng.hpp"

#include <cstddef>
#include <vector>

namespace qtraj {

struct CavityParams {
    double omega0 = 1.0;
    double gamma = 1.0;
    cplx u{};
    std::size_t n_max = 30;
};

inline constexpr double kFockTailBound = 1e-12;

// Truncated model for the generic integrators.
SystemModel cavity_model(const CavityParams& params);

// Poisson weight of Fock states above n_max for amplitude v.
double fock_tail(cplx v, std::size_t n_max);

// e^{-|v|^2/2} v^n / sqrt(n!), renormalized after truncation. Throws
// TruncationTooSmall if fock_tail(v) exceeds kFockTailBound.
CVector coherent_fock(cplx v, std::size_t n_max);

// <g|f> = exp{-(|g|^2 + |f|^2 - 2 g* f) / 2}
cplx coherent_overlap(cplx g, cplx f);

struct Amplitudes {
    cplx f{};
    cplx g{};
};

// f_t = e^{-kt} (u - sqrt(Gamma) ∫_0^t e^{ks} alpha_s ds), k = i omega0 + Gamma/2;
// g_t likewise with beta. Composite Simpson with `panels` sub-intervals.
Amplitudes amplitudes(const CavityParams& params, const Waveform& alpha, const Waveform& beta,
                      double t, std::size_t panels = kDefaultOverlapPanels);

// f and g on the half-step points t = k dt / 2, k = 0..2 steps, integrated by
// cumulative Simpson.
class AmplitudeTable {
public:
    AmplitudeTable(const CavityParams& params, const DriveSpec& drive, GridSpec grid);

    const GridSpec& grid() const noexcept { return grid_; }
    // k indexes half steps.
    const Amplitudes& half(std::size_t k) const { return values_.at(k); }
    const Amplitudes& at_step(std::size_t j) const { return values_.at(2 * j); }

private:
    GridSpec grid_;
    std::vector<Amplitudes> values_;
};

// |c_a|^2 |f><f| + c_a c_b* (<beta|alpha>/<g|f>) |f><g| + h.c. + |c_b|^2 |g><g|.
CMatrix apriori_state(const CavityParams& params, const DriveSpec& drive, double t,
                      std::size_t panels = kDefaultOverlapPanels);

struct GCoefficients {
    cplx g_aa{1.0, 0.0};
    cplx g_ab{1.0, 0.0};
    cplx g_ba{1.0, 0.0};
    cplx g_bb{1.0, 0.0};
    double t = 0.0;
    std::size_t step = 0;
};

// Conditional evolution of the G weights, replaying or sampling records on
// a fixed grid. Step j covers [j dt, (j + 1) dt]; the click or photocurrent
// factor is applied at j dt, followed by the no-click decay over the step.
class CavityTrajectory {
public:
    CavityTrajectory(const CavityParams& params, const DriveSpec& drive, GridSpec grid);

    const AmplitudeTable& table() const noexcept { return table_; }
    cplx tail_overlap() const noexcept { return overlap_; } // <beta|alpha>

    GCoefficients initial() const;

    // Assembled trace |c_a|^2 G^aa + 2 Re(c_a c_b* <beta|alpha> G^ab) + |c_b|^2 G^bb.
    double trace(const GCoefficients& g) const;

    // nu and mu at the current step of g.
    double counting_intensity(const GCoefficients& g) const;
    double homodyne_intensity(const GCoefficients& g) const;

    // Counting step with dn given (replay) or sampled with P(1) = min(nu dt, 1).
    void g_counting_step(GCoefficients& g, int dn) const;
    int g_counting_step(GCoefficients& g, TrajectoryRng& rng) const;

    // Homodyne step with dq given or drawn as mu dt + Normal(0, dt).
    void g_homodyne_step(GCoefficients& g, double dq) const;
    double g_homodyne_step(GCoefficients& g, TrajectoryRng& rng) const;

    // Conditional state in the truncated Fock basis at the time of g.
    CMatrix state(const GCoefficients& g) const;

private:
    // Slot amplitude plus cavity contribution: sqrt(Gamma) f + alpha, at half step k.
    cplx field_a(std::size_t k) const;
    cplx field_b(std::size_t k) const;
    void decay(GCoefficients& g, std::size_t j) const;
    void normalize(GCoefficients& g) const;

    CavityParams params_;
    DriveSpec drive_;
    AmplitudeTable table_;
    cplx overlap_{};
};

} // namespace qtraj

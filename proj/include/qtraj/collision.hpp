#pragma once

// Discrete repeated-interaction (collision) engine.
//
// The field is a chain of qubits, slot j carrying the coherent amplitude
// alpha_j = alpha(j tau) (or beta_j). Each qubit meets the system once for a
// time tau and is then measured, either in the {|0>, |1>} basis (photon
// counting, outcome eta in {0, 1}) or in the {|+>, |->} basis (homodyne,
// outcome zeta in {-1, +1}).
//
// For a field in c_a|alpha> + c_b|beta> the conditional joint state keeps the
// form c_a |alpha_tail> ⊗ |psi_j> + c_b |beta_tail> ⊗ |phi_j>, so a trajectory
// is carried by two unnormalized system vectors and the overlap of the two
// not-yet-collided field tails, K_j = prod_{k >= j} <beta_k|alpha_k>.

#include "qtraj/density.hpp"
#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace qtraj {

enum class Scheme { Counting, Homodyne };

const char* to_string(Scheme s) noexcept;

// First-order Kraus pair of one counting collision.
struct KrausPair {
    CMatrix m0; // no click: I - (i H + L†L/2 + L† a + |a|^2/2) tau
    CMatrix m1; // click:    (L + a) sqrt(tau)
    double tau = 0.0;
};

KrausPair kraus_counting(const SystemModel& model, cplx amplitude, double tau);

// R_zeta = (1/sqrt2) [I - (i H + L†L/2 + L† a + |a|^2/2) tau + (L + a) zeta sqrt(tau)].
CMatrix kraus_homodyne(const SystemModel& model, cplx amplitude, double tau, int zeta);

// Slot overlap <beta_k|alpha_k> to first order: 1 - (|a|^2 + |b|^2 - 2 a b*) tau / 2.
cplx slot_overlap(cplx a, cplx b, double tau) noexcept;

namespace detail {

// Amplitude-independent part of the no-click generator, i H + L†L/2.
struct SlotOperators {
    CMatrix base;
    CMatrix ldag;
    CMatrix coupling;

    explicit SlotOperators(const SystemModel& model);
    KrausPair counting(cplx amplitude, double tau) const;
};

} // namespace detail

struct BranchState {
    std::size_t time_index = 0;
    CVector psi;
    CVector phi;
    // log K_j, K_j = prod_{k >= j} <beta_k|alpha_k>.
    cplx log_tail_overlap{};
    // psi and phi are stored multiplied by 2^scale_log2 (exact rescaling that
    // keeps long records away from underflow).
    int scale_log2 = 0;
};

struct MeasurementRecord {
    Scheme scheme = Scheme::Counting;
    double tau = 0.0;
    std::vector<int> outcomes;
    // Sampling probability of each recorded outcome.
    std::vector<double> probabilities;
    // Sum of log probabilities: log of the record's probability.
    double log_weight = 0.0;
    // Homodyne steps where 1/2 (1 + mu zeta sqrt(tau)) leaves [0, 1].
    std::size_t clamp_events = 0;
};

struct StepResult {
    int outcome = 0;
    double probability = 0.0;
    // Tr rho_{j+1} / Tr rho_j for the realized outcome.
    double weight_ratio = 0.0;
};

// Reduced state of the not-yet-collided field, in the non-orthogonal basis of
// the two tail coherent states: sum_xy coeff[x][y] |x_tail><y_tail|.
struct FieldState {
    std::array<std::array<cplx, 2>, 2> coeff{};
    cplx tail_overlap{}; // <beta_tail|alpha_tail>
    cplx trace() const noexcept {
        return coeff[0][0] + coeff[1][1] + coeff[0][1] * tail_overlap +
               coeff[1][0] * std::conj(tail_overlap);
    }
};

// Superposition-drive engine (both branches). With c_beta = 0 it reduces to
// the single coherent-state recurrence, bit for bit.
class CollisionEngine {
public:
    CollisionEngine(SystemModel model, DriveSpec drive, GridSpec grid, Scheme scheme);

    const SystemModel& model() const noexcept { return model_; }
    const DriveSpec& drive() const noexcept { return drive_; }
    const GridSpec& grid() const noexcept { return grid_; }
    Scheme scheme() const noexcept { return scheme_; }
    cplx alpha(std::size_t j) const { return alpha_.at(j); }
    cplx beta(std::size_t j) const { return beta_.at(j); }

    BranchState initial_state() const;

    // Tr rho_j = |c_a|^2 <psi|psi> + 2 Re(c_a c_b* K_j <phi|psi>) + |c_b|^2 <phi|phi>,
    // without the 2^scale_log2 factor.
    double weight(const BranchState& b) const;

    // Unnormalized post-collision weights for each outcome, ordered
    // {0, 1} (counting) or {-1, +1} (homodyne).
    std::array<double, 2> outcome_weights(const BranchState& b) const;

    StepResult step(BranchState& b, TrajectoryRng& rng, MeasurementRecord* record = nullptr) const;
    // Applies a given outcome instead of sampling one.
    StepResult step_with_outcome(BranchState& b, int outcome,
                                 MeasurementRecord* record = nullptr) const;

    ConditionalDensity conditional_density(const BranchState& b) const;
    FieldState field_state(const BranchState& b) const;

    // nu_j (counting) or mu_j (homodyne) of the current conditional state.
    double intensity(const BranchState& b) const;

private:
    struct Candidates {
        std::array<CVector, 2> psi;
        std::array<CVector, 2> phi;
        cplx log_k{};
        std::array<double, 2> w{}; // clamped at 0
    };
    Candidates candidates(const BranchState& b) const;
    StepResult apply(BranchState& b, int outcome_index, Candidates&& c,
                     MeasurementRecord* record) const;
    cplx cross_weight(const BranchState& b, cplx log_k) const;

    SystemModel model_;
    detail::SlotOperators ops_;
    DriveSpec drive_;
    GridSpec grid_;
    Scheme scheme_;
    std::vector<cplx> alpha_;
    std::vector<cplx> beta_;
    cplx log_initial_overlap_{};
};

// Single coherent-state recurrence (field in |alpha>). Kept separate as the
// reference the superposition engine must reproduce when c_beta = 0.
class CoherentEngine {
public:
    CoherentEngine(SystemModel model, Waveform alpha, GridSpec grid, Scheme scheme);

    CVector initial_state() const { return model_.initial_state; }
    StepResult step(CVector& psi, std::size_t j, int& scale_log2, TrajectoryRng& rng,
                    MeasurementRecord* record = nullptr) const;

private:
    SystemModel model_;
    detail::SlotOperators ops_;
    GridSpec grid_;
    Scheme scheme_;
    std::vector<cplx> alpha_;
};

struct Trajectory {
    MeasurementRecord record;
    std::vector<BranchState> history; // empty unless requested; includes j = 0
};

// Steps one trajectory through the whole grid. Deterministic in
// (seed, trajectory_index).
Trajectory run_trajectory(const CollisionEngine& engine, std::uint64_t seed,
                          std::uint64_t trajectory_index = 0, bool keep_history = false);

// Replays a fixed outcome sequence.
Trajectory replay_trajectory(const CollisionEngine& engine, const std::vector<int>& outcomes,
                             bool keep_history = false);

} // namespace qtraj

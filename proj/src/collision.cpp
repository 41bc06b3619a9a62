#include "qtraj/collision.hpp"

#include "qtraj/errors.hpp"

#include <cmath>
#include <string>

namespace qtraj {

namespace {

// Rescale stored vectors by 2^kRescaleStep once the trajectory weight drops
// below 2^-kRescaleFloor. Powers of two keep the arithmetic exact.
constexpr int kRescaleStep = 256;
constexpr int kRescaleFloor = 512;

int outcome_value(Scheme s, int index) noexcept {
    return s == Scheme::Counting ? index : 2 * index - 1;
}

int outcome_index(Scheme s, int outcome) {
    if (s == Scheme::Counting) {
        if (outcome != 0 && outcome != 1) throw Error("counting outcome must be 0 or 1");
        return outcome;
    }
    if (outcome != -1 && outcome != 1) throw Error("homodyne outcome must be -1 or +1");
    return (outcome + 1) / 2;
}

CMatrix homodyne_from(const KrausPair& k, int zeta) {
    // m1 already carries sqrt(tau).
    CMatrix r = k.m0 + static_cast<double>(zeta) * k.m1;
    r *= 1.0 / std::sqrt(2.0);
    return r;
}

std::array<CVector, 2> collide(const detail::SlotOperators& ops, const CVector& v, cplx amplitude,
                               double tau, Scheme scheme) {
    const KrausPair k = ops.counting(amplitude, tau);
    if (scheme == Scheme::Counting) return {matvec(k.m0, v), matvec(k.m1, v)};
    return {matvec(homodyne_from(k, -1), v), matvec(homodyne_from(k, +1), v)};
}

bool needs_rescale(double w) noexcept {
    return w > 0.0 && w < std::ldexp(1.0, -kRescaleFloor);
}

void record_step(MeasurementRecord* record, int outcome, double p) {
    if (!record) return;
    record->outcomes.push_back(outcome);
    record->probabilities.push_back(p);
    record->log_weight += std::log(p);
}

double clamp_weight(double w) noexcept { return w < 0.0 ? 0.0 : w; }

} // namespace

namespace detail {

SlotOperators::SlotOperators(const SystemModel& model)
    : ldag(adjoint(model.coupling)), coupling(model.coupling) {
    base = kI * model.hamiltonian + 0.5 * (ldag * model.coupling);
}

KrausPair SlotOperators::counting(cplx amplitude, double tau) const {
    const std::size_t d = base.rows();
    CMatrix generator = base + amplitude * ldag;
    for (std::size_t i = 0; i < d; ++i) generator(i, i) += 0.5 * std::norm(amplitude);
    CMatrix m0 = CMatrix::identity(d) - tau * generator;
    CMatrix m1 = coupling;
    for (std::size_t i = 0; i < d; ++i) m1(i, i) += amplitude;
    m1 *= std::sqrt(tau);
    return KrausPair{std::move(m0), std::move(m1), tau};
}

} // namespace detail

const char* to_string(Scheme s) noexcept {
    return s == Scheme::Counting ? "counting" : "homodyne";
}

KrausPair kraus_counting(const SystemModel& model, cplx amplitude, double tau) {
    return detail::SlotOperators(model).counting(amplitude, tau);
}

CMatrix kraus_homodyne(const SystemModel& model, cplx amplitude, double tau, int zeta) {
    if (zeta != 1 && zeta != -1) throw Error("homodyne outcome must be -1 or +1");
    return homodyne_from(kraus_counting(model, amplitude, tau), zeta);
}

cplx slot_overlap(cplx a, cplx b, double tau) noexcept {
    return 1.0 - 0.5 * (std::norm(a) + std::norm(b) - 2.0 * a * std::conj(b)) * tau;
}

// ---------------------------------------------------------------------------

CollisionEngine::CollisionEngine(SystemModel model, DriveSpec drive, GridSpec grid,
                                 Scheme scheme)
    : model_(std::move(model)), ops_(model_), drive_(std::move(drive)), grid_(grid),
      scheme_(scheme) {
    if (!(grid_.tau > 0.0)) throw ConfigError("collision grid needs tau > 0");
    if (model_.initial_state.size() != model_.dim)
        throw DimensionMismatch("initial state does not match system dimension");
    alpha_ = discretize(drive_.alpha, grid_);
    beta_ = discretize(drive_.beta, grid_);
    // K_0 is the product of the same first-order slot factors that are
    // divided out one by one, so log K telescopes to exactly 0 at the end.
    for (std::size_t j = 0; j < grid_.steps; ++j) {
        log_initial_overlap_ += std::log(slot_overlap(alpha_[j], beta_[j], grid_.tau));
    }
}

BranchState CollisionEngine::initial_state() const {
    return BranchState{0, model_.initial_state, model_.initial_state, log_initial_overlap_, 0};
}

cplx CollisionEngine::cross_weight(const BranchState& b, cplx log_k) const {
    return drive_.c_alpha * std::conj(drive_.c_beta) * std::exp(log_k) * inner(b.phi, b.psi);
}

double CollisionEngine::weight(const BranchState& b) const {
    return std::norm(drive_.c_alpha) * norm_squared(b.psi) +
           2.0 * cross_weight(b, b.log_tail_overlap).real() +
           std::norm(drive_.c_beta) * norm_squared(b.phi);
}

CollisionEngine::Candidates CollisionEngine::candidates(const BranchState& b) const {
    const std::size_t j = b.time_index;
    if (j >= grid_.steps) throw GridExhausted("collision grid exhausted");
    Candidates c;
    c.psi = collide(ops_, b.psi, alpha_[j], grid_.tau, scheme_);
    c.phi = collide(ops_, b.phi, beta_[j], grid_.tau, scheme_);
    c.log_k = b.log_tail_overlap - std::log(slot_overlap(alpha_[j], beta_[j], grid_.tau));
    for (int o = 0; o < 2; ++o) {
        const double cross = 2.0 * (drive_.c_alpha * std::conj(drive_.c_beta) * std::exp(c.log_k) *
                                    inner(c.phi[o], c.psi[o]))
                                       .real();
        c.w[o] = clamp_weight(std::norm(drive_.c_alpha) * norm_squared(c.psi[o]) + cross +
                              std::norm(drive_.c_beta) * norm_squared(c.phi[o]));
    }
    return c;
}

std::array<double, 2> CollisionEngine::outcome_weights(const BranchState& b) const {
    return candidates(b).w;
}

StepResult CollisionEngine::apply(BranchState& b, int index, Candidates&& c,
                                  MeasurementRecord* record) const {
    const std::size_t j = b.time_index;
    const double total = c.w[0] + c.w[1];
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw ZeroNorm("collision step " + std::to_string(j) + ": total outcome weight " +
                       std::to_string(total));
    }
    const double p = c.w[index] / total;
    if (!(p > 0.0)) {
        throw ZeroNorm("collision step " + std::to_string(j) + ": outcome has zero probability");
    }
    const double before = weight(b);

    b.psi = std::move(c.psi[index]);
    b.phi = std::move(c.phi[index]);
    b.log_tail_overlap = c.log_k;
    b.time_index = j + 1;

    StepResult result{outcome_value(scheme_, index), p, c.w[index] / before};
    if (needs_rescale(c.w[index])) {
        const double s = std::ldexp(1.0, kRescaleStep);
        b.psi *= s;
        b.phi *= s;
        b.scale_log2 += kRescaleStep;
    }
    record_step(record, result.outcome, p);
    return result;
}

StepResult CollisionEngine::step(BranchState& b, TrajectoryRng& rng,
                                 MeasurementRecord* record) const {
    Candidates c = candidates(b);
    if (scheme_ == Scheme::Homodyne && record) {
        const double drift = intensity(b) * std::sqrt(grid_.tau);
        if (std::abs(drift) > 1.0) ++record->clamp_events;
    }
    const double total = c.w[0] + c.w[1];
    const int index = rng.uniform() * total < c.w[1] ? 1 : 0;
    return apply(b, index, std::move(c), record);
}

StepResult CollisionEngine::step_with_outcome(BranchState& b, int outcome,
                                              MeasurementRecord* record) const {
    const int index = outcome_index(scheme_, outcome);
    return apply(b, index, candidates(b), record);
}

ConditionalDensity CollisionEngine::conditional_density(const BranchState& b) const {
    const double w = weight(b);
    if (!(w > 0.0)) throw ZeroNorm("conditional_density: non-positive trajectory weight");
    const double inv = 1.0 / w;
    ConditionalDensity rho;
    rho.rho_aa = inv * outer(b.psi, b.psi);
    rho.rho_ab = (inv * std::exp(b.log_tail_overlap)) * outer(b.psi, b.phi);
    rho.rho_bb = inv * outer(b.phi, b.phi);
    rho.c_alpha = drive_.c_alpha;
    rho.c_beta = drive_.c_beta;
    rho.t = grid_.time(b.time_index);
    return rho;
}

FieldState CollisionEngine::field_state(const BranchState& b) const {
    const cplx ca = drive_.c_alpha;
    const cplx cb = drive_.c_beta;
    FieldState f;
    f.coeff[0][0] = std::norm(ca) * norm_squared(b.psi);
    f.coeff[0][1] = ca * std::conj(cb) * inner(b.phi, b.psi);
    f.coeff[1][0] = std::conj(ca) * cb * inner(b.psi, b.phi);
    f.coeff[1][1] = std::norm(cb) * norm_squared(b.phi);
    f.tail_overlap = std::exp(b.log_tail_overlap);
    return f;
}

double CollisionEngine::intensity(const BranchState& b) const {
    const std::size_t j = std::min(b.time_index, grid_.steps ? grid_.steps - 1 : 0);
    const cplx a = grid_.steps ? alpha_[j] : cplx{};
    const cplx bb = grid_.steps ? beta_[j] : cplx{};
    const CVector Lpsi = matvec(model_.coupling, b.psi);
    const CVector Lphi = matvec(model_.coupling, b.phi);
    const CVector Apsi = Lpsi + a * b.psi;
    const CVector Aphi = Lphi + bb * b.phi;
    const cplx wab = drive_.c_alpha * std::conj(drive_.c_beta) * std::exp(b.log_tail_overlap);
    const double w = weight(b);
    if (!(w > 0.0)) throw ZeroNorm("intensity: non-positive trajectory weight");
    if (scheme_ == Scheme::Counting) {
        return (std::norm(drive_.c_alpha) * norm_squared(Apsi) +
                2.0 * (wab * inner(Aphi, Apsi)).real() +
                std::norm(drive_.c_beta) * norm_squared(Aphi)) /
               w;
    }
    return (std::norm(drive_.c_alpha) * 2.0 * inner(b.psi, Apsi).real() +
            2.0 * (wab * (inner(b.phi, Apsi) + inner(Aphi, b.psi))).real() +
            std::norm(drive_.c_beta) * 2.0 * inner(b.phi, Aphi).real()) /
           w;
}

// ---------------------------------------------------------------------------

CoherentEngine::CoherentEngine(SystemModel model, Waveform alpha, GridSpec grid, Scheme scheme)
    : model_(std::move(model)), ops_(model_), grid_(grid), scheme_(scheme) {
    alpha_ = discretize(alpha, grid_);
}

StepResult CoherentEngine::step(CVector& psi, std::size_t j, int& scale_log2, TrajectoryRng& rng,
                                MeasurementRecord* record) const {
    if (j >= grid_.steps) throw GridExhausted("collision grid exhausted");
    auto next = collide(ops_, psi, alpha_[j], grid_.tau, scheme_);
    const std::array<double, 2> w = {clamp_weight(norm_squared(next[0])),
                                     clamp_weight(norm_squared(next[1]))};
    if (scheme_ == Scheme::Homodyne && record) {
        const CVector Apsi = matvec(model_.coupling, psi) + alpha_[j] * psi;
        const double mu = 2.0 * inner(psi, Apsi).real() / norm_squared(psi);
        if (std::abs(mu * std::sqrt(grid_.tau)) > 1.0) ++record->clamp_events;
    }
    const double total = w[0] + w[1];
    if (!(total > 0.0) || !std::isfinite(total)) throw ZeroNorm("coherent step: zero weight");
    const int index = rng.uniform() * total < w[1] ? 1 : 0;
    const double p = w[index] / total;
    const double before = norm_squared(psi);
    psi = std::move(next[index]);
    if (needs_rescale(w[index])) {
        psi *= std::ldexp(1.0, kRescaleStep);
        scale_log2 += kRescaleStep;
    }
    StepResult result{outcome_value(scheme_, index), p, w[index] / before};
    record_step(record, result.outcome, p);
    return result;
}

// ---------------------------------------------------------------------------

Trajectory run_trajectory(const CollisionEngine& engine, std::uint64_t seed,
                          std::uint64_t trajectory_index, bool keep_history) {
    Trajectory traj;
    traj.record.scheme = engine.scheme();
    traj.record.tau = engine.grid().tau;
    TrajectoryRng rng(seed, trajectory_index);
    BranchState b = engine.initial_state();
    if (keep_history) traj.history.push_back(b);
    for (std::size_t j = 0; j < engine.grid().steps; ++j) {
        engine.step(b, rng, &traj.record);
        if (keep_history) traj.history.push_back(b);
    }
    return traj;
}

Trajectory replay_trajectory(const CollisionEngine& engine, const std::vector<int>& outcomes,
                             bool keep_history) {
    if (outcomes.size() > engine.grid().steps) throw GridExhausted("record longer than grid");
    Trajectory traj;
    traj.record.scheme = engine.scheme();
    traj.record.tau = engine.grid().tau;
    BranchState b = engine.initial_state();
    if (keep_history) traj.history.push_back(b);
    for (int o : outcomes) {
        engine.step_with_outcome(b, o, &traj.record);
        if (keep_history) traj.history.push_back(b);
    }
    return traj;
}

} // namespace qtraj

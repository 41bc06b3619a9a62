#include "qtraj/sme.hpp"

#include "qtraj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qtraj {

namespace {

// (L + x) rho
CMatrix jump_left(const CMatrix& L, cplx x, const CMatrix& rho) {
    CMatrix out = L * rho;
    if (x != cplx{}) out += x * rho;
    return out;
}

// rho (L + y)†
CMatrix jump_right(const CMatrix& Ldag, cplx y, const CMatrix& rho) {
    CMatrix out = rho * Ldag;
    if (y != cplx{}) out += std::conj(y) * rho;
    return out;
}

double assembled_weight(const ConditionalDensity& c, double aa, cplx ab, double bb) {
    return std::norm(c.c_alpha) * aa + 2.0 * (c.c_alpha * std::conj(c.c_beta) * ab).real() +
           std::norm(c.c_beta) * bb;
}

// ∫_t^{t+dt} (|a|^2 + |b|^2 - 2 a b*) by Simpson's rule on one panel pair.
cplx exponent_integral(const DriveSpec& drive, double t, double dt) {
    auto f = [&](double s) {
        const cplx a = drive.alpha(s);
        const cplx b = drive.beta(s);
        return std::norm(a) + std::norm(b) - 2.0 * a * std::conj(b);
    };
    return dt / 6.0 * (f(t) + 4.0 * f(t + 0.5 * dt) + f(t + dt));
}

CMatrix drift_propagator(const SystemModel& model, const CMatrix& base, cplx x, double dt) {
    CMatrix k = base + x * adjoint(model.coupling);
    for (std::size_t i = 0; i < model.dim; ++i) k(i, i) += 0.5 * std::norm(x);
    return matexp(k, -dt);
}

CMatrix generator_base(const SystemModel& model) {
    return kI * model.hamiltonian + 0.5 * (adjoint(model.coupling) * model.coupling);
}

// rho^{xy} <- s * Mx rho^{xy} My†, Mx = E_x (L + x)^dn.
void apply_jump_map(const SystemModel& model, ConditionalDensity& cond,
                    const StepPropagator& p, int dn) {
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    auto update = [&](const CMatrix& rho, cplx x, cplx y, const CMatrix& ex, const CMatrix& ey,
                      cplx s) {
        CMatrix r = rho;
        if (dn == 1) r = p.dt * jump_right(Ldag, y, jump_left(L, x, rho));
        CMatrix out = ex * r * adjoint(ey);
        if (s != cplx{1.0, 0.0}) out *= s;
        return out;
    };
    cond.rho_aa = update(cond.rho_aa, p.a, p.a, p.drift_a, p.drift_a, 1.0);
    cond.rho_ab = update(cond.rho_ab, p.a, p.b, p.drift_a, p.drift_b, p.scale_ab);
    cond.rho_bb = update(cond.rho_bb, p.b, p.b, p.drift_b, p.drift_b, 1.0);
}

void apply_diffusive_map(const SystemModel& model, ConditionalDensity& cond,
                         const StepPropagator& p, double dq) {
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    auto update = [&](const CMatrix& rho, cplx x, cplx y, const CMatrix& ex, const CMatrix& ey,
                      cplx s) {
        // (1 + A_x dq) rho (1 + A_y dq)†
        const CMatrix left = jump_left(L, x, rho);
        CMatrix r = rho + dq * left + dq * jump_right(Ldag, y, rho) +
                    (dq * dq) * jump_right(Ldag, y, left);
        CMatrix out = ex * r * adjoint(ey);
        if (s != cplx{1.0, 0.0}) out *= s;
        return out;
    };
    cond.rho_aa = update(cond.rho_aa, p.a, p.a, p.drift_a, p.drift_a, 1.0);
    cond.rho_ab = update(cond.rho_ab, p.a, p.b, p.drift_a, p.drift_b, p.scale_ab);
    cond.rho_bb = update(cond.rho_bb, p.b, p.b, p.drift_b, p.drift_b, 1.0);
}

double finish(ConditionalDensity& cond, const StepPropagator& p) {
    const double raw = cond.assembled_trace().real();
    cond.renormalize();
    cond.t = p.t + p.dt;
    return raw;
}

} // namespace

CMatrix lindblad(const SystemModel& model, const CMatrix& rho) {
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    CMatrix out = (-kI) * commutator(model.hamiltonian, rho);
    out -= 0.5 * anticommutator(Ldag * L, rho);
    out += L * rho * Ldag;
    return out;
}

CMatrix drift_term(const SystemModel& model, const CMatrix& rho, cplx left, cplx right) {
    CMatrix out = lindblad(model, rho);
    const CMatrix& L = model.coupling;
    if (left != cplx{}) out += left * commutator(rho, adjoint(L));
    if (right != cplx{}) out += std::conj(right) * commutator(L, rho);
    return out;
}

Intensities jump_intensities(const SystemModel& model, const ConditionalDensity& cond, cplx a,
                             cplx b) {
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    // Tr[(L + y)† (L + x) rho] = Tr[(L + x) rho (L + y)†]
    auto nu = [&](const CMatrix& rho, cplx x, cplx y) {
        return trace(jump_right(Ldag, y, jump_left(L, x, rho)));
    };
    Intensities r;
    r.aa = nu(cond.rho_aa, a, a).real();
    r.ab = nu(cond.rho_ab, a, b);
    r.ba = std::conj(r.ab);
    r.bb = nu(cond.rho_bb, b, b).real();
    r.total = assembled_weight(cond, r.aa, r.ab, r.bb);
    if (r.total < -kIntensityTolerance) {
        throw NegativeIntensity("counting intensity " + std::to_string(r.total) +
                                " is negative at t = " + std::to_string(cond.t));
    }
    return r;
}

Intensities diffusive_intensities(const SystemModel& model, const ConditionalDensity& cond,
                                  cplx a, cplx b) {
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    auto mu = [&](const CMatrix& rho, cplx x, cplx y) {
        return trace(L * rho) + trace(rho * Ldag) + (x + std::conj(y)) * trace(rho);
    };
    Intensities r;
    r.aa = mu(cond.rho_aa, a, a).real();
    r.ab = mu(cond.rho_ab, a, b);
    r.ba = std::conj(r.ab);
    r.bb = mu(cond.rho_bb, b, b).real();
    r.total = assembled_weight(cond, r.aa, r.ab, r.bb);
    return r;
}

StepPropagator make_propagator(const SystemModel& model, const DriveSpec& drive, double t,
                               double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const CMatrix base = generator_base(model);
    StepPropagator p;
    p.t = t;
    p.dt = dt;
    p.a = drive.alpha(t);
    p.b = drive.beta(t);
    const double mid = t + 0.5 * dt;
    p.drift_a = drift_propagator(model, base, drive.alpha(mid), dt);
    p.drift_b = drift_propagator(model, base, drive.beta(mid), dt);
    p.scale_ab = std::exp(0.5 * exponent_integral(drive, t, dt));
    return p;
}

StepPropagator make_propagator(const SystemModel& model, cplx a, cplx b, double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const CMatrix base = generator_base(model);
    StepPropagator p;
    p.dt = dt;
    p.a = a;
    p.b = b;
    p.drift_a = drift_propagator(model, base, a, dt);
    p.drift_b = drift_propagator(model, base, b, dt);
    p.scale_ab = std::exp(0.5 * (std::norm(a) + std::norm(b) - 2.0 * a * std::conj(b)) * dt);
    return p;
}

SmeSchedule::SmeSchedule(const SystemModel& model, const DriveSpec& drive, GridSpec grid)
    : model_(model), drive_(drive), grid_(grid) {
    if (!(grid_.tau > 0.0)) throw ConfigError("SME grid needs dt > 0");
    steps_.reserve(grid_.steps);
    for (std::size_t j = 0; j < grid_.steps; ++j) {
        steps_.push_back(make_propagator(model_, drive_, grid_.time(j), grid_.tau));
        log_initial_overlap_ -= std::log(steps_.back().scale_ab);
    }
}

ConditionalDensity SmeSchedule::initial_state() const {
    const CMatrix p = outer(model_.initial_state, model_.initial_state);
    ConditionalDensity c;
    c.rho_aa = p;
    c.rho_ab = std::exp(log_initial_overlap_) * p;
    c.rho_bb = p;
    c.c_alpha = drive_.c_alpha;
    c.c_beta = drive_.c_beta;
    c.t = 0.0;
    c.renormalize();
    return c;
}

JumpStep jump_sme_step(const SystemModel& model, ConditionalDensity& cond,
                       const StepPropagator& prop, TrajectoryRng& rng) {
    const double nu = jump_intensities(model, cond, prop.a, prop.b).total;
    const double p1 = nu * prop.dt;
    const int dn = rng.uniform() < std::min(p1, 1.0) ? 1 : 0;
    JumpStep s = jump_sme_step_with(model, cond, prop, dn);
    s.clamped = p1 > 1.0;
    return s;
}

JumpStep jump_sme_step_with(const SystemModel& model, ConditionalDensity& cond,
                            const StepPropagator& prop, int dn) {
    if (dn != 0 && dn != 1) throw Error("counting increment must be 0 or 1");
    JumpStep s;
    s.dn = dn;
    s.intensity = jump_intensities(model, cond, prop.a, prop.b).total;
    if (dn == 1 && s.intensity <= kZeroIntensity) {
        throw JumpAtZeroIntensity("click at t = " + std::to_string(prop.t) +
                                  " where the counting intensity is " +
                                  std::to_string(s.intensity));
    }
    apply_jump_map(model, cond, prop, dn);
    s.raw_trace = finish(cond, prop);
    return s;
}

JumpStep jump_sme_step(const SystemModel& model, ConditionalDensity& cond, cplx a, cplx b,
                       double dt, TrajectoryRng& rng) {
    StepPropagator p = make_propagator(model, a, b, dt);
    p.t = cond.t;
    return jump_sme_step(model, cond, p, rng);
}

DiffusiveStep diffusive_sme_step(const SystemModel& model, ConditionalDensity& cond,
                                 const StepPropagator& prop, TrajectoryRng& rng,
                                 NoiseMode mode) {
    const double mu = diffusive_intensities(model, cond, prop.a, prop.b).total;
    const double sd = std::sqrt(prop.dt);
    const double dw = mode == NoiseMode::Wiener ? rng.normal(sd) : (rng.bernoulli(0.5) ? sd : -sd);
    return diffusive_sme_step_with(model, cond, prop, mu * prop.dt + dw);
}

DiffusiveStep diffusive_sme_step_with(const SystemModel& model, ConditionalDensity& cond,
                                      const StepPropagator& prop, double dq) {
    DiffusiveStep s;
    s.dq = dq;
    s.intensity = diffusive_intensities(model, cond, prop.a, prop.b).total;
    apply_diffusive_map(model, cond, prop, dq);
    s.raw_trace = finish(cond, prop);
    return s;
}

DiffusiveStep diffusive_sme_step(const SystemModel& model, ConditionalDensity& cond, cplx a,
                                 cplx b, double dt, TrajectoryRng& rng, NoiseMode mode) {
    StepPropagator p = make_propagator(model, a, b, dt);
    p.t = cond.t;
    return diffusive_sme_step(model, cond, p, rng, mode);
}

// ---------------------------------------------------------------------------

CMatrix AprioriState::assembled(cplx c_alpha, cplx c_beta) const {
    ConditionalDensity c{varrho_aa, varrho_ab, varrho_bb, c_alpha, c_beta, t};
    return c.assembled();
}

AprioriState initial_apriori(const SystemModel& model, const DriveSpec& drive,
                             std::size_t overlap_panels) {
    const CMatrix p = outer(model.initial_state, model.initial_state);
    const cplx k = overlap(drive.alpha, drive.beta, 0.0, drive.horizon(), overlap_panels);
    return AprioriState{p, k * p, p, 0.0};
}

AprioriState master_step(const SystemModel& model, const AprioriState& ap,
                         const DriveSpec& drive, double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    struct Triple {
        CMatrix aa, ab, bb;
    };
    // drift_term in the equivalent form
    //   -K_x rho - rho K_y† + (L + x) rho (L + y)† + (|x|^2 + |y|^2 - 2 x y*) rho / 2,
    // which needs fewer products.
    const CMatrix& L = model.coupling;
    const CMatrix Ldag = adjoint(L);
    const CMatrix base = generator_base(model);
    auto generator = [&](cplx x) {
        CMatrix k = base + x * Ldag;
        for (std::size_t i = 0; i < model.dim; ++i) k(i, i) += 0.5 * std::norm(x);
        return k;
    };
    auto drift = [&](const CMatrix& rho, const CMatrix& kx, const CMatrix& ky, cplx x, cplx y) {
        CMatrix out = jump_right(Ldag, y, jump_left(L, x, rho));
        out -= kx * rho;
        out -= rho * adjoint(ky);
        const cplx s = 0.5 * (std::norm(x) + std::norm(y) - 2.0 * x * std::conj(y));
        if (s != cplx{}) out += s * rho;
        return out;
    };
    auto rhs = [&](double t, const Triple& s) {
        const cplx a = drive.alpha(t);
        const cplx b = drive.beta(t);
        const CMatrix ka = generator(a);
        const CMatrix kb = generator(b);
        return Triple{drift(s.aa, ka, ka, a, a), drift(s.ab, ka, kb, a, b),
                      drift(s.bb, kb, kb, b, b)};
    };
    auto axpy = [](const Triple& s, cplx h, const Triple& k) {
        return Triple{s.aa + h * k.aa, s.ab + h * k.ab, s.bb + h * k.bb};
    };
    const Triple y{ap.varrho_aa, ap.varrho_ab, ap.varrho_bb};
    const double t = ap.t;
    const Triple k1 = rhs(t, y);
    const Triple k2 = rhs(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
    const Triple k3 = rhs(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
    const Triple k4 = rhs(t + dt, axpy(y, dt, k3));
    const cplx h = dt / 6.0;
    AprioriState out;
    out.varrho_aa = ap.varrho_aa + h * (k1.aa + 2.0 * k2.aa + 2.0 * k3.aa + k4.aa);
    out.varrho_ab = ap.varrho_ab + h * (k1.ab + 2.0 * k2.ab + 2.0 * k3.ab + k4.ab);
    out.varrho_bb = ap.varrho_bb + h * (k1.bb + 2.0 * k2.bb + 2.0 * k3.bb + k4.bb);
    out.t = t + dt;
    return out;
}

namespace {

CMatrix pairwise_sum(const std::vector<CMatrix>& terms, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return terms[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(terms, lo, mid) + pairwise_sum(terms, mid, hi);
}

} // namespace

CMatrix pairwise_mean(const std::vector<CMatrix>& terms) {
    if (terms.empty()) throw Error("cannot average an empty set");
    CMatrix sum = pairwise_sum(terms, 0, terms.size());
    sum *= 1.0 / static_cast<double>(terms.size());
    return sum;
}

CMatrix average_trajectories(const std::vector<ConditionalDensity>& runs) {
    std::vector<CMatrix> terms;
    terms.reserve(runs.size());
    for (const auto& r : runs) terms.push_back(r.assembled());
    return pairwise_mean(terms);
}

} // namespace qtraj

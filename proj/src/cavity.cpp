#include "qtraj/cavity.hpp"

#include "qtraj/density.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qtraj {

namespace {

cplx decay_rate(const CavityParams& p) { return cplx(0.5 * p.gamma, p.omega0); }

void check_params(const CavityParams& p) {
    if (!(p.omega0 > 0.0)) throw ConfigError("cavity omega0 must be positive");
    if (!(p.gamma > 0.0)) throw ConfigError("cavity gamma must be positive");
    if (p.n_max < 1) throw ConfigError("cavity n_max must be at least 1");
}

} // namespace

SystemModel cavity_model(const CavityParams& params) {
    check_params(params);
    const CMatrix a = ops::annihilation(params.n_max);
    return make_system_model(params.omega0 * ops::number(params.n_max),
                             std::sqrt(params.gamma) * a, coherent_fock(params.u, params.n_max));
}

double fock_tail(cplx v, std::size_t n_max) {
    const double r2 = std::norm(v);
    if (r2 == 0.0) return 0.0;
    double tail = 0.0;
    for (std::size_t n = n_max + 1;; ++n) {
        const double nn = static_cast<double>(n);
        const double term = std::exp(-r2 + nn * std::log(r2) - std::lgamma(nn + 1.0));
        tail += term;
        if (nn > r2 && term < 1e-18 * std::max(tail, 1e-300)) break;
        if (n > n_max + 10000) break;
    }
    return tail;
}

CVector coherent_fock(cplx v, std::size_t n_max) {
    const double tail = fock_tail(v, n_max);
    if (tail > kFockTailBound) {
        throw TruncationTooSmall("n_max = " + std::to_string(n_max) +
                                 " truncates coherent amplitude |v| = " +
                                 std::to_string(std::abs(v)) + " (tail " + std::to_string(tail) +
                                 ")");
    }
    CVector out(n_max + 1);
    out[0] = std::exp(-0.5 * std::norm(v));
    for (std::size_t n = 1; n <= n_max; ++n) {
        out[n] = out[n - 1] * v / std::sqrt(static_cast<double>(n));
    }
    out *= 1.0 / std::sqrt(norm_squared(out));
    return out;
}

cplx coherent_overlap(cplx g, cplx f) {
    return std::exp(-0.5 * (std::norm(g) + std::norm(f) - 2.0 * std::conj(g) * f));
}

Amplitudes amplitudes(const CavityParams& params, const Waveform& alpha, const Waveform& beta,
                      double t, std::size_t panels) {
    if (t < 0.0) throw Error("amplitudes: negative time");
    const cplx k = decay_rate(params);
    const double sg = std::sqrt(params.gamma);
    Amplitudes out{params.u, params.u};
    if (t == 0.0) return out;
    std::size_t n = std::max<std::size_t>(2, panels + panels % 2);
    const double h = t / static_cast<double>(n);
    cplx ia{}, ib{};
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = h * static_cast<double>(i);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const cplx e = std::exp(k * s);
        ia += w * e * alpha(s);
        ib += w * e * beta(s);
    }
    ia *= h / 3.0;
    ib *= h / 3.0;
    const cplx damp = std::exp(-k * t);
    out.f = damp * (params.u - sg * ia);
    out.g = damp * (params.u - sg * ib);
    return out;
}

AmplitudeTable::AmplitudeTable(const CavityParams& params, const DriveSpec& drive,
                               GridSpec grid)
    : grid_(grid) {
    const cplx k = decay_rate(params);
    const double sg = std::sqrt(params.gamma);
    const double h = 0.5 * grid_.tau;
    const std::size_t points = 2 * grid_.steps + 1;
    values_.reserve(points);
    cplx ia{}, ib{};
    auto phi = [&](double s, const Waveform& w) { return std::exp(k * s) * w(s); };
    for (std::size_t i = 0; i < points; ++i) {
        const double t = h * static_cast<double>(i);
        if (i > 0) {
            const double t0 = t - h;
            const double tm = t0 + 0.5 * h;
            ia += h / 6.0 * (phi(t0, drive.alpha) + 4.0 * phi(tm, drive.alpha) + phi(t, drive.alpha));
            ib += h / 6.0 * (phi(t0, drive.beta) + 4.0 * phi(tm, drive.beta) + phi(t, drive.beta));
        }
        const cplx damp = std::exp(-k * t);
        values_.push_back({damp * (params.u - sg * ia), damp * (params.u - sg * ib)});
    }
}

CMatrix apriori_state(const CavityParams& params, const DriveSpec& drive, double t,
                      std::size_t panels) {
    check_params(params);
    const Amplitudes amp = amplitudes(params, drive.alpha, drive.beta, t, panels);
    const CVector f = coherent_fock(amp.f, params.n_max);
    const CVector g = coherent_fock(amp.g, params.n_max);
    const cplx k = overlap(drive.alpha, drive.beta, 0.0, drive.horizon(), panels);
    ConditionalDensity c;
    c.rho_aa = outer(f, f);
    c.rho_ab = (k / coherent_overlap(amp.g, amp.f)) * outer(f, g);
    c.rho_bb = outer(g, g);
    c.c_alpha = drive.c_alpha;
    c.c_beta = drive.c_beta;
    c.t = t;
    return c.assembled();
}

// ---------------------------------------------------------------------------

CavityTrajectory::CavityTrajectory(const CavityParams& params, const DriveSpec& drive,
                                   GridSpec grid)
    : params_(params), drive_(drive), table_(params, drive, grid) {
    check_params(params_);
    overlap_ = overlap(drive_.alpha, drive_.beta, 0.0, drive_.horizon(), overlap_panels(grid));
}

GCoefficients CavityTrajectory::initial() const {
    GCoefficients g;
    normalize(g);
    return g;
}

double CavityTrajectory::trace(const GCoefficients& g) const {
    return std::norm(drive_.c_alpha) * g.g_aa.real() +
           2.0 * (drive_.c_alpha * std::conj(drive_.c_beta) * overlap_ * g.g_ab).real() +
           std::norm(drive_.c_beta) * g.g_bb.real();
}

cplx CavityTrajectory::field_a(std::size_t k) const {
    const double t = 0.5 * table_.grid().tau * static_cast<double>(k);
    return std::sqrt(params_.gamma) * table_.half(k).f + drive_.alpha(t);
}

cplx CavityTrajectory::field_b(std::size_t k) const {
    const double t = 0.5 * table_.grid().tau * static_cast<double>(k);
    return std::sqrt(params_.gamma) * table_.half(k).g + drive_.beta(t);
}

double CavityTrajectory::counting_intensity(const GCoefficients& g) const {
    const cplx a = field_a(2 * g.step);
    const cplx b = field_b(2 * g.step);
    return std::norm(drive_.c_alpha) * std::norm(a) * g.g_aa.real() +
           2.0 * (drive_.c_alpha * std::conj(drive_.c_beta) * a * std::conj(b) * g.g_ab *
                  overlap_)
                     .real() +
           std::norm(drive_.c_beta) * std::norm(b) * g.g_bb.real();
}

double CavityTrajectory::homodyne_intensity(const GCoefficients& g) const {
    const cplx a = field_a(2 * g.step);
    const cplx b = field_b(2 * g.step);
    return std::norm(drive_.c_alpha) * 2.0 * a.real() * g.g_aa.real() +
           2.0 * (drive_.c_alpha * std::conj(drive_.c_beta) * (a + std::conj(b)) * g.g_ab *
                  overlap_)
                     .real() +
           std::norm(drive_.c_beta) * 2.0 * b.real() * g.g_bb.real();
}

void CavityTrajectory::decay(GCoefficients& g, std::size_t j) const {
    const double dt = table_.grid().tau;
    cplx iaa{}, iab{}, ibb{};
    for (int i = 0; i < 3; ++i) {
        const double w = (i == 1 ? 4.0 : 1.0) * dt / 6.0;
        const cplx a = field_a(2 * j + i);
        const cplx b = field_b(2 * j + i);
        iaa += w * std::norm(a);
        iab += w * a * std::conj(b);
        ibb += w * std::norm(b);
    }
    g.g_aa *= std::exp(-iaa);
    g.g_ab *= std::exp(-iab);
    g.g_bb *= std::exp(-ibb);
}

void CavityTrajectory::normalize(GCoefficients& g) const {
    const double tr = trace(g);
    if (!(tr > 0.0) || !std::isfinite(tr)) throw ZeroNorm("cavity G coefficients lost their norm");
    g.g_aa = g.g_aa.real() / tr;
    g.g_ab /= tr;
    g.g_bb = g.g_bb.real() / tr;
    g.g_ba = std::conj(g.g_ab);
}

void CavityTrajectory::g_counting_step(GCoefficients& g, int dn) const {
    const std::size_t j = g.step;
    if (j >= table_.grid().steps) throw GridExhausted("cavity grid exhausted");
    if (dn != 0 && dn != 1) throw Error("counting increment must be 0 or 1");
    if (dn == 1) {
        const double nu = counting_intensity(g);
        if (nu <= 1e-12) {
            throw JumpAtZeroIntensity("cavity click at t = " + std::to_string(g.t) +
                                      " where the counting intensity is " + std::to_string(nu));
        }
        const cplx a = field_a(2 * j);
        const cplx b = field_b(2 * j);
        g.g_aa *= std::norm(a);
        g.g_ab *= a * std::conj(b);
        g.g_bb *= std::norm(b);
    }
    decay(g, j);
    normalize(g);
    g.step = j + 1;
    g.t = table_.grid().time(g.step);
}

int CavityTrajectory::g_counting_step(GCoefficients& g, TrajectoryRng& rng) const {
    const double p = counting_intensity(g) * table_.grid().tau;
    const int dn = rng.uniform() < std::min(p, 1.0) ? 1 : 0;
    g_counting_step(g, dn);
    return dn;
}

void CavityTrajectory::g_homodyne_step(GCoefficients& g, double dq) const {
    const std::size_t j = g.step;
    if (j >= table_.grid().steps) throw GridExhausted("cavity grid exhausted");
    const cplx a = field_a(2 * j);
    const cplx b = field_b(2 * j);
    const cplx ka = 1.0 + a * dq;
    const cplx kb = 1.0 + b * dq;
    g.g_aa *= std::norm(ka);
    g.g_ab *= ka * std::conj(kb);
    g.g_bb *= std::norm(kb);
    decay(g, j);
    normalize(g);
    g.step = j + 1;
    g.t = table_.grid().time(g.step);
}

double CavityTrajectory::g_homodyne_step(GCoefficients& g, TrajectoryRng& rng) const {
    const double dt = table_.grid().tau;
    const double dq = homodyne_intensity(g) * dt + rng.normal(std::sqrt(dt));
    g_homodyne_step(g, dq);
    return dq;
}

CMatrix CavityTrajectory::state(const GCoefficients& g) const {
    const Amplitudes& amp = table_.at_step(g.step);
    const CVector f = coherent_fock(amp.f, params_.n_max);
    const CVector gv = coherent_fock(amp.g, params_.n_max);
    ConditionalDensity c;
    c.rho_aa = g.g_aa * outer(f, f);
    c.rho_ab = (overlap_ / coherent_overlap(amp.g, amp.f) * g.g_ab) * outer(f, gv);
    c.rho_bb = g.g_bb * outer(gv, gv);
    c.c_alpha = drive_.c_alpha;
    c.c_beta = drive_.c_beta;
    c.t = g.t;
    return c.assembled();
}

} // namespace qtraj

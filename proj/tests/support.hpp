#pragma once

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/operators.hpp"

#include <cmath>
#include <random>

namespace qtraj::test {

inline CMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix m(r, c);
    for (auto& z : m.values()) z = {n(gen), n(gen)};
    return m;
}

inline CVector random_vector(std::size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    CVector v(d);
    for (auto& z : v.values()) z = {n(gen), n(gen)};
    return v;
}

inline CMatrix random_density(std::size_t d, std::mt19937_64& gen) {
    const CMatrix a = random_matrix(d, d, gen);
    CMatrix rho = a * adjoint(a);
    rho *= 1.0 / trace(rho).real();
    return rho;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline double max_abs_diff(const CVector& a, const CVector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Two-level atom, H = sz/2, L = sm.
inline SystemModel qubit(CVector psi = {0.0, 1.0}) {
    CMatrix h = ops::sigma_z();
    h *= 0.5;
    return make_system_model(h, ops::sigma_minus(), psi);
}

// Even cat c(|a> + |-a>) with constant amplitudes on [0, horizon].
inline DriveSpec even_cat(cplx a, double horizon) {
    DriveSpec d;
    d.c_alpha = 1.0;
    d.c_beta = 1.0;
    d.alpha = Waveform::constant(a, horizon);
    d.beta = Waveform::constant(-a, horizon);
    return normalized(d);
}

inline DriveSpec coherent(cplx a, double horizon) {
    DriveSpec d;
    d.alpha = Waveform::constant(a, horizon);
    d.beta = Waveform::zero(horizon);
    return d;
}

} // namespace qtraj::test

#pragma once

#include "qtraj/errors.hpp"
#include "qtraj/linalg.hpp"

#include <cmath>

namespace qtraj {

// Conditional system state for a field in c_a|alpha> + c_b|beta>:
//
//   rho = |c_a|^2 rho_aa + c_a c_b* rho_ab + c_a* c_b rho_ba + |c_b|^2 rho_bb,
//
// with rho_ba = rho_ab† kept implicit.
struct ConditionalDensity {
    CMatrix rho_aa;
    CMatrix rho_ab;
    CMatrix rho_bb;
    cplx c_alpha{1.0, 0.0};
    cplx c_beta{0.0, 0.0};
    double t = 0.0;

    CMatrix rho_ba() const { return adjoint(rho_ab); }
    CMatrix assembled() const;
    cplx assembled_trace() const;
    // Divides all three operators by the assembled trace.
    void renormalize();
};

inline CMatrix ConditionalDensity::assembled() const {
    const cplx w_ab = c_alpha * std::conj(c_beta);
    CMatrix rho = std::norm(c_alpha) * rho_aa;
    rho += std::norm(c_beta) * rho_bb;
    if (w_ab != cplx{}) {
        CMatrix cross = w_ab * rho_ab;
        rho += cross;
        rho += adjoint(cross);
    }
    return rho;
}

inline cplx ConditionalDensity::assembled_trace() const {
    const cplx w_ab = c_alpha * std::conj(c_beta);
    return std::norm(c_alpha) * trace(rho_aa) + std::norm(c_beta) * trace(rho_bb) +
           2.0 * (w_ab * trace(rho_ab)).real();
}

inline void ConditionalDensity::renormalize() {
    const double tr = assembled_trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw ZeroNorm("conditional state has non-positive trace");
    const double inv = 1.0 / tr;
    rho_aa *= inv;
    rho_ab *= inv;
    rho_bb *= inv;
}

} // namespace qtraj
